// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use chrono::{TimeZone, Utc};
use vcm::ingest::{open_export, scan_repository, BranchPolicy, ExportWriter};
use vcm::testkit::RepoBuilder;
use vcm::{CommitRecord, DateField, ScanConfig};

const T0: i64 = 1_546_300_800; // 2019-01-01T00:00:00Z
const DAY: i64 = 86_400;

fn scan(path: &Path, cfg: &ScanConfig) -> Vec<CommitRecord> {
    scan_repository(path, cfg)
        .unwrap()
        .collect::<Result<Vec<_>, _>>()
        .unwrap()
}

fn ids(records: &[CommitRecord]) -> BTreeSet<String> {
    records.iter().map(|r| r.commit_id.clone()).collect()
}

fn rev_list_count(path: &Path) -> usize {
    let out = Command::new("git")
        .args(["rev-list", "--all", "--count"])
        .current_dir(path)
        .output()
        .expect("git on PATH");
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap().trim().parse().unwrap()
}

#[test]
fn linear_history_yields_every_commit_once() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = RepoBuilder::init(dir.path()).unwrap();
    let oids = b
        .linear(&["setup.py", "src"], &[("one", T0), ("two", T0 + DAY), ("Fix CVE-2019-1234", T0 + 2 * DAY)])
        .unwrap();
    let recs = scan(dir.path(), &ScanConfig::default());
    assert_eq!(recs.len(), 3);
    assert_eq!(ids(&recs), oids.iter().map(|o| o.to_string()).collect());
    // topological order: children first
    assert_eq!(recs[0].commit_id, oids[2].to_string());
    assert_eq!(recs[0].message, "Fix CVE-2019-1234");
    assert_eq!(recs[0].committer_date, Utc.timestamp_opt(T0 + 2 * DAY, 0).unwrap());
    let root: Vec<&str> = recs[0].root_entries.iter().collect();
    assert_eq!(root, ["setup.py", "src"]);
    let label = dir.path().file_name().unwrap().to_str().unwrap();
    assert!(recs.iter().all(|r| r.repo_id == label));
}

#[test]
fn diamond_merge_counts_each_revision_once() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = RepoBuilder::init(dir.path()).unwrap();
    let base = b.commit("main", &[], &["index.js"], "base", T0).unwrap();
    let left = b.commit("left", &[base], &["index.js"], "left", T0 + DAY).unwrap();
    let right = b.commit("main", &[base], &["index.js"], "right", T0 + 2 * DAY).unwrap();
    b.commit("main", &[right, left], &["index.js"], "merge", T0 + 3 * DAY).unwrap();
    let recs = scan(dir.path(), &ScanConfig::default());
    assert_eq!(recs.len(), 4);
    assert_eq!(recs.len(), rev_list_count(dir.path()));
}

#[test]
fn shared_history_across_branches_is_not_double_counted() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = RepoBuilder::init(dir.path()).unwrap();
    let mut tip = None;
    for i in 0..5 {
        let parents: Vec<_> = tip.into_iter().collect();
        tip = Some(b.commit("main", &parents, &["app.js"], &format!("shared {i}"), T0 + i * DAY).unwrap());
    }
    let fork = tip.unwrap();
    let mut main_tip = fork;
    let mut dev_tip = fork;
    for i in 0..2 {
        main_tip = b.commit("main", &[main_tip], &["app.js"], &format!("main {i}"), T0 + (10 + i) * DAY).unwrap();
    }
    dev_tip = b.commit("dev", &[dev_tip], &["app.js"], "dev 0", T0 + 20 * DAY).unwrap();
    let _ = (main_tip, dev_tip);

    let all = scan(dir.path(), &ScanConfig::default());
    assert_eq!(all.len(), 8);
    assert_eq!(all.len(), rev_list_count(dir.path()));
    assert_eq!(ids(&all).len(), 8);

    let default_only = ScanConfig { branches: BranchPolicy::DefaultBranch, ..Default::default() };
    assert_eq!(scan(dir.path(), &default_only).len(), 7);
}

#[test]
fn date_window_uses_the_configured_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = RepoBuilder::init(dir.path()).unwrap();
    b.linear(&["setup.py"], &[("a", T0), ("b", T0 + DAY), ("c", T0 + 2 * DAY)]).unwrap();
    let cfg = ScanConfig {
        date_field: DateField::Author,
        since: Some(Utc.timestamp_opt(T0 + DAY, 0).unwrap()),
        until: Some(Utc.timestamp_opt(T0 + 2 * DAY, 0).unwrap()),
        ..Default::default()
    };
    let recs = scan(dir.path(), &cfg);
    assert_eq!(recs.iter().map(|r| r.message.as_str()).collect::<Vec<_>>(), ["b"]);
}

#[test]
fn bare_clone_label_drops_git_suffix() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("work");
    RepoBuilder::init(&src).unwrap().linear(&["setup.py"], &[("a", T0)]).unwrap();
    let bare = dir.path().join("project.git");
    let ok = Command::new("git")
        .args(["clone", "--bare", "-q"])
        .arg(&src)
        .arg(&bare)
        .status()
        .unwrap();
    assert!(ok.success());
    let recs = scan(&bare, &ScanConfig::default());
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].repo_id, "project");
}

#[test]
fn empty_and_missing_repositories() {
    let dir = tempfile::tempdir().unwrap();
    RepoBuilder::init(dir.path()).unwrap();
    assert_eq!(scan(dir.path(), &ScanConfig::default()).len(), 0);
    assert!(scan_repository(&dir.path().join("nope"), &ScanConfig::default()).is_err());
}

#[test]
fn export_round_trip_preserves_records() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("repo");
    let mut b = RepoBuilder::init(&repo).unwrap();
    b.linear(&["setup.py", "\u{e9}t\u{e9}.txt"], &[("multi\nline \"quoted\" message", T0), ("CVE-2019-0001", T0 + 1)])
        .unwrap();
    let recs = scan(&repo, &ScanConfig::default());

    let export = dir.path().join("commits.ndjson");
    let mut w = ExportWriter::create(&export).unwrap();
    for r in &recs {
        w.write(r).unwrap();
    }
    assert_eq!(w.finish().unwrap(), 2);

    let back: Vec<CommitRecord> = open_export(&export).unwrap().collect::<Result<_, _>>().unwrap();
    assert_eq!(back, recs);
    let report = vcm::store::validate_file(&export, &vcm::store::SchemaVersion::commits()).unwrap();
    assert!(report.violations.is_empty(), "{:?}", report.violations);
}
