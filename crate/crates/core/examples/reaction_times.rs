// SPDX-License-Identifier: Apache-2.0

//! Reaction-time statistics over a handful of in-memory mitigation records.

use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use vcm::analytics::{reaction_by_cwe, reaction_by_year, reaction_days, GroupKey};
use vcm::nvd::{ResolvedRefs, Severity};
use vcm::{CveEntry, CweId, MitigationRecord, ProjectLanguage, SeriesPolicy};

fn entry(id: &str, y: i32, m: u32, d: u32, cwes: &[u32]) -> CveEntry {
    CveEntry {
        id: id.parse().unwrap(),
        publish_date: Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap(),
        cwe_ids: cwes.iter().map(|&n| CweId::new(n).unwrap()).collect(),
        severity: Severity::High,
        base_impact_score: Some(5.9),
    }
}

fn record(commit: &str, lang: ProjectLanguage, (y, m, d): (i32, u32, u32), cves: &[&CveEntry]) -> MitigationRecord {
    MitigationRecord {
        commit_id: commit.into(),
        repo_id: "demo".into(),
        language: lang,
        date: Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap(),
        resolved: ResolvedRefs {
            cwes: cves.iter().flat_map(|e| e.cwe_ids.iter().copied()).collect(),
            resolved_cves: cves.iter().map(|e| (e.id.clone(), (*e).clone())).collect(),
            unresolved_cves: vec![],
            direct_cwes: BTreeSet::new(),
        },
    }
}

fn main() {
    let xss = entry("CVE-2018-3728", 2018, 6, 1, &[79, 200]);
    let dos = entry("CVE-2018-3721", 2018, 6, 1, &[400]);
    let records = [
        record("a1", ProjectLanguage::JavaScript, (2018, 7, 1), &[&xss]),
        record("a2", ProjectLanguage::JavaScript, (2018, 7, 6), &[&xss, &dos]),
        record("b1", ProjectLanguage::Python, (2018, 5, 30), &[&dos]),
        record("c1", ProjectLanguage::Both, (2018, 6, 11), &[&xss]),
    ];
    for r in &records {
        for (id, e) in &r.resolved.resolved_cves {
            println!("{} {id}: {} days", r.commit_id, reaction_days(r.date, e.publish_date));
        }
    }

    let policy = SeriesPolicy::default();
    println!("\nby year");
    for s in reaction_by_year(&records, policy) {
        let GroupKey::Year(y) = s.key else { continue };
        println!("  {y} {}: n={} mean={:.3} nonnegative mean={:?}", s.language, s.n, s.mean_days, s.mean_days_nonnegative);
    }
    println!("by CWE");
    for s in reaction_by_cwe(&records, policy, None) {
        let GroupKey::Cwe(c) = s.key else { continue };
        println!("  {c} {}: n={} mean={:.3}", s.language, s.n, s.mean_days);
    }
}
