// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Utc};
use vcm::testkit::{feed_json, Cvss, FeedItem, RepoBuilder};

// ---------------------------------------------------------------------------
// Naive reference scanner
// ---------------------------------------------------------------------------

/// Character-by-character scanner for the identifier grammar, written without
/// regexes: a case-insensitive `cve-` followed by 4 digits, `-` and at least 4
/// digits (year >= 1999), or `cwe-` followed by its first 1 to 4 digits
/// (value >= 1). A candidate directly after a letter or digit is ignored.
pub fn naive_scan(msg: &str) -> (BTreeSet<String>, BTreeSet<u32>) {
    let chars: Vec<char> = msg.chars().collect();
    let mut cves = BTreeSet::new();
    let mut cwes = BTreeSet::new();
    let at = |i: usize, word: &str| -> bool {
        word.chars()
            .enumerate()
            .all(|(k, w)| chars.get(i + k).is_some_and(|c| c.to_ascii_lowercase() == w))
    };
    let digit_run = |from: usize| -> usize {
        let mut n = 0;
        while chars.get(from + n).is_some_and(|c| c.is_ascii_digit()) {
            n += 1;
        }
        n
    };
    for i in 0..chars.len() {
        if i > 0 && chars[i - 1].is_alphanumeric() {
            continue;
        }
        if at(i, "cve-") {
            if digit_run(i + 4) >= 4 && chars.get(i + 8) == Some(&'-') {
                let seq = digit_run(i + 9);
                if seq >= 4 {
                    let year: String = chars[i + 4..i + 8].iter().collect();
                    let digits: String = chars[i + 9..i + 9 + seq].iter().collect();
                    if year.parse::<u32>().unwrap() >= 1999 {
                        cves.insert(format!("CVE-{year}-{digits}"));
                    }
                }
            }
        } else if at(i, "cwe-") {
            let n = digit_run(i + 4).min(4);
            if n > 0 {
                let digits: String = chars[i + 4..i + 4 + n].iter().collect();
                let v: u32 = digits.parse().unwrap();
                if v >= 1 {
                    cwes.insert(v);
                }
            }
        }
    }
    (cves, cwes)
}

/// `extract_refs` in the same shape as [`naive_scan`].
pub fn library_scan(msg: &str) -> (BTreeSet<String>, BTreeSet<u32>) {
    let refs = vcm::extract_refs(msg);
    (
        refs.cves.iter().map(ToString::to_string).collect(),
        refs.cwes.iter().map(|c| c.number()).collect(),
    )
}

// ---------------------------------------------------------------------------
// End-to-end fixture: three repositories and a ten-CVE feed
// ---------------------------------------------------------------------------

pub struct FixtureCve {
    pub id: &'static str,
    pub published: &'static str,
    pub problemtypes: &'static [&'static str],
}

pub const FIXTURE_CVES: [FixtureCve; 10] = [
    FixtureCve { id: "CVE-2017-16026", published: "2017-06-04T12:00Z", problemtypes: &["CWE-79"] },
    FixtureCve { id: "CVE-2018-3721", published: "2018-06-07T02:29Z", problemtypes: &["CWE-20"] },
    FixtureCve { id: "CVE-2018-3728", published: "2018-06-07T02:29Z", problemtypes: &["CWE-79", "CWE-200"] },
    FixtureCve { id: "CVE-2018-1000620", published: "2018-07-09T20:29Z", problemtypes: &["NVD-CWE-noinfo"] },
    FixtureCve { id: "CVE-2019-10744", published: "2019-07-26T00:15Z", problemtypes: &["CWE-20", "CWE-400"] },
    FixtureCve { id: "CVE-2019-11324", published: "2019-04-18T21:29Z", problemtypes: &["CWE-295"] },
    FixtureCve { id: "CVE-2019-12387", published: "2019-06-10T12:29Z", problemtypes: &["CWE-74"] },
    FixtureCve { id: "CVE-2020-7598", published: "2020-03-11T23:15Z", problemtypes: &["CWE-20"] },
    FixtureCve { id: "CVE-2020-1747", published: "2020-03-24T14:15Z", problemtypes: &["CWE-20"] },
    FixtureCve { id: "CVE-2020-8492", published: "2020-01-30T19:15Z", problemtypes: &["NVD-CWE-Other", "CWE-400"] },
];

/// One fixture commit with its references written out by hand.
pub struct FixtureCommit {
    pub message: &'static str,
    pub date: &'static str,
    pub cves: &'static [&'static str],
    pub cwes: &'static [u32],
}

const fn c(
    message: &'static str,
    date: &'static str,
    cves: &'static [&'static str],
    cwes: &'static [u32],
) -> FixtureCommit {
    FixtureCommit { message, date, cves, cwes }
}

pub struct FixtureRepo {
    pub name: &'static str,
    pub root: &'static [&'static str],
    /// Language label the repository should classify as.
    pub language: &'static str,
    pub commits: &'static [FixtureCommit],
}

pub const FIXTURE_REPOS: [FixtureRepo; 3] = [
    FixtureRepo {
        name: "pyproj",
        root: &["README.md", "requirements.txt", "setup.py"],
        language: "PY",
        commits: &[
            c("Initial import", "2017-03-01T09:00:00Z", &[], &[]),
            c("Add command line interface", "2017-05-10T12:00:00Z", &[], &[]),
            c("Escape template output, fixes CVE-2017-16026", "2017-06-20T08:30:00Z", &["CVE-2017-16026"], &[]),
            c("Bump version", "2017-09-01T00:00:00Z", &[], &[]),
            c("Validate input length (CWE-20)", "2018-02-14T16:45:00Z", &[], &[20]),
            c("execve-safe subprocess wrapper", "2018-05-02T10:00:00Z", &[], &[]),
            c("Patch CVE-2018-3721 and add cve-2018-3721 regression test", "2018-06-08T01:00:00Z", &["CVE-2018-3721"], &[]),
            c("Refactor storage layer", "2018-11-30T23:59:59Z", &[], &[]),
            c("Fix CVE-2019-11324 (certificate validation)", "2019-04-10T00:00:00Z", &["CVE-2019-11324"], &[]),
            c("Docs: deserialization notes (cwe-502)", "2019-08-01T08:00:00Z", &[], &[502]),
            c("Handle CVE-2099-99999 placeholder", "2019-12-24T18:00:00Z", &["CVE-2099-99999"], &[]),
            c("Fix CVE-2020-8492 ReDoS", "2020-02-02T00:00:00Z", &["CVE-2020-8492"], &[]),
            c("Security: CVE-2020-1747 unsafe yaml load, CWE-20", "2020-04-01T12:00:00Z", &["CVE-2020-1747"], &[20]),
            c("Release 2.0", "2020-06-01T00:00:00Z", &[], &[]),
        ],
    },
    FixtureRepo {
        name: "jsproj",
        root: &["index.js", "package.json"],
        language: "JS",
        commits: &[
            c("init", "2017-01-15T10:00:00Z", &[], &[]),
            c("Sanitize HTML; CVE-2017-16026", "2017-07-01T00:00:00Z", &["CVE-2017-16026"], &[]),
            c("Add tests", "2017-08-08T08:08:08Z", &[], &[]),
            c("Merge lodash fix for CVE-2018-3721 and CVE-2018-3728", "2018-06-10T12:00:00Z", &["CVE-2018-3721", "CVE-2018-3728"], &[]),
            c("nvd-downloader script", "2018-07-01T00:00:00Z", &[], &[]),
            c("Fix CVE-2018-1000620 weak RNG", "2018-07-20T00:00:00Z", &["CVE-2018-1000620"], &[]),
            c("Prototype pollution CVE-2019-10744", "2019-07-30T06:00:00Z", &["CVE-2019-10744"], &[]),
            c("Fix CVE-2019-10744 again in merge helper", "2019-08-15T00:00:00Z", &["CVE-2019-10744"], &[]),
            c("Update deps, CWE-1321 guard", "2019-09-09T09:09:09Z", &[], &[1321]),
            c("XSS hardening CWE-79 CWE-0079", "2019-10-10T10:10:10Z", &[], &[79]),
            c("Glennvd-patch-1", "2020-01-05T00:00:00Z", &[], &[]),
            c("CVE-2020-7598 minimist prototype pollution", "2020-03-10T00:00:00Z", &["CVE-2020-7598"], &[]),
            c("Lint", "2020-05-05T05:05:05Z", &[], &[]),
            c("Fixed XSS (with CVE number 2020-100)", "2020-07-07T00:00:00Z", &[], &[]),
        ],
    },
    FixtureRepo {
        name: "fullstack",
        root: &["server.js", "setup.py", "static"],
        language: "BOTH",
        commits: &[
            c("Scaffold", "2018-01-01T00:00:00Z", &[], &[]),
            c("Backend: fix CVE-2018-3728 and CWE-400", "2018-06-30T00:00:00Z", &["CVE-2018-3728"], &[400]),
            c("Frontend tweaks", "2018-09-09T00:00:00Z", &[], &[]),
            c("CVE-2019-12387 CRLF injection", "2019-06-12T00:00:00Z", &["CVE-2019-12387"], &[]),
            c("Upgrade; see CVE-2019-10744, CVE-2019-11324", "2019-08-01T00:00:00Z", &["CVE-2019-10744", "CVE-2019-11324"], &[]),
            c("Notes", "2019-10-01T00:00:00Z", &[], &[]),
            c("CVE-2020-20500/330/34/345", "2020-02-01T00:00:00Z", &["CVE-2020-20500"], &[]),
            c("Fix CVE-2020-7598", "2020-03-12T00:00:00Z", &["CVE-2020-7598"], &[]),
            c("Merge branch 'dev'", "2020-04-04T00:00:00Z", &[], &[]),
            c("Patch CVE-2020-1747 and CVE-2020-8492", "2020-04-10T00:00:00Z", &["CVE-2020-1747", "CVE-2020-8492"], &[]),
            c("no CVE-id", "2020-05-01T00:00:00Z", &[], &[]),
            c("Final", "2020-06-30T00:00:00Z", &[], &[]),
        ],
    },
];

/// Top-CWE threshold used by the golden run.
pub const FIXTURE_THRESHOLD: u64 = 2;

pub fn parse_time(s: &str) -> DateTime<Utc> {
    let s = if s.len() == 17 { format!("{}:00Z", &s[..16]) } else { s.to_owned() };
    DateTime::parse_from_rfc3339(&s).unwrap().with_timezone(&Utc)
}

pub struct Fixture {
    pub repos: Vec<PathBuf>,
    pub feeds: PathBuf,
}

/// Writes the three repositories and the feed directory under `root`.
pub fn build_fixture(root: &Path) -> Fixture {
    let mut repos = Vec::new();
    for r in &FIXTURE_REPOS {
        let path = root.join(r.name);
        let mut b = RepoBuilder::init(&path).unwrap();
        let commits: Vec<(&str, i64)> = r
            .commits
            .iter()
            .map(|c| (c.message, parse_time(c.date).timestamp()))
            .collect();
        b.linear(r.root, &commits).unwrap();
        repos.push(path);
    }

    let feeds = root.join("feeds");
    std::fs::create_dir_all(&feeds).unwrap();
    let mut by_year: BTreeMap<&str, Vec<FeedItem>> = BTreeMap::new();
    for (i, cve) in FIXTURE_CVES.iter().enumerate() {
        let mut item = FeedItem::new(cve.id, cve.published, cve.problemtypes);
        item = if i % 2 == 0 {
            item.v3(Cvss::new("HIGH", 5.9))
        } else {
            item.v2(Cvss::new("MEDIUM", 2.9))
        };
        by_year.entry(&cve.id[4..8]).or_default().push(item);
    }
    for (year, items) in by_year {
        let bytes = feed_json(&items);
        if year == "2019" {
            let f = std::fs::File::create(feeds.join(format!("nvdcve-1.1-{year}.json.gz"))).unwrap();
            let mut gz = flate2::write::GzEncoder::new(f, flate2::Compression::default());
            gz.write_all(&bytes).unwrap();
            gz.finish().unwrap();
        } else {
            std::fs::write(feeds.join(format!("nvdcve-1.1-{year}.json")), bytes).unwrap();
        }
    }
    Fixture { repos, feeds }
}

// ---------------------------------------------------------------------------
// Brute-force report oracle over the hand-annotated fixture
// ---------------------------------------------------------------------------

pub struct OracleCommit {
    pub language: &'static str,
    pub date: DateTime<Utc>,
    pub cves: Vec<&'static str>,
    pub direct: Vec<u32>,
}

/// Series the oracle reports a repository language under.
pub fn oracle_series(language: &str) -> Vec<&'static str> {
    match language {
        "JS" => vec!["JS"],
        "PY" => vec!["PY"],
        "BOTH" => vec!["JS", "PY"],
        _ => vec![],
    }
}

pub fn fixture_commits() -> Vec<OracleCommit> {
    FIXTURE_REPOS
        .iter()
        .flat_map(|r| {
            r.commits.iter().map(move |c| OracleCommit {
                language: r.language,
                date: parse_time(c.date),
                cves: c.cves.to_vec(),
                direct: c.cwes.to_vec(),
            })
        })
        .collect()
}

fn cve_info(id: &str) -> Option<(DateTime<Utc>, Vec<u32>)> {
    FIXTURE_CVES.iter().find(|c| c.id == id).map(|c| {
        let cwes = c
            .problemtypes
            .iter()
            .filter_map(|p| p.strip_prefix("CWE-"))
            .map(|n| n.parse().unwrap())
            .collect();
        (parse_time(c.published), cwes)
    })
}

fn oracle_days(commit: DateTime<Utc>, published: DateTime<Utc>) -> i64 {
    ((commit.timestamp() - published.timestamp()) as f64 / 86_400.0).floor() as i64
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

/// Expected report files, computed directly from the annotations above.
pub fn oracle_reports(commits: &[OracleCommit], threshold: u64) -> BTreeMap<&'static str, String> {
    let series = ["JS", "PY"];
    let mut vuln: BTreeMap<(i32, &str), u64> = BTreeMap::new();
    let mut total: BTreeMap<(i32, &str), u64> = BTreeMap::new();
    let mut cwe_count: BTreeMap<u32, BTreeMap<&str, u64>> = BTreeMap::new();
    // (group, series) -> list of day deltas
    let mut by_year: BTreeMap<(i32, &str), Vec<i64>> = BTreeMap::new();
    let mut pairs: Vec<(&str, Vec<u32>, i64)> = Vec::new();

    for c in commits {
        let year = c.date.year();
        let is_mitigation = !c.cves.is_empty() || !c.direct.is_empty();
        let mut cwes: BTreeSet<u32> = c.direct.iter().copied().collect();
        for id in &c.cves {
            if let Some((_, cs)) = cve_info(id) {
                cwes.extend(cs);
            }
        }
        for s in oracle_series(c.language) {
            *total.entry((year, s)).or_default() += 1;
            if is_mitigation {
                *vuln.entry((year, s)).or_default() += 1;
            }
            for &w in &cwes {
                *cwe_count.entry(w).or_default().entry(s).or_default() += 1;
            }
            for id in &c.cves {
                if let Some((published, cs)) = cve_info(id) {
                    let d = oracle_days(c.date, published);
                    by_year.entry((year, s)).or_default().push(d);
                    pairs.push((s, cs, d));
                }
            }
        }
    }

    let years: BTreeSet<i32> = total.keys().chain(vuln.keys()).map(|k| k.0).collect();
    let get = |m: &BTreeMap<(i32, &str), u64>, y, s| m.get(&(y, s)).copied().unwrap_or(0);

    let mut year_stats = String::from("year,vuln_JS,vuln_PY,total_JS,total_PY\n");
    let mut ratio = String::from("year,language,vuln_commits,total_commits,ratio_per_100k\n");
    for &y in &years {
        year_stats.push_str(&format!(
            "{y},{},{},{},{}\n",
            get(&vuln, y, "JS"),
            get(&vuln, y, "PY"),
            get(&total, y, "JS"),
            get(&total, y, "PY")
        ));
        for s in series {
            let (v, t) = (get(&vuln, y, s), get(&total, y, s));
            if t > 0 {
                ratio.push_str(&format!("{y},{s},{v},{t},{}\n", f3(v as f64 * 100_000.0 / t as f64)));
            }
        }
    }

    let mut counts = String::from("cwe,JS,PY\n");
    let mut js_set = BTreeSet::new();
    let mut py_set = BTreeSet::new();
    let mut top = BTreeSet::new();
    for (w, row) in &cwe_count {
        let (j, p) = (row.get("JS").copied().unwrap_or(0), row.get("PY").copied().unwrap_or(0));
        counts.push_str(&format!("CWE-{w},{j},{p}\n"));
        if j > 0 {
            js_set.insert(*w);
        }
        if p > 0 {
            py_set.insert(*w);
        }
        if j >= threshold || p >= threshold {
            top.insert(*w);
        }
    }

    let mean_line = |key: String, s: &str, ds: &[i64]| {
        let n = ds.len();
        let mean = ds.iter().sum::<i64>() as f64 / n as f64;
        let nn: Vec<i64> = ds.iter().copied().filter(|&d| d >= 0).collect();
        let nn_mean = if nn.is_empty() {
            String::new()
        } else {
            f3(nn.iter().sum::<i64>() as f64 / nn.len() as f64)
        };
        format!("{key},{s},{n},{},{},{nn_mean}\n", f3(mean), nn.len())
    };

    let mut reaction_year = String::from("year,language,n,mean_days,n_nonnegative,mean_days_nonnegative\n");
    for ((y, s), ds) in &by_year {
        reaction_year.push_str(&mean_line(y.to_string(), s, ds));
    }

    let mut by_cwe: BTreeMap<(u32, &str), Vec<i64>> = BTreeMap::new();
    for (s, cs, d) in &pairs {
        for w in cs {
            if top.contains(w) {
                by_cwe.entry((*w, s)).or_default().push(*d);
            }
        }
    }
    let mut reaction_cwe = String::from("cwe,language,n,mean_days,n_nonnegative,mean_days_nonnegative\n");
    for ((w, s), ds) in &by_cwe {
        reaction_cwe.push_str(&mean_line(format!("CWE-{w}"), s, ds));
    }

    let list = |set: &BTreeSet<u32>| -> Vec<String> { set.iter().map(|w| format!("CWE-{w}")).collect() };
    let shared: BTreeSet<u32> = js_set.intersection(&py_set).copied().collect();
    let only_js: BTreeSet<u32> = js_set.difference(&py_set).copied().collect();
    let only_py: BTreeSet<u32> = py_set.difference(&js_set).copied().collect();
    let overlap = serde_json::json!({
        "languages": ["JS", "PY"],
        "shared": list(&shared),
        "only_JS": list(&only_js),
        "only_PY": list(&only_py),
        "shared_count": shared.len(),
        "only_JS_count": only_js.len(),
        "only_PY_count": only_py.len(),
    });

    BTreeMap::from([
        ("year_stats.csv", year_stats),
        ("ratio.csv", ratio),
        ("cwe_counts.csv", counts),
        ("reaction_by_year.csv", reaction_year),
        ("reaction_by_cwe.csv", reaction_cwe),
        ("overlap.json", overlap.to_string()),
    ])
}

/// Runs the library CLI entry point in-process.
pub fn vcm(args: &[&str]) -> i32 {
    vcm_env(args, &[])
}

pub fn vcm_env(args: &[&str], env: &[(&str, &str)]) -> i32 {
    let env: Vec<(String, String)> = env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let argv = std::iter::once("vcm").chain(args.iter().copied());
    vcm::report::cli::run(argv, &env)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
