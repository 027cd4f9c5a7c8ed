// SPDX-License-Identifier: Apache-2.0

//! Report file contents.
//!
//! CSV is RFC 4180 with LF line endings and a mandatory header row; decimals
//! carry exactly three fractional digits. Rows are ordered by year ascending,
//! then series (JS, PY, UNKNOWN), or by CWE number ascending.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::analytics::{
    cwe_distribution, ratio_per_100k, reaction_by_cwe, reaction_by_year, top_cwes, year_counts,
    CommitTotals, CweDistribution, GroupKey, MitigationRecord, ReactionStat, SeriesPolicy,
    YearCounts, YearLangStat,
};
use crate::lang::ProjectLanguage;
use crate::refs::CweId;

pub const YEAR_STATS_FILE: &str = "year_stats.csv";
pub const RATIO_FILE: &str = "ratio.csv";
pub const CWE_COUNTS_FILE: &str = "cwe_counts.csv";
pub const REACTION_BY_YEAR_FILE: &str = "reaction_by_year.csv";
pub const REACTION_BY_CWE_FILE: &str = "reaction_by_cwe.csv";
pub const OVERLAP_FILE: &str = "overlap.json";

pub const REPORT_FILES: [&str; 6] = [
    YEAR_STATS_FILE,
    RATIO_FILE,
    CWE_COUNTS_FILE,
    REACTION_BY_YEAR_FILE,
    REACTION_BY_CWE_FILE,
    OVERLAP_FILE,
];

const TOTALS_HEADER: [&str; 3] = ["year", "language", "total_commits"];

pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_owned()
    } else {
        s
    }
}

fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

/// Every statistic the analyze step reports.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub series: Vec<ProjectLanguage>,
    pub counts: YearCounts,
    pub ratios: Vec<YearLangStat>,
    pub distribution: CweDistribution,
    pub top: BTreeSet<CweId>,
    pub by_year: Vec<ReactionStat>,
    pub by_cwe: Vec<ReactionStat>,
}

impl Analysis {
    pub fn compute(
        records: &[MitigationRecord],
        totals: &CommitTotals,
        policy: SeriesPolicy,
        threshold: u64,
    ) -> Self {
        let counts = year_counts(records, totals, policy);
        let distribution = cwe_distribution(records, policy);
        let top = top_cwes(&distribution, threshold);
        Self {
            series: policy.series(),
            ratios: ratio_per_100k(&counts),
            by_year: reaction_by_year(records, policy),
            by_cwe: reaction_by_cwe(records, policy, Some(&top)),
            counts,
            distribution,
            top,
        }
    }

    /// Per-year mitigation and total commit counts, one column pair per series.
    pub fn year_stats_csv(&self) -> String {
        let mut header = vec!["year".to_owned()];
        header.extend(self.series.iter().map(|s| format!("vuln_{s}")));
        header.extend(self.series.iter().map(|s| format!("total_{s}")));
        let rows = self.counts.years().into_iter().map(|y| {
            let mut row = vec![y.to_string()];
            row.extend(self.series.iter().map(|&s| self.counts.vuln(y, s).to_string()));
            row.extend(self.series.iter().map(|&s| self.counts.total(y, s).to_string()));
            row
        });
        csv_text(&header, rows)
    }

    pub fn ratio_csv(&self) -> String {
        let header = strings(&["year", "language", "vuln_commits", "total_commits", "ratio_per_100k"]);
        let rows = self.ratios.iter().map(|r| {
            vec![
                r.year.to_string(),
                r.language.to_string(),
                r.vuln_commits.to_string(),
                r.total_commits.to_string(),
                r.ratio_per_100k.map(fmt3).unwrap_or_default(),
            ]
        });
        csv_text(&header, rows)
    }

    pub fn cwe_counts_csv(&self) -> String {
        let mut header = vec!["cwe".to_owned()];
        header.extend(self.series.iter().map(ToString::to_string));
        let rows = self.distribution.stats.iter().map(|s| {
            let mut row = vec![s.cwe.to_string()];
            row.extend(self.series.iter().map(|&l| s.count(l).to_string()));
            row
        });
        csv_text(&header, rows)
    }

    pub fn reaction_by_year_csv(&self) -> String {
        reaction_csv("year", &self.by_year)
    }

    pub fn reaction_by_cwe_csv(&self) -> String {
        reaction_csv("cwe", &self.by_cwe)
    }

    pub fn overlap_json(&self) -> String {
        #[derive(Serialize)]
        struct OverlapFile {
            languages: [&'static str; 2],
            shared: Vec<String>,
            #[serde(rename = "only_JS")]
            only_js: Vec<String>,
            #[serde(rename = "only_PY")]
            only_py: Vec<String>,
            shared_count: usize,
            #[serde(rename = "only_JS_count")]
            only_js_count: usize,
            #[serde(rename = "only_PY_count")]
            only_py_count: usize,
        }
        let names = |s: &BTreeSet<CweId>| s.iter().map(ToString::to_string).collect();
        let o = &self.distribution.overlap;
        let file = OverlapFile {
            languages: ["JS", "PY"],
            shared: names(&o.shared),
            only_js: names(&o.only_js),
            only_py: names(&o.only_py),
            shared_count: o.shared.len(),
            only_js_count: o.only_js.len(),
            only_py_count: o.only_py.len(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("plain data");
        text.push('\n');
        text
    }

    /// `(file name, contents)` for every report file.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        vec![
            (YEAR_STATS_FILE, self.year_stats_csv()),
            (RATIO_FILE, self.ratio_csv()),
            (CWE_COUNTS_FILE, self.cwe_counts_csv()),
            (REACTION_BY_YEAR_FILE, self.reaction_by_year_csv()),
            (REACTION_BY_CWE_FILE, self.reaction_by_cwe_csv()),
            (OVERLAP_FILE, self.overlap_json()),
        ]
    }
}

fn reaction_csv(key: &str, stats: &[ReactionStat]) -> String {
    let header = strings(&[key, "language", "n", "mean_days", "n_nonnegative", "mean_days_nonnegative"]);
    let rows = stats.iter().map(|s| {
        let key = match s.key {
            GroupKey::Year(y) => y.to_string(),
            GroupKey::Cwe(c) => c.to_string(),
        };
        vec![
            key,
            s.language.to_string(),
            s.n.to_string(),
            fmt3(s.mean_days),
            s.n_nonnegative.to_string(),
            s.mean_days_nonnegative.map(fmt3).unwrap_or_default(),
        ]
    });
    csv_text(&header, rows)
}

pub fn totals_csv(totals: &CommitTotals) -> String {
    let rows = totals
        .iter()
        .map(|(&(y, l), n)| vec![y.to_string(), l.to_string(), n.to_string()]);
    csv_text(&strings(&TOTALS_HEADER), rows)
}

pub fn read_totals(path: &Path) -> Result<CommitTotals, String> {
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let header = r.headers().map_err(|e| format!("{}: {e}", path.display()))?;
    if header.iter().ne(TOTALS_HEADER) {
        return Err(format!("{}: expected header {}", path.display(), TOTALS_HEADER.join(",")));
    }
    let mut totals = CommitTotals::new();
    for (i, row) in r.records().enumerate() {
        let bad = |why: String| format!("{}:{}: {why}", path.display(), i + 2);
        let row = row.map_err(|e| bad(e.to_string()))?;
        let year: i32 = row[0].parse().map_err(|e| bad(format!("year: {e}")))?;
        let lang: ProjectLanguage = row[1].parse().map_err(bad)?;
        let n: u64 = row[2].parse().map_err(|e| bad(format!("total_commits: {e}")))?;
        *totals.entry((year, lang)).or_default() += n;
    }
    Ok(totals)
}
