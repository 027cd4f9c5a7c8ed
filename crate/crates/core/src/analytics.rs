// SPDX-License-Identifier: Apache-2.0

//! Mitigation records and the statistics computed over them: mitigation
//! ratios per year, CWE distributions with cross-language overlap, and
//! reaction times between CVE publication and the referencing commit.
//!
//! Everything here is order-independent. Aggregates live in ordered maps and
//! means are taken over exact integer sums, so shuffling the input records
//! never changes an output.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::{CommitRecord, DateField};
use crate::lang::{classify, ProjectLanguage};
use crate::nvd::{resolve_refs, CveEntry, NvdCache, ResolvedRefs};
use crate::refs::{classify_message, CveId, CweId};

/// Default top-CWE cut: at least this many references in one language.
pub const DEFAULT_TOP_CWE_THRESHOLD: u64 = 150;

const SECONDS_PER_DAY: i128 = 86_400;

/// A commit with at least one extracted reference, joined with its project
/// language and resolved CWE categories.
#[derive(Debug, Clone, PartialEq)]
pub struct MitigationRecord {
    pub commit_id: String,
    pub repo_id: String,
    pub language: ProjectLanguage,
    pub date: DateTime<Utc>,
    pub resolved: ResolvedRefs,
}

impl MitigationRecord {
    pub fn year(&self) -> i32 {
        self.date.year()
    }

    pub fn to_line(&self) -> RecordLine {
        RecordLine {
            repo: self.repo_id.clone(),
            commit: self.commit_id.clone(),
            language: self.language,
            date: self.date,
            resolved_cves: self.resolved.resolved_cves.iter().map(|(id, _)| id.clone()).collect(),
            unresolved_cves: self.resolved.unresolved_cves.clone(),
            direct_cwes: self.resolved.direct_cwes.iter().copied().collect(),
            cwes: self.resolved.cwes.iter().copied().collect(),
        }
    }

    /// Re-attaches cache entries to a stored line. Fails if a CVE recorded as
    /// resolved is missing from `cache`.
    pub fn from_line(line: RecordLine, cache: &NvdCache) -> Result<Self, String> {
        line.check()?;
        let resolved_cves = line
            .resolved_cves
            .into_iter()
            .map(|id| match cache.lookup(&id) {
                Some(e) => Ok((id, e.clone())),
                None => Err(format!("{id} is marked resolved but is not in the NVD cache")),
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            commit_id: line.commit,
            repo_id: line.repo,
            language: line.language,
            date: line.date,
            resolved: ResolvedRefs {
                cwes: line.cwes.into_iter().collect(),
                resolved_cves,
                unresolved_cves: line.unresolved_cves,
                direct_cwes: line.direct_cwes.into_iter().collect(),
            },
        })
    }
}

/// One line of `records.ndjson`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLine {
    pub repo: String,
    pub commit: String,
    pub language: ProjectLanguage,
    pub date: DateTime<Utc>,
    pub resolved_cves: Vec<CveId>,
    pub unresolved_cves: Vec<CveId>,
    pub direct_cwes: Vec<CweId>,
    pub cwes: Vec<CweId>,
}

impl RecordLine {
    pub fn check(&self) -> Result<(), String> {
        let resolved: BTreeSet<_> = self.resolved_cves.iter().collect();
        let unresolved: BTreeSet<_> = self.unresolved_cves.iter().collect();
        let cwes: BTreeSet<_> = self.cwes.iter().collect();
        if resolved.len() != self.resolved_cves.len()
            || unresolved.len() != self.unresolved_cves.len()
            || cwes.len() != self.cwes.len()
        {
            return Err(format!("{}: duplicate identifiers", self.commit));
        }
        if let Some(id) = resolved.intersection(&unresolved).next() {
            return Err(format!("{}: {id} both resolved and unresolved", self.commit));
        }
        if let Some(c) = self.direct_cwes.iter().find(|c| !cwes.contains(c)) {
            return Err(format!("{}: direct {c} missing from cwes", self.commit));
        }
        if self.cwes.is_empty() && self.unresolved_cves.is_empty() && self.resolved_cves.is_empty() {
            return Err(format!("{}: record without references", self.commit));
        }
        Ok(())
    }
}

pub(crate) fn validate_record_line(line: &str) -> Result<(), String> {
    serde_json::from_str::<RecordLine>(line)
        .map_err(|e| e.to_string())?
        .check()
}

/// Commit counts per (UTC year, classified language), every commit included.
pub type CommitTotals = BTreeMap<(i32, ProjectLanguage), u64>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub commits: u64,
    pub duplicates: u64,
    pub filter_hits: u64,
    pub false_positives: u64,
    pub records: u64,
    pub unresolved_cves: u64,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOutput {
    pub records: Vec<MitigationRecord>,
    pub totals: CommitTotals,
    pub stats: BuildStats,
}

/// Whether the same commit id in two repositories counts once or twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dedup {
    #[default]
    PerRepo,
    Global,
}

/// Single-owner reducer turning commit records into mitigation records and
/// per-year totals. Feed it from any number of producers, in any order.
pub struct RecordBuilder<'c> {
    cache: &'c NvdCache,
    date_field: DateField,
    dedup: Dedup,
    seen: HashSet<(String, String)>,
    out: BuildOutput,
}

impl<'c> RecordBuilder<'c> {
    pub fn new(cache: &'c NvdCache, date_field: DateField) -> Self {
        Self {
            cache,
            date_field,
            dedup: Dedup::default(),
            seen: HashSet::new(),
            out: BuildOutput::default(),
        }
    }

    pub fn with_dedup(mut self, dedup: Dedup) -> Self {
        self.dedup = dedup;
        self
    }

    /// Counts the commit and, if it references anything, returns the
    /// mitigation record built for it.
    pub fn push(&mut self, commit: &CommitRecord) -> Option<&MitigationRecord> {
        let key = match self.dedup {
            Dedup::PerRepo => (commit.repo_id.clone(), commit.commit_id.clone()),
            Dedup::Global => (String::new(), commit.commit_id.clone()),
        };
        if !self.seen.insert(key) {
            self.out.stats.duplicates += 1;
            return None;
        }

        let date = commit.date(self.date_field);
        let language = classify(&commit.root_entries);
        let stats = &mut self.out.stats;
        stats.commits += 1;
        *self.out.totals.entry((date.year(), language)).or_default() += 1;

        let report = classify_message(&commit.message);
        if report.matched_filter {
            stats.filter_hits += 1;
        }
        if report.false_positive {
            stats.false_positives += 1;
        }
        if report.refs.is_empty() {
            return None;
        }

        let resolved = resolve_refs(&report.refs, self.cache);
        stats.unresolved_cves += resolved.unresolved_cves.len() as u64;
        stats.records += 1;
        self.out.records.push(MitigationRecord {
            commit_id: commit.commit_id.clone(),
            repo_id: commit.repo_id.clone(),
            language,
            date,
            resolved,
        });
        self.out.records.last()
    }

    pub fn stats(&self) -> BuildStats {
        self.out.stats
    }

    pub fn finish(self) -> BuildOutput {
        self.out
    }
}

pub fn build_records<'a>(
    commits: impl IntoIterator<Item = &'a CommitRecord>,
    cache: &NvdCache,
    date_field: DateField,
) -> BuildOutput {
    let mut b = RecordBuilder::new(cache, date_field);
    for c in commits {
        b.push(c);
    }
    b.finish()
}

/// How record languages map onto output series.
///
/// `Both` revisions count as JavaScript and as Python unless excluded.
/// `Unknown` revisions stay out of per-language outputs unless included as
/// a third series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesPolicy {
    pub include_both: bool,
    pub include_unknown: bool,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self {
            include_both: true,
            include_unknown: false,
        }
    }
}

impl SeriesPolicy {
    /// Output series in column order.
    pub fn series(self) -> Vec<ProjectLanguage> {
        let mut v = vec![ProjectLanguage::JavaScript, ProjectLanguage::Python];
        if self.include_unknown {
            v.push(ProjectLanguage::Unknown);
        }
        v
    }

    /// The series a record of `language` contributes to.
    pub fn series_of(self, language: ProjectLanguage) -> &'static [ProjectLanguage] {
        use ProjectLanguage::*;
        match language {
            JavaScript => &[JavaScript],
            Python => &[Python],
            Both if self.include_both => &[JavaScript, Python],
            Unknown if self.include_unknown => &[Unknown],
            Both | Unknown => &[],
        }
    }
}

/// Mitigation-commit and total-commit counts keyed by (year, series).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct YearCounts {
    pub vuln: BTreeMap<(i32, ProjectLanguage), u64>,
    pub total: BTreeMap<(i32, ProjectLanguage), u64>,
}

impl YearCounts {
    pub fn years(&self) -> BTreeSet<i32> {
        self.vuln.keys().chain(self.total.keys()).map(|(y, _)| *y).collect()
    }

    pub fn vuln(&self, year: i32, lang: ProjectLanguage) -> u64 {
        self.vuln.get(&(year, lang)).copied().unwrap_or(0)
    }

    pub fn total(&self, year: i32, lang: ProjectLanguage) -> u64 {
        self.total.get(&(year, lang)).copied().unwrap_or(0)
    }
}

pub fn year_counts(
    records: &[MitigationRecord],
    totals: &CommitTotals,
    policy: SeriesPolicy,
) -> YearCounts {
    let mut counts = YearCounts::default();
    for r in records {
        for &s in policy.series_of(r.language) {
            *counts.vuln.entry((r.year(), s)).or_default() += 1;
        }
    }
    for (&(year, lang), &n) in totals {
        for &s in policy.series_of(lang) {
            *counts.total.entry((year, s)).or_default() += n;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearLangStat {
    pub year: i32,
    pub language: ProjectLanguage,
    pub vuln_commits: u64,
    pub total_commits: u64,
    /// `None` when there are no commits at all that year.
    pub ratio_per_100k: Option<f64>,
}

/// Mitigation commits per 100,000 commits.
pub fn ratio(vuln: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| 100_000.0 * vuln as f64 / total as f64)
}

/// One stat per (year, series) with a nonzero total, year ascending.
pub fn ratio_per_100k(counts: &YearCounts) -> Vec<YearLangStat> {
    counts
        .total
        .iter()
        .filter(|(_, &t)| t > 0)
        .map(|(&(year, language), &total_commits)| {
            let vuln_commits = counts.vuln(year, language);
            YearLangStat {
                year,
                language,
                vuln_commits,
                total_commits,
                ratio_per_100k: ratio(vuln_commits, total_commits),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CweStat {
    pub cwe: CweId,
    /// One entry per active series, zero included.
    pub count_per_language: BTreeMap<ProjectLanguage, u64>,
}

impl CweStat {
    pub fn count(&self, lang: ProjectLanguage) -> u64 {
        self.count_per_language.get(&lang).copied().unwrap_or(0)
    }
}

/// CWEs seen in JavaScript only, Python only, or both.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub shared: BTreeSet<CweId>,
    pub only_js: BTreeSet<CweId>,
    pub only_py: BTreeSet<CweId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CweDistribution {
    /// CWE ascending.
    pub stats: Vec<CweStat>,
    pub overlap: Overlap,
}

/// Counts (commit, CWE) pairs per series. A CVE mapped to several CWEs adds
/// one to each of them.
pub fn cwe_distribution(records: &[MitigationRecord], policy: SeriesPolicy) -> CweDistribution {
    let series = policy.series();
    let mut counts: BTreeMap<CweId, BTreeMap<ProjectLanguage, u64>> = BTreeMap::new();
    for r in records {
        let targets = policy.series_of(r.language);
        if targets.is_empty() {
            continue;
        }
        for &cwe in &r.resolved.cwes {
            let row = counts
                .entry(cwe)
                .or_insert_with(|| series.iter().map(|&s| (s, 0)).collect());
            for &s in targets {
                *row.entry(s).or_default() += 1;
            }
        }
    }

    let seen_in = |lang| -> BTreeSet<CweId> {
        counts
            .iter()
            .filter(|(_, row)| row.get(&lang).copied().unwrap_or(0) > 0)
            .map(|(c, _)| *c)
            .collect()
    };
    let js = seen_in(ProjectLanguage::JavaScript);
    let py = seen_in(ProjectLanguage::Python);
    let overlap = Overlap {
        shared: js.intersection(&py).copied().collect(),
        only_js: js.difference(&py).copied().collect(),
        only_py: py.difference(&js).copied().collect(),
    };

    CweDistribution {
        stats: counts
            .into_iter()
            .map(|(cwe, count_per_language)| CweStat {
                cwe,
                count_per_language,
            })
            .collect(),
        overlap,
    }
}

/// CWEs with at least `threshold` references in at least one series.
pub fn top_cwes(dist: &CweDistribution, threshold: u64) -> BTreeSet<CweId> {
    dist.stats
        .iter()
        .filter(|s| s.count_per_language.values().any(|&n| n >= threshold))
        .map(|s| s.cwe)
        .collect()
}

/// Whole days from CVE publication to the commit, rounded toward negative
/// infinity. Negative when the fix landed before publication.
pub fn reaction_days(commit_date: DateTime<Utc>, published: DateTime<Utc>) -> i64 {
    let nanos = |d: DateTime<Utc>| {
        i128::from(d.timestamp()) * 1_000_000_000 + i128::from(d.timestamp_subsec_nanos())
    };
    let delta = nanos(commit_date) - nanos(published);
    delta.div_euclid(SECONDS_PER_DAY * 1_000_000_000) as i64
}

/// One (commit, CVE) pair as seen by one output series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionPair {
    pub commit_id: String,
    pub language: ProjectLanguage,
    pub year: i32,
    pub cve: CveId,
    pub cwes: Vec<CweId>,
    pub days: i64,
}

pub fn reaction_pairs(records: &[MitigationRecord], policy: SeriesPolicy) -> Vec<ReactionPair> {
    let mut pairs = Vec::new();
    for r in records {
        for &language in policy.series_of(r.language) {
            for (id, entry) in &r.resolved.resolved_cves {
                pairs.push(pair(r, language, id, entry));
            }
        }
    }
    pairs
}

fn pair(r: &MitigationRecord, language: ProjectLanguage, id: &CveId, e: &CveEntry) -> ReactionPair {
    ReactionPair {
        commit_id: r.commit_id.clone(),
        language,
        year: r.year(),
        cve: id.clone(),
        cwes: e.cwe_ids.clone(),
        days: reaction_days(r.date, e.publish_date),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupKey {
    Year(i32),
    Cwe(CweId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionStat {
    pub key: GroupKey,
    pub language: ProjectLanguage,
    pub n: u64,
    pub mean_days: f64,
    pub n_nonnegative: u64,
    /// Mean over pairs with `days >= 0`; `None` if there are none.
    pub mean_days_nonnegative: Option<f64>,
}

#[derive(Default)]
struct MeanAcc {
    n: u64,
    sum: i128,
    n_nonneg: u64,
    sum_nonneg: i128,
}

impl MeanAcc {
    fn add(&mut self, days: i64) {
        self.n += 1;
        self.sum += i128::from(days);
        if days >= 0 {
            self.n_nonneg += 1;
            self.sum_nonneg += i128::from(days);
        }
    }
}

fn summarize(groups: BTreeMap<(GroupKey, ProjectLanguage), MeanAcc>) -> Vec<ReactionStat> {
    groups
        .into_iter()
        .filter(|(_, acc)| acc.n > 0)
        .map(|((key, language), acc)| ReactionStat {
            key,
            language,
            n: acc.n,
            mean_days: acc.sum as f64 / acc.n as f64,
            n_nonnegative: acc.n_nonneg,
            mean_days_nonnegative: (acc.n_nonneg > 0)
                .then(|| acc.sum_nonneg as f64 / acc.n_nonneg as f64),
        })
        .collect()
}

/// Mean reaction days per (commit year, series).
pub fn reaction_by_year(records: &[MitigationRecord], policy: SeriesPolicy) -> Vec<ReactionStat> {
    let mut groups: BTreeMap<_, MeanAcc> = BTreeMap::new();
    for p in reaction_pairs(records, policy) {
        groups
            .entry((GroupKey::Year(p.year), p.language))
            .or_default()
            .add(p.days);
    }
    summarize(groups)
}

/// Mean reaction days per (CWE, series). A pair counts toward every CWE of
/// its CVE; `filter` keeps only the listed CWEs.
pub fn reaction_by_cwe(
    records: &[MitigationRecord],
    policy: SeriesPolicy,
    filter: Option<&BTreeSet<CweId>>,
) -> Vec<ReactionStat> {
    let mut groups: BTreeMap<_, MeanAcc> = BTreeMap::new();
    for p in reaction_pairs(records, policy) {
        for cwe in &p.cwes {
            if filter.is_some_and(|f| !f.contains(cwe)) {
                continue;
            }
            groups
                .entry((GroupKey::Cwe(*cwe), p.language))
                .or_default()
                .add(p.days);
        }
    }
    summarize(groups)
}
