// SPDX-License-Identifier: Apache-2.0

//! NVD JSON 1.1 data feed parsing (`nvdcve-1.1-<year>.json[.gz]`).

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, Utc};
use flate2::read::GzDecoder;
use serde::Deserialize;
use serde_json::Value;

use super::{CveEntry, Severity};
use crate::refs::{CveId, CweId};

/// Matches both plain and gzip-compressed yearly feeds.
pub const DEFAULT_FEED_PATTERN: &str = "nvdcve-1.1-*.json*";

#[derive(Debug, thiserror::Error)]
pub enum FeedError {
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] io::Error),
    #[error("malformed feed JSON at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("not an NVD 1.1 feed: {0}")]
    Schema(String),
    #[error("bad feed file pattern {0:?}")]
    Pattern(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedItem {
    /// Position in the `CVE_Items` array.
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub items: usize,
    pub parsed: usize,
    pub skipped: Vec<SkippedItem>,
}

#[derive(Deserialize)]
struct RawFeed {
    #[serde(rename = "CVE_Items")]
    items: Vec<Value>,
}

#[derive(Deserialize)]
struct RawItem {
    cve: RawCve,
    #[serde(default)]
    impact: Option<RawImpact>,
    #[serde(rename = "publishedDate")]
    published: Option<String>,
}

#[derive(Deserialize)]
struct RawCve {
    #[serde(rename = "CVE_data_meta")]
    meta: RawMeta,
    #[serde(default)]
    problemtype: Option<RawProblemtype>,
}

#[derive(Deserialize)]
struct RawMeta {
    #[serde(rename = "ID")]
    id: Option<String>,
}

#[derive(Deserialize)]
struct RawProblemtype {
    #[serde(default)]
    problemtype_data: Vec<RawProblemtypeData>,
}

#[derive(Deserialize)]
struct RawProblemtypeData {
    #[serde(default)]
    description: Vec<RawDescription>,
}

#[derive(Deserialize)]
struct RawDescription {
    value: String,
}

#[derive(Deserialize)]
struct RawImpact {
    #[serde(rename = "baseMetricV3")]
    v3: Option<RawMetricV3>,
    #[serde(rename = "baseMetricV2")]
    v2: Option<RawMetricV2>,
}

#[derive(Deserialize)]
struct RawMetricV3 {
    #[serde(rename = "cvssV3")]
    cvss: Option<RawCvssV3>,
    #[serde(rename = "impactScore")]
    impact_score: Option<f64>,
}

#[derive(Deserialize)]
struct RawCvssV3 {
    #[serde(rename = "baseSeverity")]
    base_severity: Option<String>,
}

#[derive(Deserialize)]
struct RawMetricV2 {
    severity: Option<String>,
    #[serde(rename = "impactScore")]
    impact_score: Option<f64>,
}

/// Parses a feed held in memory.
///
/// Items that cannot form a valid [`CveEntry`] (no id, no publish date, an
/// out-of-range score, wrong field types) are skipped and listed in the
/// report; only a document-level problem fails the whole feed.
pub fn parse_feed(bytes: &[u8]) -> Result<(Vec<CveEntry>, ParseReport), FeedError> {
    let feed: RawFeed = serde_json::from_slice(bytes).map_err(|e| {
        if e.is_data() {
            FeedError::Schema(e.to_string())
        } else {
            FeedError::Malformed {
                offset: byte_offset(bytes, e.line(), e.column()),
                message: e.to_string(),
            }
        }
    })?;

    let mut report = ParseReport {
        items: feed.items.len(),
        ..Default::default()
    };
    let mut entries = Vec::with_capacity(feed.items.len());
    for (index, item) in feed.items.into_iter().enumerate() {
        match parse_item(item) {
            Ok(entry) => entries.push(entry),
            Err(reason) => report.skipped.push(SkippedItem { index, reason }),
        }
    }
    report.parsed = entries.len();
    Ok((entries, report))
}

/// Reads and parses one feed file, decompressing `.gz` files.
pub fn parse_feed_file(path: &Path) -> Result<(Vec<CveEntry>, ParseReport), FeedError> {
    let file = File::open(path).map_err(|e| FeedError::Io(path.to_owned(), e))?;
    let mut bytes = Vec::new();
    let read = if path.extension().is_some_and(|x| x == "gz") {
        GzDecoder::new(file).read_to_end(&mut bytes)
    } else {
        io::BufReader::new(file).read_to_end(&mut bytes)
    };
    read.map_err(|e| FeedError::Io(path.to_owned(), e))?;
    parse_feed(&bytes)
}

/// Feed files in `dir` whose names match `pattern`, sorted by name.
///
/// When both `x.json` and `x.json.gz` exist only the plain file is kept.
pub fn discover_feeds(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>, FeedError> {
    let pat = glob::Pattern::new(pattern).map_err(|_| FeedError::Pattern(pattern.to_owned()))?;
    let mut found = BTreeSet::new();
    for dent in std::fs::read_dir(dir).map_err(|e| FeedError::Io(dir.to_owned(), e))? {
        let dent = dent.map_err(|e| FeedError::Io(dir.to_owned(), e))?;
        let name = dent.file_name();
        let Some(name) = name.to_str() else { continue };
        let is_feed = name.ends_with(".json") || name.ends_with(".json.gz");
        if is_feed && pat.matches(name) && dent.path().is_file() {
            found.insert(name.to_owned());
        }
    }
    let plain: BTreeSet<String> = found.iter().filter(|n| n.ends_with(".json")).cloned().collect();
    Ok(found
        .into_iter()
        .filter(|n| !(n.ends_with(".gz") && plain.contains(n.trim_end_matches(".gz"))))
        .map(|n| dir.join(n))
        .collect())
}

fn parse_item(item: Value) -> Result<CveEntry, String> {
    let raw: RawItem = serde_json::from_value(item).map_err(|e| format!("malformed item: {e}"))?;
    let id_text = raw.cve.meta.id.ok_or("missing CVE id")?;
    let id: CveId = id_text.parse().map_err(|e| format!("{e}"))?;
    let published = raw
        .published
        .ok_or_else(|| format!("{id}: missing publishedDate"))?;
    let publish_date =
        parse_nvd_date(&published).ok_or_else(|| format!("{id}: bad publishedDate {published:?}"))?;

    let cwe_ids: BTreeSet<CweId> = raw
        .cve
        .problemtype
        .into_iter()
        .flat_map(|p| p.problemtype_data)
        .flat_map(|d| d.description)
        .filter_map(|d| d.value.parse().ok())
        .collect();

    // v3 wins whenever its block is present, even if incomplete.
    let (severity, score) = match raw.impact {
        Some(RawImpact { v3: Some(v3), .. }) => (
            v3.cvss
                .and_then(|c| c.base_severity)
                .map_or(Severity::Unknown, |s| Severity::from_cvss(&s)),
            v3.impact_score,
        ),
        Some(RawImpact { v2: Some(v2), .. }) => (
            v2.severity
                .map_or(Severity::Unknown, |s| Severity::from_cvss(&s)),
            v2.impact_score,
        ),
        _ => (Severity::Unknown, None),
    };

    let entry = CveEntry {
        id,
        publish_date,
        cwe_ids: cwe_ids.into_iter().collect(),
        severity,
        base_impact_score: score,
    };
    entry.check()?;
    Ok(entry)
}

/// NVD 1.1 feeds use `2019-01-02T12:00Z`; full RFC 3339 is accepted too.
pub(crate) fn parse_nvd_date(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    let naive = s.strip_suffix('Z').unwrap_or(s);
    ["%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(naive, fmt).ok())
        .map(|n| n.and_utc())
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let line_start = if line <= 1 {
        0
    } else {
        bytes
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == b'\n')
            .nth(line - 2)
            .map_or(bytes.len(), |(i, _)| i + 1)
    };
    (line_start + column.saturating_sub(1)).min(bytes.len())
}
