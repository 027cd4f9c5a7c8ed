// SPDX-License-Identifier: Apache-2.0

//! NVD metadata: feed parsing, the local lookup cache and reference resolution.

mod cache;
mod feed;
pub mod fetch;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::refs::{CveId, CweId, VulnRefSet};

pub use cache::{load_cache, CacheLoadError, FeedVersion, NvdCache};
pub use feed::{
    discover_feeds, parse_feed, parse_feed_file, FeedError, ParseReport, SkippedItem,
    DEFAULT_FEED_PATTERN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Low,
    Medium,
    High,
    Critical,
    Unknown,
}

impl Severity {
    /// Maps a CVSS v2 or v3 severity string. `NONE` and anything unrecognized
    /// become `Unknown`.
    pub fn from_cvss(s: &str) -> Self {
        match s.trim().to_ascii_uppercase().as_str() {
            "LOW" => Severity::Low,
            "MEDIUM" => Severity::Medium,
            "HIGH" => Severity::High,
            "CRITICAL" => Severity::Critical,
            _ => Severity::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "LOW",
            Severity::Medium => "MEDIUM",
            Severity::High => "HIGH",
            Severity::Critical => "CRITICAL",
            Severity::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "LOW" => Ok(Severity::Low),
            "MEDIUM" => Ok(Severity::Medium),
            "HIGH" => Ok(Severity::High),
            "CRITICAL" => Ok(Severity::Critical),
            "UNKNOWN" => Ok(Severity::Unknown),
            _ => Err(format!("unknown severity {s:?}")),
        }
    }
}

/// NVD metadata for one CVE. Serializes to one `nvd-cache.ndjson` line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveEntry {
    pub id: CveId,
    #[serde(rename = "published")]
    pub publish_date: DateTime<Utc>,
    /// Sorted ascending, duplicate-free.
    #[serde(rename = "cwes")]
    pub cwe_ids: Vec<CweId>,
    pub severity: Severity,
    /// Impact subscore of the CVSS block the severity came from, in `[0, 10]`.
    #[serde(rename = "impact")]
    pub base_impact_score: Option<f64>,
}

impl CveEntry {
    /// Checks the entry invariants, returning a description of the first
    /// violation.
    pub fn check(&self) -> Result<(), String> {
        if self.cwe_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("{}: cwes not strictly ascending", self.id));
        }
        if let Some(score) = self.base_impact_score {
            if !(0.0..=10.0).contains(&score) {
                return Err(format!("{}: impact score {score} outside [0, 10]", self.id));
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_cache_line(line: &str) -> Result<(), String> {
    let entry: CveEntry = serde_json::from_str(line).map_err(|e| e.to_string())?;
    entry.check()
}

/// A message's references after looking its CVEs up in the cache.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolvedRefs {
    /// `direct_cwes` plus the CWEs of every resolved CVE.
    pub cwes: BTreeSet<CweId>,
    pub resolved_cves: Vec<(CveId, CveEntry)>,
    pub unresolved_cves: Vec<CveId>,
    /// CWEs named in the message itself.
    pub direct_cwes: BTreeSet<CweId>,
}

impl ResolvedRefs {
    pub fn is_empty(&self) -> bool {
        self.cwes.is_empty() && self.resolved_cves.is_empty() && self.unresolved_cves.is_empty()
    }
}

/// Looks up every CVE of `refs` and merges CWE categories.
pub fn resolve_refs(refs: &VulnRefSet, cache: &NvdCache) -> ResolvedRefs {
    let mut out = ResolvedRefs {
        direct_cwes: refs.cwes.clone(),
        cwes: refs.cwes.clone(),
        ..Default::default()
    };
    for id in &refs.cves {
        match cache.lookup(id) {
            Some(entry) => {
                out.cwes.extend(entry.cwe_ids.iter().copied());
                out.resolved_cves.push((id.clone(), entry.clone()));
            }
            None => out.unresolved_cves.push(id.clone()),
        }
    }
    out
}
