// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use super::feed::{parse_feed_file, FeedError, ParseReport};
use super::CveEntry;
use crate::refs::CveId;
use crate::store::{read_table, NdjsonWriter, SchemaVersion, StoreError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedVersion {
    pub name: String,
    pub ingested_at: DateTime<Utc>,
}

/// CVE metadata keyed by id. Later ingestion overwrites earlier entries.
///
/// Building is single-writer; a built cache is only read.
#[derive(Debug, Clone, Default)]
pub struct NvdCache {
    entries: BTreeMap<CveId, CveEntry>,
    feed_versions: Vec<FeedVersion>,
}

impl PartialEq for NvdCache {
    /// Extensional equality: same entries, regardless of ingestion history.
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl NvdCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest(&mut self, feed_name: &str, entries: impl IntoIterator<Item = CveEntry>) {
        for e in entries {
            self.entries.insert(e.id.clone(), e);
        }
        self.feed_versions.push(FeedVersion {
            name: feed_name.to_owned(),
            ingested_at: Utc::now(),
        });
    }

    pub fn lookup(&self, id: &CveId) -> Option<&CveEntry> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in id order.
    pub fn entries(&self) -> impl Iterator<Item = &CveEntry> {
        self.entries.values()
    }

    pub fn feed_versions(&self) -> &[FeedVersion] {
        &self.feed_versions
    }

    /// Parses feed files in parallel, then merges them in the given order so
    /// that later files win.
    pub fn ingest_files(
        &mut self,
        paths: &[impl AsRef<Path> + Sync],
    ) -> Result<Vec<ParseReport>, FeedError> {
        let parsed: Vec<_> = paths
            .par_iter()
            .map(|p| parse_feed_file(p.as_ref()))
            .collect::<Result<_, _>>()?;
        let mut reports = Vec::with_capacity(parsed.len());
        for (path, (entries, report)) in paths.iter().zip(parsed) {
            let name = path
                .as_ref()
                .file_name()
                .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            if !report.skipped.is_empty() {
                log::warn!("{name}: skipped {} of {} items", report.skipped.len(), report.items);
            }
            self.ingest(&name, entries);
            reports.push(report);
        }
        Ok(reports)
    }

    /// Writes `nvd-cache.ndjson`: schema header, then one entry per line in
    /// id order.
    pub fn save(&self, path: &Path) -> Result<usize, StoreError> {
        let mut w = NdjsonWriter::create(path, &SchemaVersion::nvd_cache())?;
        for e in self.entries.values() {
            w.write_row(e)?;
        }
        w.finish()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheLoadError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}:{line}: {message}")]
    Line {
        path: String,
        line: usize,
        message: String,
    },
}

/// Loads a cache written by [`NvdCache::save`]. Any bad line fails the load.
pub fn load_cache(path: &Path) -> Result<NvdCache, CacheLoadError> {
    let mut entries = Vec::new();
    for item in read_table(path, &SchemaVersion::nvd_cache())? {
        let (line, text) = item?;
        let bad = |message: String| CacheLoadError::Line {
            path: path.display().to_string(),
            line,
            message,
        };
        let entry: CveEntry = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        entry.check().map_err(bad)?;
        entries.push(entry);
    }
    let mut cache = NvdCache::new();
    let name = path
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    cache.ingest(&name, entries);
    Ok(cache)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nvd::Severity;
    use crate::refs::CweId;
    use chrono::TimeZone;

    fn entry(id: &str, sev: Severity) -> CveEntry {
        CveEntry {
            id: id.parse().unwrap(),
            publish_date: Utc.with_ymd_and_hms(2019, 1, 2, 12, 0, 0).unwrap(),
            cwe_ids: vec![CweId::new(79).unwrap()],
            severity: sev,
            base_impact_score: None,
        }
    }

    #[test]
    fn lookup_hit_and_miss() {
        let mut c = NvdCache::new();
        c.ingest("a", vec![entry("CVE-2019-0001", Severity::Low)]);
        assert_eq!(c.lookup(&"CVE-2019-0001".parse().unwrap()).unwrap().severity, Severity::Low);
        assert!(c.lookup(&"CVE-1999-9999".parse().unwrap()).is_none());
    }

    #[test]
    fn later_feed_wins() {
        let mut c = NvdCache::new();
        c.ingest("a", vec![entry("CVE-2019-0001", Severity::Low)]);
        c.ingest("b", vec![entry("CVE-2019-0001", Severity::Critical)]);
        assert_eq!(c.len(), 1);
        assert_eq!(
            c.lookup(&"CVE-2019-0001".parse().unwrap()).unwrap().severity,
            Severity::Critical
        );
        assert_eq!(c.feed_versions().len(), 2);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nvd-cache.ndjson");
        let mut c = NvdCache::new();
        c.ingest("a", vec![entry("CVE-2019-0002", Severity::High), entry("CVE-2019-0001", Severity::Low)]);
        assert_eq!(c.save(&path).unwrap(), 2);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\"schema\":\"nvd-cache/1\"}\n{\"id\":\"CVE-2019-0001\""));
        assert_eq!(load_cache(&path).unwrap(), c);
    }
}
