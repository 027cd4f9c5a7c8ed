// SPDX-License-Identifier: Apache-2.0

//! The `vcm` pipeline commands: `scan`, `analyze`, `fetch-nvd` and `report`.
//!
//! `scan` writes `records.ndjson`, `totals.csv` and `nvd-cache.ndjson` into
//! the output directory. `analyze` reads exactly those three files and writes
//! the report files. `report` runs both (and `fetch-nvd` first with `--fetch`).
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 unreadable
//! or missing inputs, 4 network failure.

pub mod cli;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;

use crate::analytics::{CommitTotals, MitigationRecord, RecordBuilder, BuildStats, RecordLine};
use crate::ingest::{open_export, scan_repository, CommitRecord, ExportWriter};
use crate::nvd::fetch::{fetch_feeds, FetchConfig, FetchError, FetchSummary};
use crate::nvd::{discover_feeds, load_cache, NvdCache};
use crate::store::{read_table, write_atomic, NdjsonWriter, SchemaVersion, StoreError};

pub use config::{Layer, RunConfig};
pub use output::Analysis;

pub const RECORDS_FILE: &str = "records.ndjson";
pub const TOTALS_FILE: &str = "totals.csv";
pub const CACHE_FILE: &str = "nvd-cache.ndjson";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("{0}")]
    Network(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Network(_) => 4,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::Store(s) => CliError::Io(s.to_string()),
            other => CliError::Network(other.to_string()),
        }
    }
}

fn with_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Default)]
pub struct ScanSummary {
    pub inputs_ok: usize,
    pub inputs_failed: Vec<PathBuf>,
    /// Per-input and per-commit problems that did not stop the run.
    pub warnings: Vec<String>,
    pub stats: BuildStats,
    pub cache_entries: usize,
}

enum Msg {
    Commit(Box<CommitRecord>),
    Warning(String),
    Failed(PathBuf, String),
    Done,
}

fn produce(path: &Path, cfg: &RunConfig, tx: &mpsc::SyncSender<Msg>) {
    let send = |m| {
        let _ = tx.send(m);
    };
    if path.is_dir() {
        match scan_repository(path, &cfg.scan) {
            Ok(scan) => {
                for item in scan {
                    match item {
                        Ok(c) => send(Msg::Commit(Box::new(c))),
                        Err(e) => send(Msg::Warning(e.to_string())),
                    }
                }
                send(Msg::Done);
            }
            Err(e) => send(Msg::Failed(path.to_owned(), e.to_string())),
        }
    } else if path.is_file() {
        match open_export(path) {
            Ok(lines) => {
                for item in lines {
                    match item {
                        Ok(c) if cfg.scan.admits(&c) => send(Msg::Commit(Box::new(c))),
                        Ok(_) => {}
                        Err(skip) => send(Msg::Warning(format!(
                            "{}:{}: skipped: {}",
                            path.display(),
                            skip.line,
                            skip.reason
                        ))),
                    }
                }
                send(Msg::Done);
            }
            Err(e) => send(Msg::Failed(path.to_owned(), e.to_string())),
        }
    } else {
        send(Msg::Failed(path.to_owned(), "no such file or directory".into()));
    }
}

/// Builds the NVD cache for a scan and persists it to `<out>/nvd-cache.ndjson`.
///
/// Feeds in `nvd_dir` take priority, then an explicit cache file, then a
/// cache already sitting in the output directory.
pub fn prepare_cache(cfg: &RunConfig) -> Result<NvdCache, CliError> {
    let dest = cfg.out.join(CACHE_FILE);
    let cache = if let Some(dir) = &cfg.nvd_dir {
        let feeds = discover_feeds(dir, &cfg.feed_pattern)
            .map_err(|e| CliError::Input(e.to_string()))?;
        if feeds.is_empty() {
            log::warn!("{}: no feed files match {}", dir.display(), cfg.feed_pattern);
        }
        let mut cache = NvdCache::new();
        with_pool(cfg, || cache.ingest_files(&feeds))?
            .map_err(|e| CliError::Input(e.to_string()))?;
        cache
    } else if let Some(p) = cfg.nvd_cache.as_ref().or(dest.is_file().then_some(&dest)) {
        load_cache(p).map_err(|e| CliError::Input(e.to_string()))?
    } else {
        log::warn!("no NVD feeds or cache configured; every CVE will be unresolved");
        NvdCache::new()
    };
    cache.save(&dest)?;
    Ok(cache)
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<ScanSummary, CliError> {
    if cfg.inputs.is_empty() {
        return Err(CliError::Config(
            "no inputs; pass git repositories or commit exports".into(),
        ));
    }
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    let cache = prepare_cache(cfg)?;

    let mut export = cfg
        .export_commits
        .as_deref()
        .map(ExportWriter::create)
        .transpose()?;
    let mut summary = ScanSummary {
        cache_entries: cache.len(),
        ..Default::default()
    };
    let mut builder = RecordBuilder::new(&cache, cfg.scan.date_field).with_dedup(cfg.dedup);

    let (tx, rx) = mpsc::sync_channel::<Msg>(4096);
    let consumed: Result<(), CliError> = std::thread::scope(|s| {
        s.spawn(move || {
            let _ = with_pool(cfg, || {
                cfg.inputs
                    .par_iter()
                    .for_each_with(tx, |tx, path| produce(path, cfg, tx))
            });
        });
        for msg in rx {
            match msg {
                Msg::Commit(c) => {
                    if let Some(w) = export.as_mut() {
                        w.write(&c)?;
                    }
                    builder.push(&c);
                }
                Msg::Warning(w) => {
                    log::warn!("{w}");
                    summary.warnings.push(w);
                }
                Msg::Failed(p, why) => {
                    let w = format!("{}: {why}", p.display());
                    log::warn!("{w}");
                    summary.warnings.push(w);
                    summary.inputs_failed.push(p);
                }
                Msg::Done => summary.inputs_ok += 1,
            }
        }
        Ok(())
    });
    consumed?;

    if summary.inputs_ok == 0 {
        return Err(CliError::Input(format!(
            "none of the {} inputs could be read",
            cfg.inputs.len()
        )));
    }
    summary.inputs_failed.sort();

    let mut out = builder.finish();
    summary.stats = out.stats;
    out.records
        .sort_by(|a, b| (&a.repo_id, a.date, &a.commit_id).cmp(&(&b.repo_id, b.date, &b.commit_id)));

    let mut w = NdjsonWriter::create(cfg.out.join(RECORDS_FILE), &SchemaVersion::records())?;
    for r in &out.records {
        w.write_row(&r.to_line())?;
    }
    w.finish()?;
    write_atomic(&cfg.out.join(TOTALS_FILE), output::totals_csv(&out.totals).as_bytes())?;
    if let Some(w) = export {
        w.finish()?;
    }
    Ok(summary)
}

/// Reads `records.ndjson`, re-attaching NVD entries from `cache`.
pub fn read_records(path: &Path, cache: &NvdCache) -> Result<Vec<MitigationRecord>, CliError> {
    let input = |e: StoreError| CliError::Input(e.to_string());
    let mut records = Vec::new();
    for item in read_table(path, &SchemaVersion::records()).map_err(input)? {
        let (line, text) = item.map_err(input)?;
        let bad = |why: String| CliError::Input(format!("{}:{line}: {why}", path.display()));
        let parsed: RecordLine = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        records.push(MitigationRecord::from_line(parsed, cache).map_err(bad)?);
    }
    Ok(records)
}

#[derive(Debug, Clone)]
pub struct AnalyzeSummary {
    pub records: usize,
    pub files: Vec<PathBuf>,
}

pub fn load_analysis_inputs(
    cfg: &RunConfig,
) -> Result<(Vec<MitigationRecord>, CommitTotals), CliError> {
    let (records_path, totals_path, cache_path) =
        (cfg.records_path(), cfg.totals_path(), cfg.cache_path());
    for p in [&records_path, &totals_path, &cache_path] {
        if !p.is_file() {
            return Err(CliError::Input(format!("{}: missing", p.display())));
        }
    }
    let cache = load_cache(&cache_path).map_err(|e| CliError::Input(e.to_string()))?;
    let mut records = read_records(&records_path, &cache)?;
    let mut totals = output::read_totals(&totals_path).map_err(CliError::Input)?;

    let (lo, hi) = cfg.year_bounds();
    let in_years = |y: i32| lo.is_none_or(|lo| y >= lo) && hi.is_none_or(|hi| y <= hi);
    records.retain(|r| in_years(r.year()) && cfg.scan.admits_date(r.date));
    totals.retain(|&(y, _), _| in_years(y));
    Ok((records, totals))
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeSummary, CliError> {
    let (records, totals) = load_analysis_inputs(cfg)?;
    let analysis = Analysis::compute(&records, &totals, cfg.series, cfg.threshold);
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    let mut files = Vec::new();
    for (name, text) in analysis.files() {
        let p = cfg.out.join(name);
        write_atomic(&p, text.as_bytes())?;
        files.push(p);
    }
    Ok(AnalyzeSummary {
        records: records.len(),
        files,
    })
}

pub fn cmd_fetch_nvd(cfg: &RunConfig) -> Result<FetchSummary, CliError> {
    let dir = cfg
        .nvd_dir
        .clone()
        .ok_or_else(|| CliError::Config("fetch-nvd needs --nvd-dir or VCM_NVD_DIR".into()))?;
    Ok(fetch_feeds(&FetchConfig {
        base_url: cfg.nvd_url.clone(),
        dir,
        years: cfg.feed_years.clone(),
        offline: cfg.offline,
    })?)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<(ScanSummary, AnalyzeSummary), CliError> {
    if cfg.fetch {
        cmd_fetch_nvd(cfg)?;
    }
    let scan = cmd_scan(cfg)?;
    let analyze = cmd_analyze(cfg)?;
    Ok((scan, analyze))
}
