// SPDX-License-Identifier: Apache-2.0

//! Run configuration, layered as CLI flags > `VCM_*` environment variables >
//! config file > defaults.
//!
//! The config file is plain `key = value` lines; `#` starts a comment and
//! values may be double-quoted. Keys are the long flag names with `-` or `_`.
//! Environment variables use the same keys upper-cased with a `VCM_` prefix,
//! e.g. `VCM_NVD_DIR`, `VCM_OUT`, `VCM_THREADS`. List values (`inputs`) are
//! comma-separated outside the command line.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, NaiveDate, Utc};

use super::CliError;
use crate::analytics::{Dedup, SeriesPolicy, DEFAULT_TOP_CWE_THRESHOLD};
use crate::ingest::{BranchPolicy, ScanConfig};
use crate::nvd::{fetch::DEFAULT_BASE_URL, DEFAULT_FEED_PATTERN};

pub const ENV_PREFIX: &str = "VCM_";

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "inputs",
    "out",
    "nvd_dir",
    "nvd_cache",
    "feed_pattern",
    "nvd_url",
    "years",
    "offline",
    "fetch",
    "date_field",
    "since",
    "until",
    "branches",
    "threshold",
    "include_both",
    "include_unknown",
    "global_dedup",
    "threads",
    "export_commits",
    "records",
    "totals",
];

/// One configuration layer: raw string values by key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Layer(BTreeMap<String, String>);

impl Layer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let key = normalize_key(key)?;
        self.0.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Values from `VCM_*` variables. Unrelated and unknown variables are ignored.
    pub fn from_env<'a>(vars: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut layer = Layer::new();
        for (k, v) in vars {
            let Some(key) = k.strip_prefix(ENV_PREFIX) else { continue };
            let key = key.to_ascii_lowercase();
            if KEYS.contains(&key.as_str()) {
                layer.0.insert(key, v.to_owned());
            }
        }
        layer
    }

    pub fn parse_file(text: &str) -> Result<Self, CliError> {
        let mut layer = Layer::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
            let v = v.trim();
            let v = v
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(v);
            layer
                .set(k.trim(), v)
                .map_err(|e| CliError::Config(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(layer)
    }

    pub fn load_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse_file(&text)
    }

    /// Keys in `self` win over keys in `lower`.
    pub fn over(mut self, lower: Layer) -> Layer {
        for (k, v) in lower.0 {
            self.0.entry(k).or_insert(v);
        }
        self
    }
}

fn normalize_key(key: &str) -> Result<String, CliError> {
    let k = key.trim().replace('-', "_").to_ascii_lowercase();
    if KEYS.contains(&k.as_str()) {
        Ok(k)
    } else {
        Err(CliError::Config(format!("unknown setting {key:?}")))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Git repositories (directories) and commit exports (files).
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    /// Directory holding NVD feed files.
    pub nvd_dir: Option<PathBuf>,
    /// Explicit `nvd-cache.ndjson` to use instead of `<out>/nvd-cache.ndjson`.
    pub nvd_cache: Option<PathBuf>,
    pub feed_pattern: String,
    pub nvd_url: String,
    pub feed_years: RangeInclusive<u16>,
    pub offline: bool,
    /// Download feeds before scanning (`report` only).
    pub fetch: bool,
    pub scan: ScanConfig,
    pub threshold: u64,
    pub series: SeriesPolicy,
    pub dedup: Dedup,
    pub threads: Option<usize>,
    pub export_commits: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub totals: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            out: PathBuf::from("vcm-out"),
            nvd_dir: None,
            nvd_cache: None,
            feed_pattern: DEFAULT_FEED_PATTERN.to_owned(),
            nvd_url: DEFAULT_BASE_URL.to_owned(),
            feed_years: 2002..=current_year(),
            offline: false,
            fetch: false,
            scan: ScanConfig::default(),
            threshold: DEFAULT_TOP_CWE_THRESHOLD,
            series: SeriesPolicy::default(),
            dedup: Dedup::PerRepo,
            threads: None,
            export_commits: None,
            records: None,
            totals: None,
        }
    }
}

fn current_year() -> u16 {
    u16::try_from(Utc::now().year()).unwrap_or(9999)
}

impl RunConfig {
    pub fn from_layer(layer: &Layer) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let bad = |k: &str, v: &str, why: String| CliError::Config(format!("{k} = {v:?}: {why}"));

        for (key, value) in &layer.0 {
            let v = value.as_str();
            match key.as_str() {
                "inputs" => {
                    cfg.inputs = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(PathBuf::from)
                        .collect()
                }
                "out" => cfg.out = PathBuf::from(v),
                "nvd_dir" => cfg.nvd_dir = Some(PathBuf::from(v)),
                "nvd_cache" => cfg.nvd_cache = Some(PathBuf::from(v)),
                "feed_pattern" => cfg.feed_pattern = v.to_owned(),
                "nvd_url" => cfg.nvd_url = v.to_owned(),
                "years" => cfg.feed_years = parse_years(v).map_err(|e| bad(key, v, e))?,
                "offline" => cfg.offline = parse_bool(v).map_err(|e| bad(key, v, e))?,
                "fetch" => cfg.fetch = parse_bool(v).map_err(|e| bad(key, v, e))?,
                "date_field" => cfg.scan.date_field = v.parse().map_err(|e| bad(key, v, e))?,
                "since" => cfg.scan.since = Some(parse_date(v).map_err(|e| bad(key, v, e))?),
                "until" => cfg.scan.until = Some(parse_date(v).map_err(|e| bad(key, v, e))?),
                "branches" => {
                    cfg.scan.branches = v.parse::<BranchPolicy>().map_err(|e| bad(key, v, e))?
                }
                "threshold" => {
                    cfg.threshold = v.parse().map_err(|e| bad(key, v, format!("{e}")))?;
                }
                "include_both" => {
                    cfg.series.include_both = parse_bool(v).map_err(|e| bad(key, v, e))?
                }
                "include_unknown" => {
                    cfg.series.include_unknown = parse_bool(v).map_err(|e| bad(key, v, e))?
                }
                "global_dedup" => {
                    cfg.dedup = if parse_bool(v).map_err(|e| bad(key, v, e))? {
                        Dedup::Global
                    } else {
                        Dedup::PerRepo
                    }
                }
                "threads" => {
                    let n: usize = v.parse().map_err(|e| bad(key, v, format!("{e}")))?;
                    cfg.threads = (n > 0).then_some(n);
                }
                "export_commits" => cfg.export_commits = Some(PathBuf::from(v)),
                "records" => cfg.records = Some(PathBuf::from(v)),
                "totals" => cfg.totals = Some(PathBuf::from(v)),
                other => return Err(CliError::Config(format!("unknown setting {other:?}"))),
            }
        }

        if cfg.threshold < 1 {
            return Err(CliError::Config("threshold must be at least 1".into()));
        }
        cfg.scan.validate().map_err(CliError::Config)?;
        Ok(cfg)
    }

    /// Resolves CLI flags, environment and the config file named by
    /// `--config` or `VCM_CONFIG`.
    pub fn resolve<'a>(
        cli: Layer,
        config_path: Option<&Path>,
        env: impl IntoIterator<Item = (&'a str, &'a str)> + Clone,
    ) -> Result<Self, CliError> {
        let env_config = env
            .clone()
            .into_iter()
            .find(|(k, _)| *k == "VCM_CONFIG")
            .map(|(_, v)| PathBuf::from(v));
        let file = match config_path.map(Path::to_path_buf).or(env_config) {
            Some(p) => Layer::load_file(&p)?,
            None => Layer::new(),
        };
        let merged = cli.over(Layer::from_env(env)).over(file);
        Self::from_layer(&merged)
    }

    pub fn records_path(&self) -> PathBuf {
        self.records.clone().unwrap_or_else(|| self.out.join(super::RECORDS_FILE))
    }

    pub fn totals_path(&self) -> PathBuf {
        self.totals.clone().unwrap_or_else(|| self.out.join(super::TOTALS_FILE))
    }

    pub fn cache_path(&self) -> PathBuf {
        self.nvd_cache.clone().unwrap_or_else(|| self.out.join(super::CACHE_FILE))
    }

    /// Inclusive UTC year bounds implied by `since`/`until`.
    pub fn year_bounds(&self) -> (Option<i32>, Option<i32>) {
        let lo = self.scan.since.map(|d| d.year());
        let hi = self
            .scan
            .until
            .map(|d| (d - chrono::TimeDelta::nanoseconds(1)).year());
        (lo, hi)
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

/// RFC 3339, `YYYY-MM-DD`, or a bare `YYYY` (start of that year, UTC).
pub fn parse_date(v: &str) -> Result<DateTime<Utc>, String> {
    let v = v.trim();
    if let Ok(d) = DateTime::parse_from_rfc3339(v) {
        return Ok(d.with_timezone(&Utc));
    }
    if let Ok(d) = NaiveDate::parse_from_str(v, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc());
    }
    if v.len() == 4 {
        if let Ok(y) = v.parse::<i32>() {
            if let Some(d) = NaiveDate::from_ymd_opt(y, 1, 1) {
                return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc());
            }
        }
    }
    Err("expected RFC 3339, YYYY-MM-DD or YYYY".into())
}

/// `2019` or `2002-2020`.
pub fn parse_years(v: &str) -> Result<RangeInclusive<u16>, String> {
    let num = |s: &str| s.trim().parse::<u16>().map_err(|e| e.to_string());
    let (lo, hi) = match v.split_once('-') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => (num(v)?, num(v)?),
    };
    if lo > hi {
        return Err("empty year range".into());
    }
    Ok(lo..=hi)
}
