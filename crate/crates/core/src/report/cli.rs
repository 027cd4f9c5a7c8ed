// SPDX-License-Identifier: Apache-2.0

//! Command-line surface of `vcm`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{cmd_analyze, cmd_fetch_nvd, cmd_report, cmd_scan, CliError, Layer, RunConfig};
use crate::nvd::fetch::FeedStatus;

#[derive(Debug, Parser)]
#[command(name = "vcm", version, about = "Find vulnerability-mitigation commits and report CWE and reaction-time statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract mitigation records and commit totals from repositories or exports.
    Scan(Flags),
    /// Compute report files from the output of `scan`.
    Analyze(Flags),
    /// Download yearly NVD feeds into --nvd-dir.
    FetchNvd(Flags),
    /// `scan` followed by `analyze` (and `fetch-nvd` first with --fetch).
    Report(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Git repositories (directories) or commit-export NDJSON files.
    pub inputs: Vec<PathBuf>,
    /// key = value config file; also VCM_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory of NVD JSON 1.1 feeds (.json or .json.gz).
    #[arg(long)]
    pub nvd_dir: Option<PathBuf>,
    /// Existing nvd-cache.ndjson to use.
    #[arg(long)]
    pub nvd_cache: Option<PathBuf>,
    /// Glob selecting feed files inside --nvd-dir.
    #[arg(long)]
    pub feed_pattern: Option<String>,
    /// Base URL of the yearly feeds.
    #[arg(long)]
    pub nvd_url: Option<String>,
    /// Feed years to fetch, `2019` or `2002-2020`.
    #[arg(long)]
    pub years: Option<String>,
    /// Do not touch the network; only report feeds on disk.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub offline: Option<String>,
    /// Fetch feeds before scanning (report only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fetch: Option<String>,
    /// Commit date used for years and reaction times: committer or author.
    #[arg(long)]
    pub date_field: Option<String>,
    /// Lower date bound (inclusive): RFC 3339, YYYY-MM-DD or YYYY.
    #[arg(long)]
    pub since: Option<String>,
    /// Upper date bound (exclusive).
    #[arg(long)]
    pub until: Option<String>,
    /// all-refs or default-branch.
    #[arg(long)]
    pub branches: Option<String>,
    /// Minimum per-language count for a CWE to be reported by reaction time.
    #[arg(long)]
    pub threshold: Option<String>,
    /// Count revisions classified as both languages in both series (default true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_both: Option<String>,
    /// Add unclassified revisions as a third series.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_unknown: Option<String>,
    /// Deduplicate commit ids across repositories.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub global_dedup: Option<String>,
    /// Worker threads; also VCM_THREADS.
    #[arg(long)]
    pub threads: Option<String>,
    /// Also write every scanned commit to this export file.
    #[arg(long)]
    pub export_commits: Option<PathBuf>,
    /// records.ndjson to analyze (default <out>/records.ndjson).
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// totals.csv to analyze (default <out>/totals.csv).
    #[arg(long)]
    pub totals: Option<PathBuf>,
}

impl Flags {
    pub fn layer(&self) -> Layer {
        let mut l = Layer::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                l.set(k, v).expect("known key");
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        if !self.inputs.is_empty() {
            let joined = self
                .inputs
                .iter()
                .map(|p| p.to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join(",");
            put("inputs", Some(joined));
        }
        put("out", path(&self.out));
        put("nvd_dir", path(&self.nvd_dir));
        put("nvd_cache", path(&self.nvd_cache));
        put("feed_pattern", self.feed_pattern.clone());
        put("nvd_url", self.nvd_url.clone());
        put("years", self.years.clone());
        put("offline", self.offline.clone());
        put("fetch", self.fetch.clone());
        put("date_field", self.date_field.clone());
        put("since", self.since.clone());
        put("until", self.until.clone());
        put("branches", self.branches.clone());
        put("threshold", self.threshold.clone());
        put("include_both", self.include_both.clone());
        put("include_unknown", self.include_unknown.clone());
        put("global_dedup", self.global_dedup.clone());
        put("threads", self.threads.clone());
        put("export_commits", path(&self.export_commits));
        put("records", path(&self.records));
        put("totals", path(&self.totals));
        l
    }

    fn config(&self, env: &[(String, String)]) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::resolve(
            self.layer(),
            self.config.as_deref(),
            env.iter().map(|(k, v)| (k.as_str(), v.as_str())),
        )?;
        // Inputs named on the command line replace, never extend, configured ones.
        if !self.inputs.is_empty() {
            cfg.inputs = self.inputs.clone();
        }
        Ok(cfg)
    }
}

/// Runs one command and returns its summary line.
pub fn execute(cli: &Cli, env: &[(String, String)]) -> Result<String, CliError> {
    match &cli.command {
        Command::Scan(f) => {
            let s = cmd_scan(&f.config(env)?)?;
            Ok(format!(
                "scan: {} commits, {} mitigation records, {} false positives, {} unresolved CVEs, {} inputs read, {} failed, {} warnings",
                s.stats.commits,
                s.stats.records,
                s.stats.false_positives,
                s.stats.unresolved_cves,
                s.inputs_ok,
                s.inputs_failed.len(),
                s.warnings.len()
            ))
        }
        Command::Analyze(f) => {
            let s = cmd_analyze(&f.config(env)?)?;
            Ok(format!("analyze: {} records, {} files written", s.records, s.files.len()))
        }
        Command::FetchNvd(f) => {
            let s = cmd_fetch_nvd(&f.config(env)?)?;
            Ok(format!(
                "fetch-nvd: {} downloaded, {} unchanged, {} present, {} missing",
                s.count(FeedStatus::Downloaded),
                s.count(FeedStatus::Unchanged),
                s.count(FeedStatus::Present),
                s.count(FeedStatus::Missing)
            ))
        }
        Command::Report(f) => {
            let (s, a) = cmd_report(&f.config(env)?)?;
            Ok(format!(
                "report: {} commits, {} mitigation records, {} files written",
                s.stats.commits,
                s.stats.records,
                a.files.len()
            ))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, env: &[(String, String)]) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli, env) {
        Ok(line) => {
            eprintln!("{line}");
            0
        }
        Err(e) => {
            eprintln!("vcm: {e}");
            e.exit_code()
        }
    }
}
