// SPDX-License-Identifier: Apache-2.0

//! Commit records from git object stores or from a portable NDJSON export.

use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, TimeZone, Utc};
use git2::{Oid, Repository, Sort};
use serde::{Deserialize, Serialize};

use crate::lang::RootListing;
use crate::store::{NdjsonWriter, SchemaVersion, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: cannot open repository: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: git2::Error,
    },
    #[error("{repo}: revision walk failed: {source}")]
    Walk {
        repo: String,
        #[source]
        source: git2::Error,
    },
    #[error("{repo}: skipping commit {commit}: {source}")]
    Commit {
        repo: String,
        commit: String,
        #[source]
        source: git2::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// One revision with exactly the fields the pipeline needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    #[serde(rename = "repo")]
    pub repo_id: String,
    #[serde(rename = "id")]
    pub commit_id: String,
    pub author_date: DateTime<Utc>,
    pub committer_date: DateTime<Utc>,
    pub message: String,
    #[serde(rename = "root")]
    pub root_entries: RootListing,
}

impl CommitRecord {
    pub fn date(&self, field: DateField) -> DateTime<Utc> {
        match field {
            DateField::Author => self.author_date,
            DateField::Committer => self.committer_date,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DateField {
    Author,
    /// When the change entered history.
    #[default]
    Committer,
}

impl FromStr for DateField {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "author" => Ok(DateField::Author),
            "committer" => Ok(DateField::Committer),
            _ => Err(format!("date field must be `author` or `committer`, got {s:?}")),
        }
    }
}

impl fmt::Display for DateField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DateField::Author => "author",
            DateField::Committer => "committer",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchPolicy {
    /// Everything reachable from any ref or from HEAD.
    #[default]
    AllRefs,
    DefaultBranch,
}

impl FromStr for BranchPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all-refs" | "all" => Ok(BranchPolicy::AllRefs),
            "default-branch" | "head" => Ok(BranchPolicy::DefaultBranch),
            _ => Err(format!("branch policy must be `all-refs` or `default-branch`, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanConfig {
    pub date_field: DateField,
    /// Inclusive lower bound on the configured date.
    pub since: Option<DateTime<Utc>>,
    /// Exclusive upper bound on the configured date.
    pub until: Option<DateTime<Utc>>,
    pub branches: BranchPolicy,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), String> {
        match (self.since, self.until) {
            (Some(s), Some(u)) if s > u => Err(format!("since ({s}) is after until ({u})")),
            _ => Ok(()),
        }
    }

    pub fn admits(&self, rec: &CommitRecord) -> bool {
        self.admits_date(rec.date(self.date_field))
    }

    pub fn admits_date(&self, d: DateTime<Utc>) -> bool {
        self.since.is_none_or(|s| d >= s) && self.until.is_none_or(|u| d < u)
    }
}

/// Label for a repository: its directory name without a `.git` suffix.
pub fn repo_label(path: &Path) -> String {
    let path = if path.file_name().is_some_and(|n| n == ".git") {
        path.parent().unwrap_or(path)
    } else {
        path
    };
    let name = path
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .or_else(|| path.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| path.display().to_string());
    name.strip_suffix(".git").map(str::to_owned).unwrap_or(name)
}

/// Streaming scan over one repository.
///
/// The reachable commit ids are collected up front (the walk deduplicates
/// them); each record is materialized lazily on `next`.
pub struct RepoScan {
    repo: Repository,
    repo_id: String,
    oids: std::vec::IntoIter<Oid>,
    cfg: ScanConfig,
}

impl RepoScan {
    pub fn repo_id(&self) -> &str {
        &self.repo_id
    }

    /// Number of commits still to be read, before date filtering.
    pub fn remaining(&self) -> usize {
        self.oids.len()
    }

    fn read(&self, oid: Oid) -> Result<CommitRecord, git2::Error> {
        let commit = self.repo.find_commit(oid)?;
        let tree = commit.tree()?;
        let root_entries = tree
            .iter()
            .map(|e| String::from_utf8_lossy(e.name_bytes()).into_owned())
            .collect();
        let author_date = git_time(commit.author().when());
        let committer_date = git_time(commit.committer().when());
        Ok(CommitRecord {
            repo_id: self.repo_id.clone(),
            commit_id: oid.to_string(),
            author_date,
            committer_date,
            message: String::from_utf8_lossy(commit.message_bytes()).into_owned(),
            root_entries,
        })
    }
}

impl Iterator for RepoScan {
    type Item = Result<CommitRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let oid = self.oids.next()?;
            match self.read(oid) {
                Ok(rec) if self.cfg.admits(&rec) => return Some(Ok(rec)),
                Ok(_) => continue,
                Err(source) => {
                    return Some(Err(IngestError::Commit {
                        repo: self.repo_id.clone(),
                        commit: oid.to_string(),
                        source,
                    }))
                }
            }
        }
    }
}

/// Opens a repository and prepares a topological walk over the commits
/// selected by the branch policy. Corrupt commits surface as `Err` items.
pub fn scan_repository(path: &Path, cfg: &ScanConfig) -> Result<RepoScan, IngestError> {
    let repo = Repository::open(path).map_err(|source| IngestError::Open {
        path: path.to_owned(),
        source,
    })?;
    let repo_id = repo_label(path);
    let walk_err = |source| IngestError::Walk {
        repo: repo_id.clone(),
        source,
    };

    let mut walk = repo.revwalk().map_err(walk_err)?;
    walk.set_sorting(Sort::TOPOLOGICAL | Sort::TIME)
        .map_err(walk_err)?;
    // An unborn HEAD (empty repository) has nothing to walk.
    let has_head = match repo.head() {
        Ok(_) => true,
        Err(e) if matches!(e.code(), git2::ErrorCode::UnbornBranch | git2::ErrorCode::NotFound) => false,
        Err(e) => return Err(walk_err(e)),
    };
    if cfg.branches == BranchPolicy::AllRefs {
        walk.push_glob("*").map_err(walk_err)?;
    }
    if has_head {
        walk.push_head().map_err(walk_err)?;
    }

    let mut oids = Vec::new();
    for oid in walk {
        match oid {
            Ok(oid) => oids.push(oid),
            Err(e) => log::warn!("{repo_id}: walk error: {e}"),
        }
    }

    Ok(RepoScan {
        repo,
        repo_id,
        oids: oids.into_iter(),
        cfg: cfg.clone(),
    })
}

fn git_time(t: git2::Time) -> DateTime<Utc> {
    Utc.timestamp_opt(t.seconds(), 0)
        .single()
        .unwrap_or(DateTime::<Utc>::UNIX_EPOCH)
}

/// Why an export line was not turned into a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportSkip {
    pub line: usize,
    pub reason: String,
}

/// Reads a commit export: one JSON object per line with keys `repo`, `id`,
/// `author_date`, `committer_date`, `message` and `root`.
///
/// A `{"schema":"commits/1"}` header on the first line is accepted and not
/// counted. Blank lines are ignored.
pub fn read_export<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<CommitRecord, ExportSkip>> {
    let schema = SchemaVersion::commits();
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| {
            let line_no = i + 1;
            let text = match line {
                Ok(t) => t,
                Err(e) => {
                    return Some(Err(ExportSkip {
                        line: line_no,
                        reason: e.to_string(),
                    }))
                }
            };
            if text.trim().is_empty() {
                return None;
            }
            if line_no == 1 {
                if let Some(h) = SchemaVersion::parse_header(&text) {
                    return (h != schema).then(|| {
                        Err(ExportSkip {
                            line: line_no,
                            reason: format!("unexpected schema header {h}"),
                        })
                    });
                }
            }
            Some(serde_json::from_str(&text).map_err(|e| ExportSkip {
                line: line_no,
                reason: e.to_string(),
            }))
        })
}

pub fn open_export(path: &Path) -> Result<impl Iterator<Item = Result<CommitRecord, ExportSkip>>, IngestError> {
    let f = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(read_export(std::io::BufReader::new(f)))
}

/// Writes records in the export format, with a schema header.
pub struct ExportWriter(NdjsonWriter);

impl ExportWriter {
    pub fn create(path: &Path) -> Result<Self, StoreError> {
        NdjsonWriter::create(path, &SchemaVersion::commits()).map(Self)
    }

    pub fn write(&mut self, rec: &CommitRecord) -> Result<(), StoreError> {
        self.0.write_row(rec)
    }

    pub fn finish(self) -> Result<usize, StoreError> {
        self.0.finish()
    }
}

pub(crate) fn validate_export_line(line: &str) -> Result<(), String> {
    serde_json::from_str::<CommitRecord>(line)
        .map(drop)
        .map_err(|e| e.to_string())
}
