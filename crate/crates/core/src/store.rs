// SPDX-License-Identifier: Apache-2.0

//! Persisted NDJSON tables: schema headers, atomic writes and validation.
//!
//! Every table starts with a header line `{"schema":"<name>/<version>"}`
//! followed by one JSON object per line. Readers reject a header whose name
//! differs from the expected one or whose version they do not know.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: missing or malformed schema header")]
    MissingHeader { path: PathBuf },
    #[error("{path}: expected schema {expected}, found {found}")]
    SchemaMismatch {
        path: PathBuf,
        expected: SchemaVersion,
        found: SchemaVersion,
    },
    #[error("{path}: unsupported version {found} (reader knows {expected})")]
    UnsupportedVersion {
        path: PathBuf,
        expected: SchemaVersion,
        found: SchemaVersion,
    },
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchemaVersion {
    pub name: String,
    pub version: u32,
}

impl SchemaVersion {
    pub fn new(name: &str, version: u32) -> Self {
        Self {
            name: name.to_owned(),
            version,
        }
    }

    /// Mitigation records written by `scan`.
    pub fn records() -> Self {
        Self::new("records", 1)
    }

    pub fn nvd_cache() -> Self {
        Self::new("nvd-cache", 1)
    }

    /// Portable commit export.
    pub fn commits() -> Self {
        Self::new("commits", 1)
    }

    pub fn header_line(&self) -> String {
        serde_json::json!({ "schema": self.to_string() }).to_string()
    }

    /// Parses a header line. Returns `None` unless the line is a JSON object
    /// whose `schema` value has the `<name>/<version>` shape.
    pub fn parse_header(line: &str) -> Option<Self> {
        let value: serde_json::Value = serde_json::from_str(line).ok()?;
        let tag = value.as_object()?.get("schema")?.as_str()?;
        let (name, version) = tag.rsplit_once('/')?;
        if name.is_empty() {
            return None;
        }
        Some(Self::new(name, version.parse().ok()?))
    }
}

impl fmt::Display for SchemaVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.version)
    }
}

/// Checks a parsed header against what the reader expects.
pub fn check_header(
    path: &Path,
    line: Option<&str>,
    expected: &SchemaVersion,
) -> Result<(), StoreError> {
    let found = line
        .and_then(SchemaVersion::parse_header)
        .ok_or_else(|| StoreError::MissingHeader {
            path: path.to_owned(),
        })?;
    if found.name != expected.name {
        return Err(StoreError::SchemaMismatch {
            path: path.to_owned(),
            expected: expected.clone(),
            found,
        });
    }
    if found.version != expected.version {
        return Err(StoreError::UnsupportedVersion {
            path: path.to_owned(),
            expected: expected.clone(),
            found,
        });
    }
    Ok(())
}

/// A file that appears at its destination only when [`AtomicFile::commit`]
/// succeeds. Dropping it without committing leaves the destination untouched.
pub struct AtomicFile {
    dest: PathBuf,
    out: BufWriter<NamedTempFile>,
}

impl AtomicFile {
    pub fn create(dest: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dest = dest.into();
        let dir = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
            _ => PathBuf::from("."),
        };
        let tmp = NamedTempFile::new_in(&dir).map_err(|e| StoreError::io(&dest, e))?;
        Ok(Self {
            dest,
            out: BufWriter::new(tmp),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dest
    }

    pub fn commit(self) -> Result<(), StoreError> {
        let dest = self.dest;
        let tmp = self
            .out
            .into_inner()
            .map_err(|e| StoreError::io(&dest, e.into_error()))?;
        tmp.as_file()
            .sync_all()
            .map_err(|e| StoreError::io(&dest, e))?;
        tmp.persist(&dest)
            .map_err(|e| StoreError::io(&dest, e.error))?;
        Ok(())
    }
}

impl Write for AtomicFile {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.out.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub fn write_atomic(dest: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let mut f = AtomicFile::create(dest)?;
    f.write_all(bytes).map_err(|e| StoreError::io(dest, e))?;
    f.commit()
}

/// Writes an NDJSON table: header line, then one compact JSON object per row.
pub struct NdjsonWriter {
    file: AtomicFile,
    rows: usize,
}

impl NdjsonWriter {
    pub fn create(dest: impl Into<PathBuf>, schema: &SchemaVersion) -> Result<Self, StoreError> {
        let mut file = AtomicFile::create(dest)?;
        let header = schema.header_line();
        writeln!(file, "{header}").map_err(|e| StoreError::io(file.path(), e))?;
        Ok(Self { file, rows: 0 })
    }

    pub fn write_row<T: Serialize>(&mut self, row: &T) -> Result<(), StoreError> {
        let path = self.file.path().to_owned();
        serde_json::to_writer(&mut self.file, row)
            .map_err(|e| StoreError::io(&path, e.into()))?;
        self.file
            .write_all(b"\n")
            .map_err(|e| StoreError::io(&path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(self) -> Result<usize, StoreError> {
        let rows = self.rows;
        self.file.commit()?;
        Ok(rows)
    }
}

/// Reads the data lines of an NDJSON table after checking its header.
///
/// Yields `(line_number, line)` with 1-based numbering, header included in
/// the count, so line numbers match what an editor shows.
pub fn read_table(
    path: &Path,
    schema: &SchemaVersion,
) -> Result<impl Iterator<Item = Result<(usize, String), StoreError>>, StoreError> {
    let file = File::open(path).map_err(|e| StoreError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| StoreError::io(path, e))?;
    check_header(path, header.as_deref(), schema)?;
    let owned = path.to_owned();
    Ok(lines.enumerate().filter_map(move |(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 2, l))),
        Err(e) => Some(Err(StoreError::io(&owned, e))),
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub rows: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Validates every data line of a table against the row schema and the row
/// type's invariants.
///
/// Header problems are errors; per-line problems are collected in the report.
pub fn validate_file(path: &Path, expected: &SchemaVersion) -> Result<ValidationReport, StoreError> {
    let check: fn(&str) -> Result<(), String> = match expected.name.as_str() {
        "records" => crate::analytics::validate_record_line,
        "nvd-cache" => crate::nvd::validate_cache_line,
        "commits" => crate::ingest::validate_export_line,
        _ => |line| {
            serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(line)
                .map(drop)
                .map_err(|e| e.to_string())
        },
    };

    let mut report = ValidationReport::default();
    for item in read_table(path, expected)? {
        let (line, text) = item?;
        report.rows += 1;
        if let Err(message) = check(&text) {
            report.violations.push(Violation { line, message });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_grammar() {
        let s = SchemaVersion::nvd_cache();
        assert_eq!(s.header_line(), r#"{"schema":"nvd-cache/1"}"#);
        assert_eq!(SchemaVersion::parse_header(&s.header_line()), Some(s));
        assert_eq!(SchemaVersion::parse_header(r#"{"schema":"a/b/3"}"#), Some(SchemaVersion::new("a/b", 3)));
        assert_eq!(SchemaVersion::parse_header(r#"{"schema":"records"}"#), None);
        assert_eq!(SchemaVersion::parse_header(r#"{"schema":"/1"}"#), None);
        assert_eq!(SchemaVersion::parse_header("[1]"), None);
    }

    #[test]
    fn atomic_file_only_appears_on_commit() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("x.txt");
        {
            let mut f = AtomicFile::create(&dest).unwrap();
            f.write_all(b"hello").unwrap();
        }
        assert!(!dest.exists());
        write_atomic(&dest, b"hello").unwrap();
        assert_eq!(std::fs::read(&dest).unwrap(), b"hello");
        // no stray temp files
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn read_table_checks_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ndjson");
        std::fs::write(&path, "{\"schema\":\"records/2\"}\n{}\n").unwrap();
        assert!(matches!(
            read_table(&path, &SchemaVersion::records()),
            Err(StoreError::UnsupportedVersion { .. })
        ));
        assert!(matches!(
            read_table(&path, &SchemaVersion::nvd_cache()),
            Err(StoreError::SchemaMismatch { .. })
        ));
        std::fs::write(&path, "").unwrap();
        assert!(matches!(
            read_table(&path, &SchemaVersion::records()),
            Err(StoreError::MissingHeader { .. })
        ));
    }
}
