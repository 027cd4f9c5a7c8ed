// SPDX-License-Identifier: Apache-2.0

//! CVE/CWE reference detection and extraction for commit messages.
//!
//! Detection is two-staged. A cheap case-insensitive substring check
//! ([`first_stage_filter`]) selects candidate messages, then the extraction
//! patterns pull out syntactically valid identifiers. A candidate that yields
//! nothing is reported as a false positive (`execve-safe`, `nvd-downloader`).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Markers checked by the first-stage filter, compared ASCII case-insensitively.
pub const FILTER_MARKERS: [&str; 3] = ["CVE-", "CWE-", "NVD-"];

/// Lowest CVE year accepted. The CVE list starts in 1999.
pub const MIN_CVE_YEAR: u16 = 1999;

// `[0-9]` rather than `\d`: the regex crate's `\d` is Unicode-aware.
static CVE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i:cve)-([0-9]{4})-([0-9]{4,})").unwrap());
static CWE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i:cwe)-([0-9]{1,4})").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdError {
    #[error("not a CVE identifier: {0:?}")]
    BadCve(String),
    #[error("not a CWE identifier: {0:?}")]
    BadCwe(String),
}

/// A CVE identifier such as `CVE-2014-0160`.
///
/// The sequence part is kept as its digit string so that zero padding
/// (`CVE-2019-0001`) survives the round trip to text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CveId {
    year: u16,
    sequence: String,
}

impl CveId {
    pub fn new(year: u16, sequence: &str) -> Result<Self, IdError> {
        let ok = (MIN_CVE_YEAR..=9999).contains(&year)
            && sequence.len() >= 4
            && sequence.bytes().all(|b| b.is_ascii_digit());
        if ok {
            Ok(Self {
                year,
                sequence: sequence.to_owned(),
            })
        } else {
            Err(IdError::BadCve(format!("CVE-{year}-{sequence}")))
        }
    }

    pub fn year(&self) -> u16 {
        self.year
    }

    pub fn sequence(&self) -> &str {
        &self.sequence
    }
}

impl Ord for CveId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Numeric order on the sequence for canonical (unpadded beyond 4) forms.
        (self.year, self.sequence.len(), &self.sequence).cmp(&(
            other.year,
            other.sequence.len(),
            &other.sequence,
        ))
    }
}

impl PartialOrd for CveId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CVE-{}-{}", self.year, self.sequence)
    }
}

impl FromStr for CveId {
    type Err = IdError;

    /// Parses exactly one identifier spanning the whole input, any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IdError::BadCve(s.to_owned());
        let rest = strip_prefix_ci(s, "CVE-").ok_or_else(bad)?;
        let (year, seq) = rest.split_once('-').ok_or_else(bad)?;
        if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: u16 = year.parse().map_err(|_| bad())?;
        CveId::new(year, seq).map_err(|_| bad())
    }
}

impl Serialize for CveId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CveId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A CWE category such as `CWE-79`. Always in `1..=9999`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct CweId(u16);

impl CweId {
    pub fn new(number: u32) -> Result<Self, IdError> {
        if (1..=9999).contains(&number) {
            Ok(Self(number as u16))
        } else {
            Err(IdError::BadCwe(number.to_string()))
        }
    }

    pub fn number(self) -> u32 {
        u32::from(self.0)
    }
}

impl TryFrom<u32> for CweId {
    type Error = IdError;
    fn try_from(n: u32) -> Result<Self, IdError> {
        CweId::new(n)
    }
}

impl From<CweId> for u32 {
    fn from(c: CweId) -> u32 {
        c.number()
    }
}

impl fmt::Display for CweId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CWE-{}", self.0)
    }
}

impl FromStr for CweId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IdError::BadCwe(s.to_owned());
        let digits = strip_prefix_ci(s, "CWE-").ok_or_else(bad)?;
        if digits.is_empty() || digits.len() > 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        CweId::new(digits.parse().map_err(|_| bad())?).map_err(|_| bad())
    }
}

/// Deduplicated identifiers found in one message.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnRefSet {
    pub cves: BTreeSet<CveId>,
    pub cwes: BTreeSet<CweId>,
}

impl VulnRefSet {
    pub fn is_empty(&self) -> bool {
        self.cves.is_empty() && self.cwes.is_empty()
    }

    /// Canonical forms separated by single spaces, CVEs first.
    pub fn render(&self) -> String {
        self.cves
            .iter()
            .map(ToString::to_string)
            .chain(self.cwes.iter().map(ToString::to_string))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionReport {
    pub matched_filter: bool,
    pub refs: VulnRefSet,
    /// Passed the filter but contained no valid identifier.
    pub false_positive: bool,
}

/// True iff the message contains `CVE-`, `CWE-` or `NVD-` in any letter case.
pub fn first_stage_filter(message: &str) -> bool {
    let bytes = message.as_bytes();
    bytes.windows(4).any(|w| {
        FILTER_MARKERS
            .iter()
            .any(|m| w.eq_ignore_ascii_case(m.as_bytes()))
    })
}

/// Extracts every distinct CVE and CWE identifier from `message`.
///
/// A match immediately preceded by an alphanumeric character is ignored, so
/// `XCVE-2020-1234` yields nothing while `(CVE-2020-1234)` is accepted.
/// CWE numbers lose leading zeros; `CWE-0` is not a category and is dropped.
pub fn extract_refs(message: &str) -> VulnRefSet {
    let mut refs = VulnRefSet::default();

    for caps in CVE_RE.captures_iter(message) {
        let whole = caps.get(0).unwrap();
        if preceded_by_alnum(message, whole.start()) {
            continue;
        }
        let year: u16 = caps[1].parse().expect("four ascii digits");
        if let Ok(id) = CveId::new(year, &caps[2]) {
            refs.cves.insert(id);
        }
    }

    for caps in CWE_RE.captures_iter(message) {
        let whole = caps.get(0).unwrap();
        if preceded_by_alnum(message, whole.start()) {
            continue;
        }
        let number: u32 = caps[1].parse().expect("at most four ascii digits");
        if let Ok(id) = CweId::new(number) {
            refs.cwes.insert(id);
        }
    }

    refs
}

pub fn classify_message(message: &str) -> ExtractionReport {
    let matched_filter = first_stage_filter(message);
    // Every extraction match contains a filter marker, so skipping extraction
    // for non-candidates loses nothing.
    let refs = if matched_filter {
        extract_refs(message)
    } else {
        VulnRefSet::default()
    };
    let false_positive = matched_filter && refs.is_empty();
    ExtractionReport {
        matched_filter,
        refs,
        false_positive,
    }
}

fn preceded_by_alnum(text: &str, start: usize) -> bool {
    text[..start]
        .chars()
        .next_back()
        .is_some_and(char::is_alphanumeric)
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}
