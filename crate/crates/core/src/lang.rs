// SPDX-License-Identifier: Apache-2.0

//! Project language from the names in a revision's root directory.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Root markers of an importable Python package. `__init.py__` is accepted
/// verbatim alongside the real `__init__.py`.
pub const PYTHON_MARKERS: [&str; 3] = ["setup.py", "__init__.py", "__init.py__"];

/// Conventional Node.js entry points. `package.json` is deliberately absent:
/// it shows up in PHP and other front-end tooling too.
pub const JAVASCRIPT_MARKERS: [&str; 3] = ["index.js", "app.js", "server.js"];

/// Base names of the top-level tree entries of one revision.
///
/// Names are compared case-sensitively.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RootListing(BTreeSet<String>);

impl RootListing {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        self.0.insert(name.into());
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for RootListing {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProjectLanguage {
    #[serde(rename = "JS")]
    JavaScript,
    #[serde(rename = "PY")]
    Python,
    Both,
    Unknown,
}

impl ProjectLanguage {
    pub const ALL: [ProjectLanguage; 4] = [
        ProjectLanguage::JavaScript,
        ProjectLanguage::Python,
        ProjectLanguage::Both,
        ProjectLanguage::Unknown,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProjectLanguage::JavaScript => "JS",
            ProjectLanguage::Python => "PY",
            ProjectLanguage::Both => "BOTH",
            ProjectLanguage::Unknown => "UNKNOWN",
        }
    }

    pub fn from_flags(python: bool, javascript: bool) -> Self {
        match (python, javascript) {
            (true, true) => ProjectLanguage::Both,
            (true, false) => ProjectLanguage::Python,
            (false, true) => ProjectLanguage::JavaScript,
            (false, false) => ProjectLanguage::Unknown,
        }
    }
}

impl fmt::Display for ProjectLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

impl FromStr for ProjectLanguage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProjectLanguage::ALL
            .into_iter()
            .find(|l| l.label() == s)
            .ok_or_else(|| format!("unknown language label {s:?}"))
    }
}

pub fn is_python(root: &RootListing) -> bool {
    PYTHON_MARKERS.iter().any(|m| root.contains(m))
}

pub fn is_javascript(root: &RootListing) -> bool {
    JAVASCRIPT_MARKERS.iter().any(|m| root.contains(m))
}

pub fn classify(root: &RootListing) -> ProjectLanguage {
    ProjectLanguage::from_flags(is_python(root), is_javascript(root))
}
