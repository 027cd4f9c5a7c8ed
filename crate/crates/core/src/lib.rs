// SPDX-License-Identifier: Apache-2.0

//! Mining version-control histories for vulnerability-mitigation commits.
//!
//! The pipeline has five stages, each in its own module:
//!
//! - [`ingest`] streams commit records out of git repositories or NDJSON exports.
//! - [`refs`] finds CVE/CWE identifiers in commit messages.
//! - [`lang`] assigns a project language from the root directory listing.
//! - [`nvd`] parses NVD feeds and resolves CVEs to CWE categories and dates.
//! - [`analytics`] computes mitigation ratios, CWE distributions and reaction times.
//!
//! [`report`] wires the stages together behind the `vcm` command and writes
//! the CSV/JSON outputs; [`store`] owns the on-disk table formats.

pub mod analytics;
pub mod ingest;
pub mod lang;
pub mod nvd;
pub mod refs;
pub mod report;
pub mod store;
pub mod testkit;

pub use analytics::{MitigationRecord, SeriesPolicy};
pub use ingest::{CommitRecord, DateField, ScanConfig};
pub use lang::{classify, ProjectLanguage, RootListing};
pub use nvd::{CveEntry, NvdCache};
pub use refs::{classify_message, extract_refs, first_stage_filter, CveId, CweId, VulnRefSet};
