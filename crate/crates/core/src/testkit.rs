// SPDX-License-Identifier: Apache-2.0

//! Builders for small git repositories and NVD feeds, used by the examples
//! and the integration tests.

use std::path::Path;

use git2::{Oid, Repository, Signature, Time};
use serde_json::{json, Value};

/// Writes commits with exact root listings and timestamps, so the resulting
/// commit ids are reproducible.
pub struct RepoBuilder {
    repo: Repository,
}

impl RepoBuilder {
    pub fn init(path: &Path) -> Result<Self, git2::Error> {
        let repo = Repository::init(path)?;
        repo.set_head("refs/heads/main")?;
        Ok(Self { repo })
    }

    pub fn repo(&self) -> &Repository {
        &self.repo
    }

    /// Creates a commit whose root tree holds one small file per name in
    /// `root` and points `branch` (e.g. `main`) at it.
    pub fn commit(
        &mut self,
        branch: &str,
        parents: &[Oid],
        root: &[&str],
        message: &str,
        unix_time: i64,
    ) -> Result<Oid, git2::Error> {
        let mut tb = self.repo.treebuilder(None)?;
        for name in root {
            let blob = self.repo.blob(format!("{name}\n").as_bytes())?;
            tb.insert(name, blob, 0o100644)?;
        }
        let tree = self.repo.find_tree(tb.write()?)?;
        let sig = Signature::new("Fixture", "fixture@example.com", &Time::new(unix_time, 0))?;
        let parents = parents
            .iter()
            .map(|p| self.repo.find_commit(*p))
            .collect::<Result<Vec<_>, _>>()?;
        let parent_refs: Vec<_> = parents.iter().collect();
        let oid = self
            .repo
            .commit(None, &sig, &sig, message, &tree, &parent_refs)?;
        self.repo
            .reference(&format!("refs/heads/{branch}"), oid, true, "fixture")?;
        Ok(oid)
    }

    /// A straight line of commits on `main`, each with the same root listing.
    pub fn linear(
        &mut self,
        root: &[&str],
        commits: &[(&str, i64)],
    ) -> Result<Vec<Oid>, git2::Error> {
        let mut out: Vec<Oid> = Vec::new();
        for (msg, t) in commits {
            let parents: Vec<Oid> = out.last().copied().into_iter().collect();
            out.push(self.commit("main", &parents, root, msg, *t)?);
        }
        Ok(out)
    }
}

/// CVSS block of a fixture feed item: severity string and impact subscore.
#[derive(Debug, Clone, Default)]
pub struct Cvss {
    pub severity: Option<String>,
    pub impact: Option<f64>,
}

impl Cvss {
    pub fn new(severity: &str, impact: f64) -> Self {
        Self {
            severity: Some(severity.to_owned()),
            impact: Some(impact),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FeedItem {
    pub id: String,
    /// NVD style, e.g. `2019-01-02T12:00Z`.
    pub published: String,
    /// Raw problemtype values such as `CWE-79` or `NVD-CWE-noinfo`.
    pub problemtypes: Vec<String>,
    pub v3: Option<Cvss>,
    pub v2: Option<Cvss>,
}

impl FeedItem {
    pub fn new(id: &str, published: &str, problemtypes: &[&str]) -> Self {
        Self {
            id: id.to_owned(),
            published: published.to_owned(),
            problemtypes: problemtypes.iter().map(|s| (*s).to_owned()).collect(),
            ..Default::default()
        }
    }

    pub fn v3(mut self, c: Cvss) -> Self {
        self.v3 = Some(c);
        self
    }

    pub fn v2(mut self, c: Cvss) -> Self {
        self.v2 = Some(c);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut impact = serde_json::Map::new();
        if let Some(c) = &self.v3 {
            let mut cvss = json!({ "version": "3.1", "baseScore": 7.5 });
            if let Some(s) = &c.severity {
                cvss["baseSeverity"] = json!(s);
            }
            let mut block = json!({ "cvssV3": cvss, "exploitabilityScore": 3.9 });
            if let Some(i) = c.impact {
                block["impactScore"] = json!(i);
            }
            impact.insert("baseMetricV3".into(), block);
        }
        if let Some(c) = &self.v2 {
            let mut block = json!({ "cvssV2": { "version": "2.0", "baseScore": 5.0 }, "exploitabilityScore": 10.0 });
            if let Some(s) = &c.severity {
                block["severity"] = json!(s);
            }
            if let Some(i) = c.impact {
                block["impactScore"] = json!(i);
            }
            impact.insert("baseMetricV2".into(), block);
        }
        json!({
            "cve": {
                "data_type": "CVE",
                "data_format": "MITRE",
                "data_version": "4.0",
                "CVE_data_meta": { "ID": self.id, "ASSIGNER": "cve@mitre.org" },
                "problemtype": { "problemtype_data": [ {
                    "description": self.problemtypes.iter()
                        .map(|v| json!({ "lang": "en", "value": v }))
                        .collect::<Vec<_>>()
                } ] },
                "references": { "reference_data": [] },
                "description": { "description_data": [] }
            },
            "configurations": { "CVE_data_version": "4.0", "nodes": [] },
            "impact": impact,
            "publishedDate": self.published,
            "lastModifiedDate": self.published,
        })
    }
}

/// A complete NVD 1.1 feed document.
pub fn feed_json(items: &[FeedItem]) -> Vec<u8> {
    let doc = json!({
        "CVE_data_type": "CVE",
        "CVE_data_format": "MITRE",
        "CVE_data_version": "4.0",
        "CVE_data_numberOfCVEs": items.len().to_string(),
        "CVE_data_timestamp": "2020-01-01T00:00Z",
        "CVE_Items": items.iter().map(FeedItem::to_json).collect::<Vec<_>>(),
    });
    serde_json::to_vec_pretty(&doc).expect("plain data")
}
