// SPDX-License-Identifier: Apache-2.0

//! Download of yearly NVD 1.1 feeds with `.meta` checksum checks.
//!
//! For each year the `.meta` file is fetched first; its `sha256` line is the
//! digest of the uncompressed JSON. A local `.json.gz` whose content already
//! hashes to that value is left alone, anything else is downloaded again.
//! Downloads land through a temp file and rename, so a failed run never
//! damages feeds that were already on disk.

use std::io::Read;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use crate::store::{write_atomic, StoreError};

pub const DEFAULT_BASE_URL: &str = "https://nvd.nist.gov/feeds/json/cve/1.1";

/// Digest log written next to the feeds after a successful run.
pub const CHECKSUM_LOG: &str = "feeds.sha256";

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("network: {url}: {message}")]
    Network { url: String, message: String },
    #[error("{url}: downloaded feed does not match its published sha256")]
    Integrity { url: String },
    #[error("{url}: no sha256 line in meta file")]
    Meta { url: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub base_url: String,
    pub dir: PathBuf,
    pub years: RangeInclusive<u16>,
    /// Only report what is already on disk.
    pub offline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedStatus {
    Downloaded,
    Unchanged,
    /// Offline and the feed is on disk.
    Present,
    /// Offline and the feed is not on disk.
    Missing,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchSummary {
    pub feeds: Vec<(u16, FeedStatus)>,
}

impl FetchSummary {
    pub fn count(&self, status: FeedStatus) -> usize {
        self.feeds.iter().filter(|(_, s)| *s == status).count()
    }
}

pub fn feed_file_name(year: u16) -> String {
    format!("nvdcve-1.1-{year}.json.gz")
}

pub fn fetch_feeds(cfg: &FetchConfig) -> Result<FetchSummary, FetchError> {
    std::fs::create_dir_all(&cfg.dir).map_err(|e| StoreError::io(&cfg.dir, e))?;
    let mut summary = FetchSummary::default();
    let mut digests = Vec::new();
    let base = cfg.base_url.trim_end_matches('/');

    for year in cfg.years.clone() {
        let name = feed_file_name(year);
        let local = cfg.dir.join(&name);

        if cfg.offline {
            let plain = cfg.dir.join(name.trim_end_matches(".gz"));
            let status = if local.is_file() || plain.is_file() {
                FeedStatus::Present
            } else {
                log::warn!("{name}: not on disk");
                FeedStatus::Missing
            };
            summary.feeds.push((year, status));
            continue;
        }

        let meta_url = format!("{base}/nvdcve-1.1-{year}.meta");
        let meta = String::from_utf8_lossy(&get(&meta_url)?).into_owned();
        let want = meta_sha256(&meta).ok_or(FetchError::Meta { url: meta_url })?;

        if gz_sha256(&std::fs::read(&local).unwrap_or_default()).as_deref() == Some(&want) {
            log::info!("{name}: unchanged ({want})");
            summary.feeds.push((year, FeedStatus::Unchanged));
        } else {
            let url = format!("{base}/{name}");
            let body = get(&url)?;
            if gz_sha256(&body).as_deref() != Some(&want) {
                return Err(FetchError::Integrity { url });
            }
            write_atomic(&local, &body)?;
            log::info!("{name}: downloaded ({want})");
            summary.feeds.push((year, FeedStatus::Downloaded));
        }
        digests.push(format!("{want}  {name}\n"));
    }

    if !cfg.offline {
        write_atomic(&cfg.dir.join(CHECKSUM_LOG), digests.concat().as_bytes())?;
    }
    Ok(summary)
}

/// The lowercase hex `sha256:` value of a `.meta` file.
pub fn meta_sha256(meta: &str) -> Option<String> {
    meta.lines()
        .filter_map(|l| l.trim().split_once(':'))
        .find(|(k, _)| k.trim() == "sha256")
        .map(|(_, v)| v.trim().to_ascii_lowercase())
        .filter(|v| v.len() == 64 && v.bytes().all(|b| b.is_ascii_hexdigit()))
}

/// Digest of the decompressed content, or `None` if it does not gunzip.
pub fn gz_sha256(gz: &[u8]) -> Option<String> {
    if gz.is_empty() {
        return None;
    }
    let mut plain = Vec::new();
    GzDecoder::new(gz).read_to_end(&mut plain).ok()?;
    Some(hex::encode(Sha256::digest(&plain)))
}

fn get(url: &str) -> Result<Vec<u8>, FetchError> {
    let net = |message: String| FetchError::Network {
        url: url.to_owned(),
        message,
    };
    let mut resp = ureq::get(url).call().map_err(|e| net(e.to_string()))?;
    let mut body = Vec::new();
    resp.body_mut()
        .as_reader()
        .read_to_end(&mut body)
        .map_err(|e| net(e.to_string()))?;
    Ok(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use std::io::Write;

    #[test]
    fn meta_parsing() {
        let meta = "lastModifiedDate:2019-12-05T03:01:35-05:00\r\nsize:90412353\r\nzipSize:4806937\r\ngzSize:4806793\r\nsha256:9FA4D3CC2F3ACB68E5A5217C9F0C5D1C85F5CD52D0F4E5E2A2F9A8E9D6E0F5AB\r\n";
        assert_eq!(
            meta_sha256(meta).unwrap(),
            "9fa4d3cc2f3acb68e5a5217c9f0c5d1c85f5cd52d0f4e5e2a2f9a8e9d6e0f5ab"
        );
        assert_eq!(meta_sha256("size:1\n"), None);
        assert_eq!(meta_sha256("sha256:abc\n"), None);
    }

    #[test]
    fn gz_digest_is_of_plain_content() {
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"hello").unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(
            gz_sha256(&gz).unwrap(),
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert_eq!(gz_sha256(b"hello"), None);
        assert_eq!(gz_sha256(b""), None);
    }

    #[test]
    fn offline_reports_disk_state() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(feed_file_name(2019)), b"x").unwrap();
        let s = fetch_feeds(&FetchConfig {
            base_url: "http://127.0.0.1:9".into(),
            dir: dir.path().to_owned(),
            years: 2018..=2019,
            offline: true,
        })
        .unwrap();
        assert_eq!(s.feeds, vec![(2018, FeedStatus::Missing), (2019, FeedStatus::Present)]);
    }
}
