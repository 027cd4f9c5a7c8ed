// SPDX-License-Identifier: Apache-2.0

//! Parse an NVD JSON 1.1 feed (`.json` or `.json.gz`) and print the entries.
//! Without an argument a small built-in feed is used.
//!
//! ```text
//! cargo run --example parse_nvd_feed -- nvdcve-1.1-2019.json.gz
//! ```

use vcm::nvd::{parse_feed, parse_feed_file};
use vcm::testkit::{feed_json, Cvss, FeedItem};
use vcm::NvdCache;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (entries, report) = match std::env::args().nth(1) {
        Some(path) => parse_feed_file(path.as_ref())?,
        None => parse_feed(&feed_json(&[
            FeedItem::new("CVE-2018-3728", "2018-06-07T02:29Z", &["CWE-79", "CWE-200"])
                .v3(Cvss::new("HIGH", 5.9))
                .v2(Cvss::new("MEDIUM", 6.4)),
            FeedItem::new("CVE-2018-1000620", "2018-07-09T20:29Z", &["NVD-CWE-noinfo"])
                .v2(Cvss::new("HIGH", 6.4)),
            FeedItem::new("CVE-2019-10744", "2019-07-26T00:15Z", &["CWE-20", "CWE-400"]),
        ]))?,
    };
    for e in entries.iter().take(20) {
        let cwes: Vec<String> = e.cwe_ids.iter().map(ToString::to_string).collect();
        let impact = e.base_impact_score.map_or("-".to_owned(), |s| format!("{s:.1}"));
        println!("{}  {}  {:8}  impact {impact:>4}  [{}]", e.id, e.publish_date.format("%Y-%m-%d"), e.severity, cwes.join(", "));
    }
    println!("{} items, {} parsed, {} skipped", report.items, report.parsed, report.skipped.len());
    for s in &report.skipped {
        println!("  item {}: {}", s.index, s.reason);
    }

    let mut cache = NvdCache::new();
    cache.ingest("example", entries);
    println!("cache holds {} CVEs", cache.len());
    Ok(())
}
