// SPDX-License-Identifier: Apache-2.0

//! Classify commit messages and print the identifiers found in each.
//!
//! ```text
//! cargo run --example extract_refs
//! cargo run --example extract_refs -- "Fix cve-2014-0160 in TLS layer"
//! ```

use vcm::classify_message;

const SAMPLES: &[&str] = &[
    "Fix CVE-2014-0160; also CVE-2014-0160 in tests",
    "Harden against CWE-79 and CWE-0079",
    "CVE-2020-20500/330/34/345",
    "Fixed XSS (with CVE number 2020-100)",
    "execve-safe wrapper added",
    "nvd-downloader rewrite",
    "Refactor parser internals",
];

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let messages: Vec<&str> = if args.is_empty() {
        SAMPLES.to_vec()
    } else {
        args.iter().map(String::as_str).collect()
    };
    for m in messages {
        let r = classify_message(m);
        let verdict = match (r.matched_filter, r.false_positive) {
            (false, _) => "not a candidate",
            (true, true) => "false positive",
            (true, false) => "mitigation",
        };
        println!("{m:?}\n    {verdict}: {}", r.refs.render());
    }
}
