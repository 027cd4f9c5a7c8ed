// SPDX-License-Identifier: Apache-2.0

//! Walk a git repository and list the commits that reference CVE or CWE
//! identifiers, with the language of the revision.
//!
//! ```text
//! cargo run --example scan_repository -- /path/to/repo
//! ```

use vcm::ingest::scan_repository;
use vcm::{classify, classify_message, ScanConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| ".".into());
    let scan = scan_repository(path.as_ref(), &ScanConfig::default())?;
    println!("{}: {} commits reachable", scan.repo_id(), scan.remaining());

    let (mut total, mut candidates, mut hits) = (0, 0, 0);
    for rec in scan {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                eprintln!("skipped: {e}");
                continue;
            }
        };
        total += 1;
        let r = classify_message(&rec.message);
        candidates += usize::from(r.matched_filter);
        if !r.refs.is_empty() {
            hits += 1;
            let subject = rec.message.lines().next().unwrap_or("");
            println!(
                "{} {} {:7} {}  {subject}",
                &rec.commit_id[..10],
                rec.committer_date.format("%Y-%m-%d"),
                classify(&rec.root_entries),
                r.refs.render()
            );
        }
    }
    println!("{total} commits, {candidates} pass the filter, {hits} carry identifiers");
    Ok(())
}
