// SPDX-License-Identifier: Apache-2.0

//! Check persisted tables against their schema.
//!
//! ```text
//! cargo run --example validate_store -- vcm-out/records.ndjson vcm-out/nvd-cache.ndjson
//! ```
//!
//! The expected schema is picked from the header line of each file.

use std::io::BufRead;

use vcm::store::{validate_file, SchemaVersion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let paths: Vec<String> = std::env::args().skip(1).collect();
    if paths.is_empty() {
        eprintln!("usage: validate_store FILE...");
        std::process::exit(2);
    }
    let mut dirty = false;
    for path in &paths {
        let mut header = String::new();
        std::io::BufReader::new(std::fs::File::open(path)?).read_line(&mut header)?;
        let expected = match SchemaVersion::parse_header(header.trim()) {
            Some(s) if s.name == "records" => SchemaVersion::records(),
            Some(s) if s.name == "nvd-cache" => SchemaVersion::nvd_cache(),
            Some(s) if s.name == "commits" => SchemaVersion::commits(),
            _ => {
                println!("{path}: no recognized schema header");
                dirty = true;
                continue;
            }
        };
        match validate_file(path.as_ref(), &expected) {
            Ok(report) => {
                println!("{path}: {} rows, {} violations", report.rows, report.violations.len());
                for v in &report.violations {
                    println!("  line {}: {}", v.line, v.message);
                }
                dirty |= !report.is_clean();
            }
            Err(e) => {
                println!("{path}: {e}");
                dirty = true;
            }
        }
    }
    std::process::exit(i32::from(dirty));
}
