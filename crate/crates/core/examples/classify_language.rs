// SPDX-License-Identifier: Apache-2.0

//! Classify a root directory listing, either the names given on the command
//! line or the entries of the current directory.
//!
//! ```text
//! cargo run --example classify_language -- setup.py index.js README.md
//! ```

use vcm::lang::{JAVASCRIPT_MARKERS, PYTHON_MARKERS};
use vcm::{classify, RootListing};

fn main() -> std::io::Result<()> {
    let mut names: Vec<String> = std::env::args().skip(1).collect();
    if names.is_empty() {
        for entry in std::fs::read_dir(".")? {
            names.push(entry?.file_name().to_string_lossy().into_owned());
        }
    }
    let listing: RootListing = names.into_iter().collect();
    let markers: Vec<&str> = listing
        .iter()
        .filter(|n| PYTHON_MARKERS.contains(n) || JAVASCRIPT_MARKERS.contains(n))
        .collect();
    println!("{} (markers: {markers:?})", classify(&listing));
    Ok(())
}
