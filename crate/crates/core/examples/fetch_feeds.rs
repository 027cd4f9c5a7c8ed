// SPDX-License-Identifier: Apache-2.0

//! Report which yearly NVD feeds are on disk, or download them with
//! `--online` (checksums are verified against the published `.meta` files).
//!
//! ```text
//! cargo run --example fetch_feeds -- nvd 2018-2020
//! cargo run --example fetch_feeds -- nvd 2018-2020 --online
//! ```

use vcm::nvd::fetch::{fetch_feeds, FetchConfig, DEFAULT_BASE_URL};
use vcm::report::config::parse_years;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = args.first().map_or("nvd", String::as_str);
    let years = parse_years(args.get(1).map_or("2018-2020", String::as_str))?;
    let online = args.iter().any(|a| a == "--online");

    let summary = fetch_feeds(&FetchConfig {
        base_url: DEFAULT_BASE_URL.into(),
        dir: dir.into(),
        years,
        offline: !online,
    })?;
    for (year, status) in &summary.feeds {
        println!("{year}: {status:?}");
    }
    Ok(())
}
