// SPDX-License-Identifier: Apache-2.0

//! Build two small repositories and a feed in a temporary directory, run
//! `report` on them and print the report files.

use vcm::report::output::REPORT_FILES;
use vcm::testkit::{feed_json, Cvss, FeedItem, RepoBuilder};

const DAY: i64 = 86_400;
const T0: i64 = 1_527_811_200; // 2018-06-01T00:00:00Z

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let root = tmp.path();

    RepoBuilder::init(&root.join("webapp"))?.linear(
        &["index.js", "package.json"],
        &[
            ("initial", T0),
            ("Sanitize output (CVE-2018-3728)", T0 + 12 * DAY),
            ("Bump deps", T0 + 20 * DAY),
        ],
    )?;
    RepoBuilder::init(&root.join("service"))?.linear(
        &["setup.py", "service"],
        &[
            ("initial", T0),
            ("Limit request size, CVE-2018-3721 and CWE-770", T0 + 3 * DAY),
        ],
    )?;

    let feeds = root.join("feeds");
    std::fs::create_dir_all(&feeds)?;
    std::fs::write(
        feeds.join("nvdcve-1.1-2018.json"),
        feed_json(&[
            FeedItem::new("CVE-2018-3728", "2018-06-07T02:29Z", &["CWE-79", "CWE-200"]).v3(Cvss::new("HIGH", 5.9)),
            FeedItem::new("CVE-2018-3721", "2018-06-07T02:29Z", &["CWE-400"]).v3(Cvss::new("MEDIUM", 3.6)),
        ]),
    )?;

    let out = root.join("out");
    let p = |p: &std::path::Path| p.to_string_lossy().into_owned();
    let args = [
        "vcm".to_owned(),
        "report".into(),
        p(&root.join("webapp")),
        p(&root.join("service")),
        "--nvd-dir".into(),
        p(&feeds),
        "--out".into(),
        p(&out),
        "--threshold".into(),
        "1".into(),
    ];
    let code = vcm::report::cli::run(args, &[]);
    if code != 0 {
        return Err(format!("report exited with {code}").into());
    }
    for f in REPORT_FILES {
        println!("== {f}\n{}", std::fs::read_to_string(out.join(f))?);
    }
    Ok(())
}
