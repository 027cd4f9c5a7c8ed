// SPDX-License-Identifier: Apache-2.0

//! Mitigation ratios per 100,000 commits from published yearly counts.

use vcm::analytics::{ratio_per_100k, YearCounts};
use vcm::report::output::fmt3;
use vcm::ProjectLanguage::{JavaScript, Python};

// year, mitigation commits JS / PY, all commits JS / PY
const COUNTS: [(i32, u64, u64, u64, u64); 9] = [
    (2010, 0, 225, 102_525, 1_597_160),
    (2011, 0, 67, 675_492, 2_068_155),
    (2012, 6, 343, 2_078_887, 2_663_836),
    (2013, 41, 209, 5_705_696, 3_436_804),
    (2014, 84, 291, 12_692_836, 4_440_660),
    (2015, 111, 328, 23_794_463, 5_537_294),
    (2016, 239, 453, 38_990_699, 6_527_350),
    (2017, 393, 329, 40_883_417, 6_835_803),
    (2018, 2584, 639, 37_729_971, 6_315_866),
];

fn main() {
    let mut counts = YearCounts::default();
    for (y, vj, vp, tj, tp) in COUNTS {
        counts.vuln.insert((y, JavaScript), vj);
        counts.vuln.insert((y, Python), vp);
        counts.total.insert((y, JavaScript), tj);
        counts.total.insert((y, Python), tp);
    }
    println!("year  lang  ratio_per_100k");
    for s in ratio_per_100k(&counts) {
        println!("{}  {:4}  {:>8}", s.year, s.language, s.ratio_per_100k.map(fmt3).unwrap_or_default());
    }
}
