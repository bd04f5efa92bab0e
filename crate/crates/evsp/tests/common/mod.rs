#![allow(dead_code)]

use evsp::generate::{generate, Profile};
use evsp_core::instance::Instance;

/// The default bus fleet with half the battery: small instances then need
/// depot returns or mid-day charging, which exercises the charger rows.
pub fn short_range() -> Profile {
    let mut p = Profile::default();
    for b in &mut p.buses {
        b.battery_kwh *= 0.5;
    }
    p
}

pub struct Case {
    pub name: String,
    pub inst: Instance,
}

/// Seeds 1..=20 with `3 + seed % 6` trips under the given profile.
pub fn small_cases(profile_name: &str, profile: &Profile) -> Vec<Case> {
    (1..=20u64)
        .map(|seed| {
            let n = 3 + (seed % 6) as usize;
            Case {
                name: format!("{profile_name}/seed{seed}/n{n}"),
                inst: generate(seed, n, profile).expect("generate"),
            }
        })
        .collect()
}

/// Both profiles over seeds 1..=20.
pub fn small_suite() -> Vec<Case> {
    let mut cases = small_cases("default", &Profile::default());
    cases.extend(small_cases("short-range", &short_range()));
    cases
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
