//! Shared inputs for the criterion benches.

use hitchsim_core::presets::{self, Scenario};
use hitchsim_core::PreparedSeed;

/// The `fig1` scenario with its seed spectrum prepared.
pub fn fig1() -> (Scenario, PreparedSeed) {
    let s = presets::fig1();
    let prepared = PreparedSeed::from_spec(&s.seed, &s.grid, s.medium.k()).expect("valid preset");
    (s, prepared)
}
