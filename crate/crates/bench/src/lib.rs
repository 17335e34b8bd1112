//! Shared fixtures for the benchmarks.

use afc_core::{CombSpec, SimGrid};

/// The measured sample comb: 165 kHz teeth every 0.5 MHz, d = 0.54 on a
/// 0.04 background.
pub fn sample_comb() -> CombSpec {
    CombSpec::new(0.54, 0.04, 0.5e6, 165e3, 21).unwrap()
}

/// Production-sized grid: 2^16 samples over 50 us.
pub fn scenario_grid() -> SimGrid {
    SimGrid::default_for_scenarios()
}

/// Sampled absorption scan of [`sample_comb`] at 20 kHz resolution.
pub fn comb_scan() -> (Vec<f64>, Vec<f64>) {
    let comb = sample_comb();
    let mut xs = Vec::new();
    let mut nu = -1.75e6;
    while nu <= 1.75e6 {
        xs.push(nu);
        nu += 20e3;
    }
    let ys = xs.iter().map(|&x| comb.profile(x)).collect();
    (xs, ys)
}
