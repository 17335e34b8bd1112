//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (visible with `-- --nocapture`).
//!
//! Run with `cargo test -p afc-cli --test acceptance`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use afc_core::spinwave::{spin_decay_factor, SpinParams};
use afc_core::{
    afc_efficiency, echo_efficiency, extract_transfer_efficiency, fit_comb, fit_spin_linewidth,
    gaussian_pulse, pi_pulse_duration, propagate, CombSpec, DecaySeries, SimGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn c01_closed_form_efficiency_point_check() {
    let eta = afc_efficiency(0.54, 3.03, 0.04).unwrap();
    assert!(
        (eta - 0.0119).abs() <= 2e-4,
        "criterion 1 FAIL: eta = {eta}"
    );
    println!("criterion 1 PASS - afc_efficiency(0.54, 3.03, 0.04) = {eta:.5} (0.0119 +- 0.0002)");
}

#[test]
fn c02_numerical_propagation_matches_closed_form_grid() {
    let grid = SimGrid::new(1 << 16, 200e-6).unwrap();
    let delta = 0.5e6;
    let input_time = 8e-6;
    let input = gaussian_pulse(grid, input_time, 0.6e-6);
    let echo_time = input_time + 1.0 / delta;
    let window = 0.6 / delta;
    let mut worst_rel: f64 = 0.0;
    let mut worst_timing: f64 = 0.0;
    for &d in &[0.1, 0.3, 0.54, 0.8] {
        for &finesse in &[2.0, 3.0, 5.0, 10.0] {
            for &d0 in &[0.0, 0.04] {
                let comb = CombSpec::new(d, d0, delta, delta / finesse, 41).unwrap();
                let output = propagate(&input, &comb).unwrap();
                let numeric = echo_efficiency(&output, &input, echo_time, window).unwrap();
                let analytic = afc_efficiency(d, finesse, d0).unwrap();
                let relative = (numeric - analytic).abs() / analytic;
                assert!(
                    relative <= 0.15,
                    "criterion 2 FAIL at d={d} F={finesse} d0={d0}: \
                     numeric {numeric:.4e} vs analytic {analytic:.4e} ({relative:.3})"
                );
                worst_rel = worst_rel.max(relative);

                let intensity = output.intensity();
                let dt = grid.time_step();
                let lo = ((echo_time - window / 2.0) / dt).ceil() as usize;
                let hi = ((echo_time + window / 2.0) / dt).floor() as usize;
                let (idx, _) = intensity[lo..=hi]
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap();
                let peak_error = ((lo + idx) as f64 * dt - echo_time).abs();
                assert!(
                    peak_error <= dt,
                    "criterion 2 FAIL at d={d} F={finesse} d0={d0}: echo peak off by {peak_error}"
                );
                worst_timing = worst_timing.max(peak_error / dt);
            }
        }
    }
    println!(
        "criterion 2 PASS - 32-point grid within 15% of the closed form \
         (worst {worst_rel:.3}); echo peak within one time step (worst {worst_timing:.2})"
    );
}

#[test]
fn c03_transfer_efficiency_extraction() {
    let eta_t = extract_transfer_efficiency(0.0004, 0.0024).unwrap();
    assert!(
        (eta_t - 0.408).abs() <= 1e-3,
        "criterion 3 FAIL: eta_T = {eta_t}"
    );
    println!("criterion 3 PASS - extract_transfer_efficiency(0.04%, 0.24%) = {eta_t:.4} (0.408 +- 0.001)");
}

#[test]
fn c04_pi_pulse_duration() {
    let tau = pi_pulse_duration(300e3);
    assert!(
        (tau - 1.667e-6).abs() <= 1e-9,
        "criterion 4 FAIL: tau = {tau}"
    );
    println!("criterion 4 PASS - pi-pulse duration at 300 kHz = {:.4} us (1.667 +- 0.001)", tau * 1e6);
}

#[test]
fn c05_spin_linewidth_monte_carlo_recovery() {
    let spin = SpinParams::new(69e3, 15.5e-3).unwrap();
    let ts_points: Vec<f64> = (1..=8).map(|i| i as f64 * 1e-6).collect();
    let clean: Vec<f64> = ts_points
        .iter()
        .map(|&ts| spin_decay_factor(ts, &spin).unwrap())
        .collect();
    let trials = 200;
    let mut hits = 0;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let points: Vec<(f64, f64)> = ts_points
            .iter()
            .zip(&clean)
            .map(|(&ts, &h)| (ts, (h * (1.0 + noise.sample(&mut rng))).max(1e-12)))
            .collect();
        let fit = fit_spin_linewidth(&DecaySeries::new(points).unwrap()).unwrap();
        if (fit.param("gamma_is").unwrap() - 69e3).abs() <= 3e3 {
            hits += 1;
        }
    }
    assert!(
        hits * 100 >= trials * 90,
        "criterion 5 FAIL: {hits}/{trials} within +-3 kHz"
    );
    println!("criterion 5 PASS - {hits}/{trials} trials recover 69 kHz within +-3 kHz (>= 90% required)");
}

#[test]
fn c06_spin_decay_half_time() {
    // independent route: bisect the decay factor for its 0.5 crossing
    let spin = SpinParams::new(69e3, 15.5e-3).unwrap();
    let mut lo = 0.0_f64;
    let mut hi = 20e-6_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spin_decay_factor(mid, &spin).unwrap() > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let half_time = 0.5 * (lo + hi);
    assert!(
        (half_time - 4.52e-6).abs() <= 0.01e-6,
        "criterion 6 FAIL: half time {half_time}"
    );
    println!(
        "criterion 6 PASS - decay factor crosses 0.5 at ts = {:.4} us (4.52 +- 0.01)",
        half_time * 1e6
    );
}

#[test]
fn c07_efficiency_trend_against_storage_time() {
    let gamma = 165e3;
    let storage_times = [2e-6, 3e-6, 4e-6, 5e-6];
    let etas: Vec<f64> = storage_times
        .iter()
        .map(|&t| {
            let delta = 1.0 / t;
            afc_efficiency(0.54, delta / gamma, 0.04).unwrap()
        })
        .collect();
    for pair in etas.windows(2) {
        assert!(
            pair[1] < pair[0],
            "criterion 7 FAIL: not strictly decreasing: {etas:?}"
        );
    }
    let ratio = etas[0] / etas[3];
    assert!(ratio >= 3.0, "criterion 7 FAIL: ratio {ratio}");
    println!(
        "criterion 7 PASS - efficiency falls monotonically over 1/delta in {{2,3,4,5}} us; \
         eta(2us)/eta(5us) = {ratio:.1} (>= 3 required)"
    );
}

#[test]
fn c08_comb_fit_round_trip_and_instrument_kernel() {
    let comb = CombSpec::new(0.54, 0.04, 0.5e6, 165e3, 9).unwrap();
    let step = 20e3;
    let sample = |lo: f64, hi: f64| {
        let mut xs = Vec::new();
        let mut nu = lo;
        while nu <= hi {
            xs.push(nu);
            nu += step;
        }
        let ys: Vec<f64> = xs.iter().map(|&x| comb.profile(x)).collect();
        (xs, ys)
    };

    let (xs, ys) = sample(-1.75e6, 1.75e6);
    let fit = fit_comb(&xs, &ys, 0.55e6, None).unwrap();
    assert!(fit.converged, "criterion 8 FAIL: fit did not converge");
    for (name, truth) in [
        ("d", 0.54),
        ("d0", 0.04),
        ("gamma_fwhm", 165e3),
        ("delta", 0.5e6),
    ] {
        let got = fit.param(name).unwrap();
        assert!(
            ((got - truth) / truth).abs() <= 1e-3,
            "criterion 8 FAIL: {name} = {got} vs {truth}"
        );
    }

    // numerically convolve with a 100 kHz FWHM Gaussian kernel
    let (base_xs, base_ys) = sample(-2.25e6, 2.25e6);
    let kernel_sigma = 100e3 / (8.0_f64 * std::f64::consts::LN_2).sqrt();
    let half_width = (6.0 * kernel_sigma / step).ceil() as usize;
    let kernel: Vec<f64> = (0..=2 * half_width)
        .map(|k| {
            let u = (k as f64 - half_width as f64) * step / kernel_sigma;
            (-0.5 * u * u).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    let mut conv_xs = Vec::new();
    let mut conv_ys = Vec::new();
    for i in half_width..base_xs.len() - half_width {
        let acc: f64 = kernel
            .iter()
            .enumerate()
            .map(|(k, w)| w * base_ys[i + k - half_width])
            .sum();
        conv_xs.push(base_xs[i]);
        conv_ys.push(acc / norm);
    }
    let blurred = fit_comb(&conv_xs, &conv_ys, 0.5e6, None).unwrap();
    let gamma = blurred.param("gamma_fwhm").unwrap();
    assert!(
        (gamma - 193e3).abs() <= 5e3,
        "criterion 8 FAIL: blurred gamma = {gamma}"
    );
    println!(
        "criterion 8 PASS - noiseless comb recovered to 0.1%; 100 kHz kernel inflates gamma to \
         {:.1} kHz (193 +- 5)",
        gamma / 1e3
    );
}

#[test]
fn c09_passivity_and_causality() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_gain: f64 = 0.0;
    let mut worst_leak: f64 = 0.0;
    for _ in 0..20 {
        let d = rng.random_range(0.0..1.5);
        let d0 = rng.random_range(0.0..0.2);
        let finesse = rng.random_range(1.2..8.0);
        let delta = rng.random_range(0.2e6..1.0e6);
        let n_teeth = 2 * rng.random_range(4..16u32) + 1;
        let comb = CombSpec::new(d, d0, delta, delta / finesse, n_teeth).unwrap();

        let time_span = (4.0 / delta).max(50e-6);
        let mut n = 1usize;
        while (n as f64) < 4.2 * comb.bandwidth() * time_span {
            n *= 2;
        }
        let grid = SimGrid::new(n, time_span).unwrap();
        let fwhm = 4.0 / comb.bandwidth();
        let t0 = time_span / 4.0;
        let input = gaussian_pulse(grid, t0, fwhm);
        let output = propagate(&input, &comb).unwrap();

        let gain = output.energy() / input.energy();
        assert!(gain <= 1.0 + 1e-12, "criterion 9 FAIL: gain {gain}");
        worst_gain = worst_gain.max(gain);

        let dt = grid.time_step();
        let cutoff = ((t0 - 3.0 * fwhm) / dt) as usize;
        let early: f64 = output.samples[..cutoff]
            .iter()
            .map(|s| s.norm_sqr())
            .sum::<f64>()
            * dt;
        let leak = early / output.energy();
        assert!(leak < 1e-8, "criterion 9 FAIL: pre-pulse leakage {leak}");
        worst_leak = worst_leak.max(leak);
    }
    println!(
        "criterion 9 PASS - 20 randomized combs: max energy gain {worst_gain:.12} (<= 1), \
         max pre-pulse leakage {worst_leak:.2e} (< 1e-8)"
    );
}

#[test]
fn c10_simulate_is_byte_deterministic() {
    let exe = env!("CARGO_BIN_EXE_afc");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/spin_wave_storage.json");
    let base = std::env::temp_dir().join(format!("afc-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&base);
    let run = |dir: &PathBuf| {
        let status = Command::new(exe)
            .args(["simulate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success(), "criterion 10 FAIL: simulate exited {status}");
        fs::read(dir.join("report.json")).unwrap()
    };
    let first = run(&base.join("a"));
    let second = run(&base.join("b"));
    assert_eq!(first, second, "criterion 10 FAIL: reports differ");
    fs::remove_dir_all(&base).unwrap();
    println!(
        "criterion 10 PASS - repeated simulate runs produce byte-identical reports ({} bytes)",
        first.len()
    );
}
