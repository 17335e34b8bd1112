//! Linear frequency-domain propagation of weak pulses through a comb medium.
//!
//! The medium acts on the field as a causal filter `H(ν) = exp(-D(ν)/2 - iφ(ν))`
//! with `D` the sampled optical-depth profile and `φ` the dispersion phase
//! obtained from `D/2` by a discrete Hilbert transform on the periodic grid
//! (the minimum-phase construction). Propagating a short pulse through a
//! periodic comb produces the transmitted pulse plus echoes delayed by
//! integer multiples of `1/Δ`.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::comb::CombSpec;
use crate::error::{Error, Result};
use crate::grid::{fft_forward, fft_inverse, SimGrid, Spectrum, TimeTrace};

/// Transform-limited Gaussian pulse with intensity FWHM `fwhm` centered at
/// `center` seconds. Peak field amplitude is 1.
pub fn gaussian_pulse(grid: SimGrid, center: f64, fwhm: f64) -> TimeTrace {
    // |E|² has FWHM fwhm, so the field itself is exp(-2 ln2 (t-t0)²/fwhm²).
    let field_sigma = fwhm / (2.0 * LN_2.sqrt());
    let samples = grid
        .times()
        .map(|t| {
            let u = (t - center) / field_sigma;
            Complex64::new((-0.5 * u * u).exp(), 0.0)
        })
        .collect();
    TimeTrace { grid, samples }
}

/// Dispersion phase paired with half the sampled depth profile.
///
/// Folds the cepstrum of `half_depth` onto non-negative delays, which makes
/// `half_depth + i*phase` the boundary value of a causal response. The real
/// part of the reconstruction reproduces `half_depth` to rounding error.
fn kramers_kronig_phase(half_depth: &[f64]) -> Vec<f64> {
    let n = half_depth.len();
    let mut buf: Vec<Complex64> = half_depth
        .iter()
        .map(|&a| Complex64::new(a, 0.0))
        .collect();
    fft_inverse(&mut buf);
    for value in buf.iter_mut().take(n / 2).skip(1) {
        *value *= 2.0;
    }
    for value in buf.iter_mut().skip(n / 2 + 1) {
        *value = Complex64::new(0.0, 0.0);
    }
    fft_forward(&mut buf);
    buf.iter().map(|c| c.im).collect()
}

/// Complex medium response `H(ν)` of the comb on the given grid.
///
/// `|H| = exp(-D/2) <= 1` everywhere; the phase makes the impulse response
/// causal, so the echo train sits at positive delays.
pub fn transfer_function(comb: &CombSpec, grid: SimGrid) -> Result<Spectrum> {
    grid.validate_for_comb(comb)?;
    let n = grid.n_samples();
    let half_depth: Vec<f64> = (0..n).map(|k| 0.5 * comb.profile(grid.freq_at(k))).collect();
    let phase = kramers_kronig_phase(&half_depth);
    let samples = half_depth
        .iter()
        .zip(&phase)
        .map(|(&a, &phi)| Complex64::from_polar((-a).exp(), -phi))
        .collect();
    Spectrum::new(grid, samples)
}

/// Propagates `input` through the comb medium.
///
/// Linear weak-field model: output spectrum = input spectrum × `H(ν)`.
/// Output energy never exceeds input energy.
pub fn propagate(input: &TimeTrace, comb: &CombSpec) -> Result<TimeTrace> {
    let response = transfer_function(comb, input.grid)?;
    let mut spectrum = input.to_spectrum();
    for (s, h) in spectrum.samples.iter_mut().zip(&response.samples) {
        *s *= h;
    }
    Ok(spectrum.to_time_trace())
}

/// Fraction of the reference energy found in a window around `echo_time`.
///
/// `reference` is the same input propagated without a medium. The window
/// must not overlap the transmitted pulse, located from the reference peak.
pub fn echo_efficiency(
    output: &TimeTrace,
    reference: &TimeTrace,
    echo_time: f64,
    window: f64,
) -> Result<f64> {
    if window.is_nan() || window <= 0.0 {
        return Err(Error::EmptyWindow(window));
    }
    if output.grid != reference.grid {
        return Err(Error::GridMismatch);
    }
    let grid = output.grid;
    let reference_intensity = reference.intensity();
    let (peak_index, &peak) = reference_intensity
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid has at least two samples");
    if peak <= 0.0 {
        return Err(Error::FlatTrace);
    }
    let transmission_time = grid.time_at(peak_index);
    let transmission_width = half_max_width(&reference_intensity, peak_index, grid.time_step());

    let lo = echo_time - window / 2.0;
    let hi = echo_time + window / 2.0;
    if lo < transmission_time + transmission_width && hi > transmission_time - transmission_width {
        return Err(Error::WindowOverlapsTransmission {
            lo,
            hi,
            transmission: transmission_time,
        });
    }

    let dt = grid.time_step();
    let windowed: f64 = output
        .samples
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let t = grid.time_at(*i);
            t >= lo && t <= hi
        })
        .map(|(_, s)| s.norm_sqr())
        .sum::<f64>()
        * dt;
    Ok(windowed / reference.energy())
}

fn half_max_width(intensity: &[f64], peak_index: usize, dt: f64) -> f64 {
    let half = intensity[peak_index] / 2.0;
    let mut left = peak_index;
    while left > 0 && intensity[left] > half {
        left -= 1;
    }
    let mut right = peak_index;
    while right + 1 < intensity.len() && intensity[right] > half {
        right += 1;
    }
    (right - left) as f64 * dt
}

/// Power spectrum of a train of identical Gaussian pulses.
///
/// For two or more pulses the spectrum is a comb with maxima spaced by
/// `1/separation`; the comb-preparation pulse streams work exactly this way.
/// Returned samples carry `|amplitude|²` in the real part.
pub fn pulse_train_spectrum(
    n_pulses: usize,
    separation: f64,
    pulse_fwhm: f64,
    grid: SimGrid,
) -> Result<Spectrum> {
    if n_pulses < 1 {
        return Err(Error::InvalidParameter {
            name: "n_pulses",
            constraint: ">= 1",
            value: n_pulses as f64,
        });
    }
    if separation.is_nan() || pulse_fwhm.is_nan() || separation <= 0.0 || pulse_fwhm <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "separation/pulse_fwhm",
            constraint: "> 0",
            value: separation.min(pulse_fwhm),
        });
    }
    let margin = 4.0 * pulse_fwhm;
    let train_span = 2.0 * margin + (n_pulses - 1) as f64 * separation;
    if train_span > grid.time_span() {
        return Err(Error::TrainExceedsGrid {
            train_s: train_span,
            span_s: grid.time_span(),
        });
    }
    let mut trace = TimeTrace::zeros(grid);
    let field_sigma = pulse_fwhm / (2.0 * LN_2.sqrt());
    for (i, t) in grid.times().enumerate() {
        let mut acc = 0.0;
        for p in 0..n_pulses {
            let center = margin + p as f64 * separation;
            let u = (t - center) / field_sigma;
            let arg = 0.5 * u * u;
            if arg < 700.0 {
                acc += (-arg).exp();
            }
        }
        trace.samples[i] = Complex64::new(acc, 0.0);
    }
    let spectrum = trace.to_spectrum();
    let samples = spectrum
        .samples
        .iter()
        .map(|s| Complex64::new(s.norm_sqr(), 0.0))
        .collect();
    Spectrum::new(grid, samples)
}
