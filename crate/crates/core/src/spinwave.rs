//! Three-level storage: control-pulse transfer and spin-wave dephasing.
//!
//! A control pulse on the excited-to-spin transition converts the optical
//! coherence into a spin coherence, pausing the comb clock; a second pulse
//! resumes it. During the pause the inhomogeneous spin linewidth dephases
//! the stored excitation, multiplying the recalled efficiency by a Gaussian
//! decay in the storage time.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::comb::{fwhm_to_sigma, CombSpec};
use crate::error::{Error, Result};

/// Envelope of the transfer pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Square,
    Gaussian,
}

/// Strong pulse driving the excited-to-spin transition.
///
/// `rabi_freq` is an ordinary frequency in Hz; the angular Rabi frequency
/// is `Ω = 2π·rabi_freq`. A resonant square pulse of duration
/// `1/(2·rabi_freq)` is a π-pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlPulseSpec {
    pub rabi_freq: f64,
    pub duration: f64,
    pub shape: PulseShape,
}

impl ControlPulseSpec {
    pub fn new(rabi_freq: f64, duration: f64, shape: PulseShape) -> Result<Self> {
        if !rabi_freq.is_finite() || rabi_freq < 0.0 {
            return Err(Error::InvalidParameter {
                name: "rabi_freq",
                constraint: ">= 0",
                value: rabi_freq,
            });
        }
        if !duration.is_finite() || duration <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "duration",
                constraint: "> 0",
                value: duration,
            });
        }
        Ok(ControlPulseSpec {
            rabi_freq,
            duration,
            shape,
        })
    }

    /// Pulse area in radians: `2π·rabi_freq × duration` for a square pulse.
    /// A Gaussian envelope of FWHM `duration` carries `√(π/(4 ln 2))` times
    /// the area of the square pulse with the same peak.
    pub fn area(&self) -> f64 {
        let square_area = 2.0 * PI * self.rabi_freq * self.duration;
        match self.shape {
            PulseShape::Square => square_area,
            PulseShape::Gaussian => square_area * (PI / (4.0 * LN_2)).sqrt(),
        }
    }

    /// Duration of the equivalent square pulse with the same peak Rabi
    /// frequency and the same area.
    fn effective_duration(&self) -> f64 {
        match self.shape {
            PulseShape::Square => self.duration,
            PulseShape::Gaussian => self.duration * (PI / (4.0 * LN_2)).sqrt(),
        }
    }
}

/// Duration of a resonant π-pulse at ordinary Rabi frequency `rabi_freq`.
pub fn pi_pulse_duration(rabi_freq: f64) -> f64 {
    1.0 / (2.0 * rabi_freq)
}

/// Spin-transition broadening parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinParams {
    /// Inhomogeneous spin linewidth FWHM in Hz.
    pub gamma_is: f64,
    /// Spin coherence time in seconds (informational; refocusing would be
    /// needed to reach it).
    pub t2_spin: f64,
}

impl SpinParams {
    pub fn new(gamma_is: f64, t2_spin: f64) -> Result<Self> {
        if !gamma_is.is_finite() || gamma_is <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma_is",
                constraint: "> 0",
                value: gamma_is,
            });
        }
        Ok(SpinParams { gamma_is, t2_spin })
    }
}

/// Full storage protocol description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageScenario {
    pub comb: CombSpec,
    /// Intensity FWHM of the Gaussian input pulse, seconds.
    pub input_fwhm: f64,
    pub control: ControlPulseSpec,
    /// Spin storage time between the two control pulses, seconds.
    pub ts: f64,
    pub spin: SpinParams,
    /// Crossed-beam overlap loss on the recalled efficiency, in (0, 1].
    #[serde(default = "default_overlap")]
    pub mode_overlap: f64,
    /// Measured per-pulse transfer efficiency, overriding the modeled one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_transfer: Option<f64>,
}

fn default_overlap() -> f64 {
    1.0
}

impl StorageScenario {
    pub fn validate(&self) -> Result<()> {
        if !self.input_fwhm.is_finite() || self.input_fwhm <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "input_fwhm",
                constraint: "> 0",
                value: self.input_fwhm,
            });
        }
        if !self.ts.is_finite() || self.ts < 0.0 {
            return Err(Error::InvalidParameter {
                name: "ts",
                constraint: ">= 0",
                value: self.ts,
            });
        }
        if !self.mode_overlap.is_finite() || self.mode_overlap <= 0.0 || self.mode_overlap > 1.0 {
            return Err(Error::InvalidParameter {
                name: "mode_overlap",
                constraint: "in (0, 1]",
                value: self.mode_overlap,
            });
        }
        if let Some(eta) = self.measured_transfer {
            if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidParameter {
                    name: "measured_transfer",
                    constraint: "in [0, 1]",
                    value: eta,
                });
            }
        }
        Ok(())
    }

    /// On-demand readout happens `ts + 1/Δ` after the input.
    pub fn total_memory_time(&self) -> f64 {
        self.ts + self.comb.echo_time()
    }
}

/// Population transfer probability of a square pulse at a given detuning.
///
/// With `Ω = 2π·rabi_freq` and `δ = 2π·detuning`:
/// `P = Ω²/(Ω²+δ²) · sin²(√(Ω²+δ²)·duration/2)`.
///
/// Gaussian envelopes are approximated by the area-equivalent square pulse.
pub fn rabi_transfer_probability(control: &ControlPulseSpec, detuning: f64) -> f64 {
    let omega = 2.0 * PI * control.rabi_freq;
    let delta = 2.0 * PI * detuning;
    let general = (omega * omega + delta * delta).sqrt();
    if general == 0.0 {
        return 0.0;
    }
    let envelope = omega * omega / (general * general);
    let angle = general * control.effective_duration() / 2.0;
    envelope * angle.sin().powi(2)
}

/// Transfer efficiency averaged over the spectrum of the input pulse.
///
/// The input is a transform-limited Gaussian of intensity FWHM
/// `input_fwhm`, so its power spectrum is a Gaussian of FWHM
/// `2 ln2/(π·input_fwhm)`. Returns `∫S(δ)P(δ)dδ / ∫S(δ)dδ` by Simpson
/// quadrature over ±5 spectral FWHM.
pub fn effective_transfer_efficiency(input_fwhm: f64, control: &ControlPulseSpec) -> Result<f64> {
    if !input_fwhm.is_finite() || input_fwhm <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "input_fwhm",
            constraint: "> 0",
            value: input_fwhm,
        });
    }
    let spectral_fwhm = 2.0 * LN_2 / (PI * input_fwhm);
    let sigma = fwhm_to_sigma(spectral_fwhm);
    let weight = |delta: f64| (-delta * delta / (2.0 * sigma * sigma)).exp();
    let half_range = 5.0 * spectral_fwhm;
    let numerator = simpson(
        |delta| weight(delta) * rabi_transfer_probability(control, delta),
        -half_range,
        half_range,
        4096,
    );
    let denominator = simpson(weight, -half_range, half_range, 4096);
    Ok(numerator / denominator)
}

/// Gaussian dephasing of the stored spin wave after `ts` seconds:
/// `exp(-ts²·γ_IS²·π²/(2 ln 2))`.
pub fn spin_decay_factor(ts: f64, spin: &SpinParams) -> Result<f64> {
    if !ts.is_finite() || ts < 0.0 {
        return Err(Error::InvalidParameter {
            name: "ts",
            constraint: ">= 0",
            value: ts,
        });
    }
    let phase = ts * spin.gamma_is * PI;
    Ok((-phase * phase / (2.0 * LN_2)).exp())
}

/// Storage time at which the spin decay reaches one half.
pub fn spin_half_time(spin: &SpinParams) -> f64 {
    2.0_f64.sqrt() * LN_2 / (PI * spin.gamma_is)
}

/// Recalled efficiency of the full scheme.
///
/// Multiplies the two-level echo efficiency by the squared per-pulse
/// transfer efficiency (two identical control pulses), the spin decay over
/// `ts`, and the beam-overlap factor. Uses `measured_transfer` when the
/// scenario provides one, otherwise the modeled
/// [`effective_transfer_efficiency`].
pub fn three_level_efficiency(scenario: &StorageScenario, eta_two_level: f64) -> Result<f64> {
    scenario.validate()?;
    let transfer = match scenario.measured_transfer {
        Some(eta) => eta,
        None => effective_transfer_efficiency(scenario.input_fwhm, &scenario.control)?,
    };
    let decay = spin_decay_factor(scenario.ts, &scenario.spin)?;
    Ok(eta_two_level * transfer * transfer * decay * scenario.mode_overlap)
}

/// Per-pulse transfer efficiency from a recalled efficiency extrapolated to
/// zero storage time and its two-level reference: `√(η₃/η₂)`.
pub fn extract_transfer_efficiency(eta3_at_ts0: f64, eta2: f64) -> Result<f64> {
    if !eta3_at_ts0.is_finite() || eta3_at_ts0 <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eta3_at_ts0",
            constraint: "> 0",
            value: eta3_at_ts0,
        });
    }
    if !eta2.is_finite() || eta2 <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eta2",
            constraint: "> 0",
            value: eta2,
        });
    }
    if eta3_at_ts0 > eta2 {
        return Err(Error::UnphysicalTransfer {
            eta3: eta3_at_ts0,
            eta2,
        });
    }
    Ok((eta3_at_ts0 / eta2).sqrt())
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals + 1
    };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn control_300khz(duration: f64) -> ControlPulseSpec {
        ControlPulseSpec::new(300e3, duration, PulseShape::Square).unwrap()
    }

    #[test]
    fn resonant_pi_pulse_transfers_fully() {
        let control = control_300khz(pi_pulse_duration(300e3));
        assert_relative_eq!(
            rabi_transfer_probability(&control, 0.0),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn resonant_two_pi_pulse_returns_population() {
        let control = control_300khz(1.0 / 300e3);
        assert!(rabi_transfer_probability(&control, 0.0) < 1e-12);
    }

    #[test]
    fn pi_pulse_duration_at_operating_rabi_freq() {
        let tau = pi_pulse_duration(300e3);
        assert!((tau - 1.667e-6).abs() < 1e-9, "got {tau}");
    }

    #[test]
    fn transfer_probability_bounded_and_even() {
        let control = control_300khz(1.55e-6);
        for detuning in [0.0, 11e3, 145e3, 600e3, 2e6, 45e6] {
            let p = rabi_transfer_probability(&control, detuning);
            assert!((0.0..=1.0).contains(&p));
            assert_eq!(p, rabi_transfer_probability(&control, -detuning));
        }
    }

    #[test]
    fn gaussian_shape_uses_area_equivalent_square() {
        let square = control_300khz(1.0e-6);
        let gaussian = ControlPulseSpec::new(300e3, 1.0e-6, PulseShape::Gaussian).unwrap();
        assert_relative_eq!(
            gaussian.area(),
            square.area() * (PI / (4.0 * LN_2)).sqrt(),
            max_relative = 1e-15
        );
        // same area => same resonant transfer
        let equivalent = control_300khz(gaussian.effective_duration());
        assert_eq!(
            rabi_transfer_probability(&gaussian, 37e3),
            rabi_transfer_probability(&equivalent, 37e3)
        );
    }

    #[test]
    fn broadband_control_transfers_everything() {
        // control bandwidth 100x the input spectral width
        let input_fwhm = 1.3e-6;
        let spectral_width = 2.0 * LN_2 / (PI * input_fwhm);
        let rabi = 100.0 * spectral_width;
        let control =
            ControlPulseSpec::new(rabi, pi_pulse_duration(rabi), PulseShape::Square).unwrap();
        let eta = effective_transfer_efficiency(input_fwhm, &control).unwrap();
        assert!(eta >= 0.999, "got {eta}");
    }

    #[test]
    fn operating_point_transfer_is_partial() {
        let control = control_300khz(1.55e-6);
        let eta = effective_transfer_efficiency(1.3e-6, &control).unwrap();
        assert!((0.3..0.9).contains(&eta), "got {eta}");
    }

    #[test]
    fn short_input_is_mostly_not_transferred() {
        let control = control_300khz(1.55e-6);
        let eta = effective_transfer_efficiency(0.3e-6, &control).unwrap();
        assert!(eta < 0.35, "got {eta}");
    }

    #[test]
    fn transfer_efficiency_monotone_in_input_duration() {
        let control = control_300khz(1.55e-6);
        let fwhms = [2.0e-6, 1.3e-6, 0.8e-6, 0.5e-6, 0.3e-6];
        let etas: Vec<f64> = fwhms
            .iter()
            .map(|&f| effective_transfer_efficiency(f, &control).unwrap())
            .collect();
        for pair in etas.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "etas {etas:?}");
        }
        // never exceeds the best single-detuning transfer
        let p_max = (0..2000)
            .map(|i| rabi_transfer_probability(&control, i as f64 * 2e3))
            .fold(0.0_f64, f64::max);
        for eta in etas {
            assert!(eta <= p_max + 1e-12);
        }
    }

    #[test]
    fn effective_transfer_rejects_bad_input() {
        let control = control_300khz(1.55e-6);
        assert!(effective_transfer_efficiency(0.0, &control).is_err());
        assert!(effective_transfer_efficiency(-1e-6, &control).is_err());
    }

    fn spin_69khz() -> SpinParams {
        SpinParams::new(69e3, 15.5e-3).unwrap()
    }

    #[test]
    fn decay_starts_at_unity() {
        assert_eq!(spin_decay_factor(0.0, &spin_69khz()).unwrap(), 1.0);
    }

    #[test]
    fn decay_half_time() {
        let spin = spin_69khz();
        let half = spin_half_time(&spin);
        assert!((half - 4.52e-6).abs() < 0.01e-6, "got {half}");
        assert_relative_eq!(
            spin_decay_factor(half, &spin).unwrap(),
            0.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn decay_is_strictly_decreasing() {
        let spin = spin_69khz();
        let mut previous = 1.0;
        for i in 1..=40 {
            let decay = spin_decay_factor(i as f64 * 0.5e-6, &spin).unwrap();
            assert!(decay < previous, "ts = {} us", i as f64 * 0.5);
            previous = decay;
        }
    }

    #[test]
    fn decay_at_five_microseconds() {
        let d = spin_decay_factor(5e-6, &spin_69khz()).unwrap();
        assert!((d - 0.4285).abs() < 1e-3, "got {d}");
    }

    #[test]
    fn log_decay_is_quadratic() {
        let spin = spin_69khz();
        let h = 1.3e-6;
        let second_difference = |ts: f64| {
            let f = |t: f64| spin_decay_factor(t, &spin).unwrap().ln();
            f(ts + h) - 2.0 * f(ts) + f(ts - h)
        };
        let reference = second_difference(2e-6);
        for ts in [3e-6, 5e-6, 8e-6] {
            assert_relative_eq!(second_difference(ts), reference, max_relative = 1e-9);
        }
        assert!(reference < 0.0);
    }

    #[test]
    fn decay_rejects_negative_time() {
        assert!(spin_decay_factor(-1e-9, &spin_69khz()).is_err());
    }

    fn scenario(ts: f64, measured: Option<f64>, overlap: f64) -> StorageScenario {
        StorageScenario {
            comb: CombSpec::new(0.54, 0.04, 0.25e6, 165e3, 41).unwrap(),
            input_fwhm: 1.3e-6,
            control: control_300khz(1.55e-6),
            ts,
            spin: spin_69khz(),
            mode_overlap: overlap,
            measured_transfer: measured,
        }
    }

    #[test]
    fn composition_reproduces_measured_budget() {
        // eta2 0.24%, transfer 40%, no dephasing, unit overlap -> 0.0384%
        let eta3 = three_level_efficiency(&scenario(0.0, Some(0.40), 1.0), 0.0024).unwrap();
        assert_relative_eq!(eta3, 3.84e-4, max_relative = 1e-12);
    }

    #[test]
    fn unit_transfer_reduces_to_two_level() {
        let eta3 = three_level_efficiency(&scenario(0.0, Some(1.0), 1.0), 0.0024).unwrap();
        assert_eq!(eta3, 0.0024);
    }

    #[test]
    fn composition_with_spin_decay() {
        let eta3 = three_level_efficiency(&scenario(5e-6, Some(0.40), 1.0), 0.0024).unwrap();
        assert!((eta3 - 1.65e-4).abs() < 5e-6, "got {eta3}");
    }

    #[test]
    fn three_level_never_exceeds_two_level() {
        for ts in [0.0, 2e-6, 5e-6] {
            for overlap in [0.4, 1.0] {
                for measured in [None, Some(0.40)] {
                    let eta3 =
                        three_level_efficiency(&scenario(ts, measured, overlap), 0.0024).unwrap();
                    assert!(eta3 <= 0.0024);
                }
            }
        }
    }

    #[test]
    fn total_memory_time_is_plain_sum() {
        let s = scenario(5e-6, None, 1.0);
        assert_eq!(s.total_memory_time(), 5e-6 + 1.0 / 0.25e6);
    }

    #[test]
    fn transfer_extraction() {
        let eta_t = extract_transfer_efficiency(0.0004, 0.0024).unwrap();
        assert!((eta_t - 0.408).abs() < 1e-3, "got {eta_t}");
        assert_eq!(extract_transfer_efficiency(0.0024, 0.0024).unwrap(), 1.0);
        let low = extract_transfer_efficiency(0.0001, 0.0024).unwrap();
        assert!((low - 0.204).abs() < 1e-3, "got {low}");
    }

    #[test]
    fn transfer_extraction_rejects_unphysical_ratio() {
        assert!(matches!(
            extract_transfer_efficiency(0.003, 0.0024).unwrap_err(),
            Error::UnphysicalTransfer { .. }
        ));
        assert!(extract_transfer_efficiency(0.0, 0.0024).is_err());
    }

    #[test]
    fn extraction_round_trips_composition() {
        for transfer in [0.05, 0.40, 0.73, 1.0] {
            let eta2 = 0.0024;
            let eta3 = three_level_efficiency(&scenario(0.0, Some(transfer), 1.0), eta2).unwrap();
            let back = extract_transfer_efficiency(eta3, eta2).unwrap();
            assert_relative_eq!(back, transfer, max_relative = 1e-12);
        }
    }

    #[test]
    fn scenario_json_uses_exact_field_names() {
        let s = scenario(5e-6, None, 0.4);
        let json = serde_json::to_value(&s).unwrap();
        let object = json.as_object().unwrap();
        let mut keys: Vec<&str> = object.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec!["comb", "control", "input_fwhm", "mode_overlap", "spin", "ts"]
        );
        assert_eq!(
            json["control"],
            serde_json::json!({"rabi_freq": 300e3, "duration": 1.55e-6, "shape": "square"})
        );
        assert_eq!(
            json["spin"],
            serde_json::json!({"gamma_is": 69e3, "t2_spin": 15.5e-3})
        );
        let back: StorageScenario = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
    }
}
