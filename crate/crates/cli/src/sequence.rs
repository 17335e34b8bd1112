//! Pulse-sequence timing checks.
//!
//! The input pulse and the first control pulse must both fit inside the
//! rephasing window `1/Δ`, and the control bandwidth must cover the input
//! spectrum. Violations and warnings come back as diagnostics, never as
//! errors; the caller decides what is fatal.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use afc_core::ControlPulseSpec;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Violation,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn violation(field: &str, message: String) -> Self {
        Diagnostic {
            severity: Severity::Violation,
            field: field.into(),
            message,
        }
    }

    fn warning(field: &str, message: String) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            field: field.into(),
            message,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Violation => "violation",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}[{}]: {}", self.field, self.message)
    }
}

/// Timing of one storage shot: input pulse, two control pulses, and the
/// comb spacing that fixes the rephasing delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequencePlan {
    /// Intensity FWHM of the input pulse, seconds.
    pub input_fwhm: f64,
    pub input_time: f64,
    pub control1_time: f64,
    pub control2_time: f64,
    pub control: ControlPulseSpec,
    pub delta: f64,
}

impl SequencePlan {
    /// Spin storage time between the control pulses.
    pub fn ts(&self) -> f64 {
        self.control2_time - self.control1_time
    }

    /// When the bare comb would emit without control pulses.
    pub fn two_level_echo_time(&self) -> f64 {
        self.input_time + 1.0 / self.delta
    }

    /// When the recalled echo appears: `input_time + 1/Δ + ts`.
    pub fn echo_time(&self) -> f64 {
        self.input_time + 1.0 / self.delta + self.ts()
    }

    /// Spectral intensity FWHM of the transform-limited Gaussian input.
    pub fn input_spectral_fwhm(&self) -> f64 {
        2.0 * LN_2 / (PI * self.input_fwhm)
    }
}

/// Checks a plan and returns diagnostics ordered by severity, then field.
///
/// The timing budget treats the input pulse as occupying `2×FWHM`; plans
/// that only fit with the `1×FWHM` reading get a warning instead of a
/// violation. A bandwidth warning fires when the input spectrum is wider
/// than twice the control Rabi frequency.
pub fn validate_sequence(plan: &SequencePlan) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for (field, value) in [
        ("input_fwhm", plan.input_fwhm),
        ("input_time", plan.input_time),
        ("control1_time", plan.control1_time),
        ("control2_time", plan.control2_time),
        ("delta", plan.delta),
    ] {
        if !value.is_finite() {
            out.push(Diagnostic::violation(field, format!("{field} is not finite")));
        }
    }
    if !out.is_empty() {
        out.sort_by(|a, b| (a.severity, &a.field).cmp(&(b.severity, &b.field)));
        return out;
    }

    if plan.delta <= 0.0 {
        out.push(Diagnostic::violation(
            "delta",
            format!("tooth spacing must be positive (got {} Hz)", plan.delta),
        ));
    }
    if plan.input_fwhm <= 0.0 {
        out.push(Diagnostic::violation(
            "input_fwhm",
            format!("input duration must be positive (got {} s)", plan.input_fwhm),
        ));
    }
    if plan.control.duration <= 0.0 {
        out.push(Diagnostic::violation(
            "control.duration",
            "zero-area control pulse transfers nothing".into(),
        ));
    }
    if plan.control1_time <= plan.input_time {
        out.push(Diagnostic::violation(
            "control1_time",
            "first control pulse must come after the input".into(),
        ));
    }
    if plan.control2_time < plan.control1_time {
        out.push(Diagnostic::violation(
            "control2_time",
            "second control pulse cannot precede the first".into(),
        ));
    }

    if plan.delta > 0.0 && plan.input_fwhm > 0.0 && plan.control.duration > 0.0 {
        let rephasing_window = 1.0 / plan.delta;
        if plan.control1_time >= plan.input_time + rephasing_window {
            out.push(Diagnostic::violation(
                "control1_time",
                format!(
                    "first control pulse at {} s misses the rephasing window ending at {} s",
                    plan.control1_time,
                    plan.input_time + rephasing_window
                ),
            ));
        }
        let strict = 2.0 * plan.input_fwhm + plan.control.duration;
        let marginal = plan.input_fwhm + plan.control.duration;
        if strict > rephasing_window {
            if marginal <= rephasing_window {
                out.push(Diagnostic::warning(
                    "input_fwhm",
                    format!(
                        "input window (2x{} s) plus control ({} s) exceeds 1/delta = {} s; \
                         fits only with the 1xFWHM reading",
                        plan.input_fwhm, plan.control.duration, rephasing_window
                    ),
                ));
            } else {
                out.push(Diagnostic::violation(
                    "input_fwhm",
                    format!(
                        "input ({} s FWHM) and control ({} s) cannot both fit in 1/delta = {} s",
                        plan.input_fwhm, plan.control.duration, rephasing_window
                    ),
                ));
            }
        }

        let spectral = plan.input_spectral_fwhm();
        if spectral > 2.0 * plan.control.rabi_freq {
            out.push(Diagnostic::warning(
                "control.rabi_freq",
                format!(
                    "input spectral FWHM {:.3} MHz exceeds twice the control Rabi frequency \
                     ({:.3} MHz); most of the bandwidth will not be transferred",
                    spectral / 1e6,
                    2.0 * plan.control.rabi_freq / 1e6
                ),
            ));
        }
    }

    out.sort_by(|a, b| (a.severity, &a.field).cmp(&(b.severity, &b.field)));
    out
}
