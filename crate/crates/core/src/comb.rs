//! Comb parametrization and the closed-form echo-efficiency theory.
//!
//! A frequency comb of Gaussian absorption teeth rephases an absorbed input
//! pulse into a forward echo one inverse tooth spacing later. The echo
//! efficiency depends on the peak optical depth `d`, the comb finesse
//! `F = Δ/γ` and the absorbing background `d0`:
//!
//! ```text
//! eta = (d/F)^2 * exp(-7/F^2) * exp(-d/F) * exp(-d0)
//! ```

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a Gaussian full width at half maximum to the standard deviation.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (8.0 * LN_2).sqrt()
}

/// Inverse of [`fwhm_to_sigma`].
pub fn sigma_to_fwhm(sigma: f64) -> f64 {
    sigma * (8.0 * LN_2).sqrt()
}

/// Periodic comb of Gaussian absorption teeth.
///
/// The optical-depth profile is `d·Σ_j exp(-(ν-jΔ)²/2σ²) + d0` with
/// `σ = γ/√(8 ln 2)` and `j` running symmetrically over `n_teeth` teeth
/// around `center_freq`. All frequencies are detunings in Hz relative to
/// the comb center; the absolute optical carrier is metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCombSpec", into = "RawCombSpec")]
pub struct CombSpec {
    d: f64,
    d0: f64,
    delta: f64,
    gamma_fwhm: f64,
    n_teeth: u32,
    center_freq: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCombSpec {
    d: f64,
    d0: f64,
    delta: f64,
    gamma_fwhm: f64,
    n_teeth: u32,
    #[serde(default)]
    center_freq: f64,
}

impl TryFrom<RawCombSpec> for CombSpec {
    type Error = Error;

    fn try_from(raw: RawCombSpec) -> Result<Self> {
        CombSpec::new(raw.d, raw.d0, raw.delta, raw.gamma_fwhm, raw.n_teeth)
            .map(|comb| comb.with_center_freq(raw.center_freq))
    }
}

impl From<CombSpec> for RawCombSpec {
    fn from(comb: CombSpec) -> Self {
        RawCombSpec {
            d: comb.d,
            d0: comb.d0,
            delta: comb.delta,
            gamma_fwhm: comb.gamma_fwhm,
            n_teeth: comb.n_teeth,
            center_freq: comb.center_freq,
        }
    }
}

impl CombSpec {
    /// Builds a comb centered at zero detuning.
    ///
    /// Rejects non-finite or negative depths, non-positive spacings and
    /// widths, even or zero tooth counts, and combs whose finesse does not
    /// exceed 1 (teeth as wide as their spacing carry no grating).
    pub fn new(d: f64, d0: f64, delta: f64, gamma_fwhm: f64, n_teeth: u32) -> Result<Self> {
        check(d, "d", ">= 0", |v| v >= 0.0)?;
        check(d0, "d0", ">= 0", |v| v >= 0.0)?;
        check(delta, "delta", "> 0", |v| v > 0.0)?;
        check(gamma_fwhm, "gamma_fwhm", "> 0", |v| v > 0.0)?;
        if n_teeth == 0 || n_teeth.is_multiple_of(2) {
            return Err(Error::InvalidToothCount(n_teeth));
        }
        let finesse = delta / gamma_fwhm;
        if finesse <= 1.0 {
            return Err(Error::FinesseTooLow {
                finesse,
                delta,
                gamma: gamma_fwhm,
            });
        }
        Ok(CombSpec {
            d,
            d0,
            delta,
            gamma_fwhm,
            n_teeth,
            center_freq: 0.0,
        })
    }

    /// Moves the comb center to `center_freq` (Hz detuning).
    pub fn with_center_freq(mut self, center_freq: f64) -> Self {
        self.center_freq = center_freq;
        self
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma_fwhm(&self) -> f64 {
        self.gamma_fwhm
    }

    pub fn n_teeth(&self) -> u32 {
        self.n_teeth
    }

    pub fn center_freq(&self) -> f64 {
        self.center_freq
    }

    /// Tooth spacing over tooth width, `F = Δ/γ`.
    pub fn finesse(&self) -> f64 {
        self.delta / self.gamma_fwhm
    }

    /// Gaussian tooth standard deviation, `σ = γ/√(8 ln 2)`.
    pub fn sigma(&self) -> f64 {
        fwhm_to_sigma(self.gamma_fwhm)
    }

    /// Total comb width, `n_teeth × Δ`.
    pub fn bandwidth(&self) -> f64 {
        self.n_teeth as f64 * self.delta
    }

    /// Echo delay `1/Δ` of the bare two-level comb.
    pub fn echo_time(&self) -> f64 {
        1.0 / self.delta
    }

    /// Optical depth at detuning `nu` (Hz).
    ///
    /// Always at least `d0`; at a tooth center it reaches `d + d0` up to
    /// neighbor tails.
    pub fn profile(&self, nu: f64) -> f64 {
        let sigma = self.sigma();
        let rel = nu - self.center_freq;
        let half = (self.n_teeth / 2) as i64;
        let mut acc = 0.0;
        for j in -half..=half {
            let u = rel - j as f64 * self.delta;
            let arg = u * u / (2.0 * sigma * sigma);
            // exp underflows to zero well before 700; skip the call.
            if arg < 700.0 {
                acc += (-arg).exp();
            }
        }
        self.d * acc + self.d0
    }
}

/// Crystal absorption parameters behind a comb: `d = alpha × length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    /// Absorption coefficient in 1/cm.
    pub alpha: f64,
    /// Crystal length in cm.
    pub length: f64,
    /// Optical inhomogeneous width in Hz.
    pub inhom_broadening: f64,
    /// Free-form notes (doping, isotope, transition).
    #[serde(default)]
    pub metadata: String,
}

impl MediumSpec {
    pub fn new(alpha: f64, length: f64, inhom_broadening: f64) -> Result<Self> {
        check(alpha, "alpha", ">= 0", |v| v >= 0.0)?;
        check(length, "length", "> 0", |v| v > 0.0)?;
        check(inhom_broadening, "inhom_broadening", "finite", |_| true)?;
        Ok(MediumSpec {
            alpha,
            length,
            inhom_broadening,
            metadata: String::new(),
        })
    }

    /// Peak optical depth `alpha × length`.
    pub fn optical_depth(&self) -> f64 {
        self.alpha * self.length
    }
}

fn check(value: f64, name: &'static str, constraint: &'static str, ok: impl Fn(f64) -> bool) -> Result<f64> {
    if !value.is_finite() || !ok(value) {
        return Err(Error::InvalidParameter {
            name,
            constraint,
            value,
        });
    }
    Ok(value)
}

/// Forward-echo efficiency of a Gaussian comb.
///
/// `(d/F)² · exp(-7/F²) · exp(-d/F) · exp(-d0)`. The background factor
/// `exp(-d0)` accounts for residual absorption between the teeth.
pub fn afc_efficiency(d: f64, finesse: f64, d0: f64) -> Result<f64> {
    if !finesse.is_finite() || finesse <= 0.0 {
        return Err(Error::NonPositiveFinesse(finesse));
    }
    check(d, "d", ">= 0", |v| v >= 0.0)?;
    check(d0, "d0", ">= 0", |v| v >= 0.0)?;
    let deff = d / finesse;
    Ok(deff * deff * (-7.0 / (finesse * finesse)).exp() * (-deff).exp() * (-d0).exp())
}

/// Finesse maximizing [`afc_efficiency`] at fixed `d` (independent of `d0`).
///
/// Stationarity of the efficiency in `F` reduces to `2F² - dF - 14 = 0`,
/// whose positive root is returned. At `d = 0` this is `√7`.
pub fn optimal_finesse(d: f64) -> f64 {
    (d + (d * d + 112.0).sqrt()) / 4.0
}

/// Number of temporal modes the comb can hold: one per tooth.
pub fn multimode_capacity(comb: &CombSpec) -> u32 {
    comb.n_teeth
}

/// How many tooth spacings fit in a given bandwidth.
pub fn modes_in_bandwidth(bandwidth: f64, delta: f64) -> u32 {
    if bandwidth.is_nan() || delta.is_nan() || bandwidth <= 0.0 || delta <= 0.0 {
        return 0;
    }
    (bandwidth / delta).floor() as u32
}

/// Odd tooth count whose comb width `n×Δ` comes closest to `bandwidth`.
pub fn teeth_for_bandwidth(bandwidth: f64, delta: f64) -> u32 {
    let ratio = (bandwidth / delta).max(1.0);
    let lower = {
        let k = ratio.floor() as u32;
        if k % 2 == 1 {
            k
        } else {
            k.saturating_sub(1).max(1)
        }
    };
    let upper = lower + 2;
    if (upper as f64 - ratio).abs() <= (ratio - lower as f64).abs() {
        upper
    } else {
        lower
    }
}
