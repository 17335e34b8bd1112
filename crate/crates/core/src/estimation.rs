//! Parameter extraction from sampled traces: Gaussian peaks from echo
//! intensity traces, comb parameters from absorption scans, and the
//! inhomogeneous spin linewidth from echo-decay series.
//!
//! Noise on synthetic test data defaults to additive white noise; the
//! detector noise model of a real setup is not prescribed here.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::comb::{fwhm_to_sigma, sigma_to_fwhm};
use crate::error::{Error, Result};
use crate::grid::TimeTrace;
use crate::lm::{self, Model, Options};

/// Outcome of a fit: named parameters, their standard errors, and
/// convergence bookkeeping. Non-converged fits still carry the last
/// iterate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    pub sigmas: BTreeMap<String, f64>,
    /// Root-mean-square residual in the data domain.
    pub residual_norm: f64,
    pub converged: bool,
    pub n_iter: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.sigmas.get(name).copied()
    }
}

/// Echo heights versus spin storage time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    points: Vec<(f64, f64)>,
}

impl DecaySeries {
    /// Storage times must be strictly increasing and heights non-negative.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidSeries);
        }
        if points.iter().any(|&(ts, h)| !ts.is_finite() || h.is_nan() || h < 0.0) {
            return Err(Error::InvalidSeries);
        }
        Ok(DecaySeries { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Reads `ts_seconds,height` rows.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if idx == 0 {
                if line != "ts_seconds,height" {
                    return Err(Error::Csv {
                        line: 1,
                        message: format!("expected header `ts_seconds,height`, got `{line}`"),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |field: Option<&str>, name: &str| -> Result<f64> {
                field
                    .ok_or_else(|| Error::Csv {
                        line: idx + 1,
                        message: format!("missing {name} column"),
                    })?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Csv {
                        line: idx + 1,
                        message: format!("bad {name} value: {e}"),
                    })
            };
            let ts = parse(fields.next(), "ts_seconds")?;
            let height = parse(fields.next(), "height")?;
            points.push((ts, height));
        }
        DecaySeries::new(points)
    }
}

/// Reads a two-column `x,y` CSV with a mandatory header row naming the
/// columns. Returns the header and both columns.
pub fn read_xy_csv<R: BufRead>(r: R) -> Result<(String, Vec<f64>, Vec<f64>)> {
    let mut header = String::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if idx == 0 {
            if line.split(',').count() < 2 || line.split(',').next().unwrap().parse::<f64>().is_ok()
            {
                return Err(Error::Csv {
                    line: 1,
                    message: "expected a two-column header row naming x and y".into(),
                });
            }
            header = line.to_string();
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse = |field: Option<&str>| -> Result<f64> {
            field
                .ok_or_else(|| Error::Csv {
                    line: idx + 1,
                    message: "missing column".into(),
                })?
                .trim()
                .parse()
                .map_err(|e| Error::Csv {
                    line: idx + 1,
                    message: format!("bad value: {e}"),
                })
        };
        xs.push(parse(fields.next())?);
        ys.push(parse(fields.next())?);
    }
    Ok((header, xs, ys))
}

struct GaussianPeak;

// params: [amplitude, center, sigma, offset]
impl Model for GaussianPeak {
    fn value(&self, p: &[f64], x: f64) -> f64 {
        let u = (x - p[1]) / p[2];
        p[0] * (-0.5 * u * u).exp() + p[3]
    }

    fn gradient(&self, p: &[f64], x: f64, out: &mut [f64]) {
        let u = (x - p[1]) / p[2];
        let g = (-0.5 * u * u).exp();
        out[0] = g;
        out[1] = p[0] * g * u / p[2];
        out[2] = p[0] * g * u * u / p[2];
        out[3] = 1.0;
    }
}

/// Fits `amp·exp(-(x-center)²/2σ²) + offset` to a sampled peak and reports
/// `amplitude`, `center`, `fwhm`, `offset`.
///
/// Initial values come from the sample moments. A trace without contrast
/// is rejected; hitting the iteration cap clears `converged` but still
/// reports the last iterate.
pub fn fit_gaussian_peak(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() < 8 || xs.len() != ys.len() {
        return Err(Error::TooFewSamples {
            needed: 8,
            got: xs.len().min(ys.len()),
        });
    }
    let ymax = ys.iter().cloned().fold(f64::MIN, f64::max);
    let ymin = ys.iter().cloned().fold(f64::MAX, f64::min);
    let span = ymax - ymin;
    if span.is_nan() || span <= 0.0 || span < 1e-12 * ymax.abs().max(ymin.abs()).max(1e-300) {
        return Err(Error::FlatTrace);
    }

    // fit in units of the x span so all parameters are O(1)
    let unit = (xs[xs.len() - 1] - xs[0]).abs().max(f64::MIN_POSITIVE);
    let scaled: Vec<f64> = xs.iter().map(|&x| x / unit).collect();

    // moment-based initialization on the offset-subtracted trace
    let weights: Vec<f64> = ys.iter().map(|&y| (y - ymin).max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    let center0 = scaled.iter().zip(&weights).map(|(&x, &w)| x * w).sum::<f64>() / total;
    let var0 = scaled
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * (x - center0) * (x - center0))
        .sum::<f64>()
        / total;
    let dx = ((scaled[scaled.len() - 1] - scaled[0]) / (scaled.len() - 1) as f64).abs();
    let sigma0 = var0.sqrt().max(dx);

    let init = [span, center0, sigma0, ymin];
    let lower = [0.0, f64::NEG_INFINITY, dx * 1e-6, f64::NEG_INFINITY];
    let fit = lm::fit(&GaussianPeak, &scaled, ys, &init, &lower, &Options::default());

    let mut params = BTreeMap::new();
    let mut sigmas = BTreeMap::new();
    params.insert("amplitude".into(), fit.params[0]);
    params.insert("center".into(), fit.params[1] * unit);
    params.insert("fwhm".into(), sigma_to_fwhm(fit.params[2]) * unit);
    params.insert("offset".into(), fit.params[3]);
    sigmas.insert("amplitude".into(), fit.sigmas[0]);
    sigmas.insert("center".into(), fit.sigmas[1] * unit);
    sigmas.insert("fwhm".into(), sigma_to_fwhm(fit.sigmas[2]) * unit);
    sigmas.insert("offset".into(), fit.sigmas[3]);
    Ok(FitResult {
        params,
        sigmas,
        residual_norm: fit.residual_rms,
        converged: fit.converged,
        n_iter: fit.n_iter,
        warnings: Vec::new(),
    })
}

/// [`fit_gaussian_peak`] on the intensity `|field|²` of a time trace.
pub fn fit_gaussian_peak_trace(trace: &TimeTrace) -> Result<FitResult> {
    let xs: Vec<f64> = trace.grid.times().collect();
    let ys = trace.intensity();
    fit_gaussian_peak(&xs, &ys)
}

struct CombModel {
    x_min: f64,
    x_max: f64,
    /// Gaussian instrument kernel standard deviation (0 = none).
    kernel_sigma: f64,
}

// params: [d, d0, gamma_fwhm, delta, center]
impl CombModel {
    fn tooth_range(&self, p: &[f64], sigma_eff: f64) -> (i64, i64) {
        let delta = p[3].max(1e-300);
        let margin = (6.0 * sigma_eff / delta).ceil() as i64 + 1;
        let lo = ((self.x_min - p[4]) / delta).floor() as i64 - margin;
        let hi = ((self.x_max - p[4]) / delta).ceil() as i64 + margin;
        (lo, hi)
    }

    fn widths(&self, p: &[f64]) -> (f64, f64, f64) {
        let sigma = fwhm_to_sigma(p[2]);
        let sigma_eff = (sigma * sigma + self.kernel_sigma * self.kernel_sigma).sqrt();
        (sigma, sigma_eff, sigma / sigma_eff)
    }
}

impl Model for CombModel {
    fn value(&self, p: &[f64], x: f64) -> f64 {
        let (_, sigma_eff, ratio) = self.widths(p);
        let (lo, hi) = self.tooth_range(p, sigma_eff);
        let mut acc = 0.0;
        for j in lo..=hi {
            let u = x - p[4] - j as f64 * p[3];
            let arg = u * u / (2.0 * sigma_eff * sigma_eff);
            if arg < 700.0 {
                acc += (-arg).exp();
            }
        }
        p[0] * ratio * acc + p[1]
    }

    fn gradient(&self, p: &[f64], x: f64, out: &mut [f64]) {
        let (sigma, sigma_eff, ratio) = self.widths(p);
        let (lo, hi) = self.tooth_range(p, sigma_eff);
        let k8 = (8.0 * LN_2).sqrt();
        let se2 = sigma_eff * sigma_eff;
        let mut sum = 0.0;
        let mut sum_u = 0.0;
        let mut sum_uj = 0.0;
        let mut sum_u2 = 0.0;
        for j in lo..=hi {
            let u = x - p[4] - j as f64 * p[3];
            let arg = u * u / (2.0 * se2);
            if arg >= 700.0 {
                continue;
            }
            let g = (-arg).exp();
            sum += g;
            sum_u += g * u;
            sum_uj += g * u * j as f64;
            sum_u2 += g * u * u;
        }
        out[0] = ratio * sum;
        out[1] = 1.0;
        // d(model)/d(sigma), then chain through sigma = gamma / sqrt(8 ln 2)
        let kernel2 = self.kernel_sigma * self.kernel_sigma;
        let d_sigma = p[0] * (kernel2 / (se2 * sigma_eff) * sum + sigma * sigma / (se2 * se2 * sigma_eff) * sum_u2);
        out[2] = d_sigma / k8;
        out[3] = p[0] * ratio * sum_uj / se2;
        out[4] = p[0] * ratio * sum_u / se2;
    }
}

/// Fits the Gaussian comb profile to an absorption scan (`xs` in Hz,
/// `ys` optical depth) and reports `d`, `d0`, `gamma_fwhm`, `delta`,
/// `center`, plus the derived `finesse`.
///
/// `delta_hint` seeds the tooth spacing; at least three teeth must stand
/// out above half contrast. `kernel_fwhm`, when given, deconvolves a
/// Gaussian instrument response of that width: teeth are fitted with an
/// effective width `√(γ² + kernel²)` while `gamma_fwhm` reports the
/// underlying comb. An interior scan cannot distinguish comb centers a
/// whole tooth apart, so `center` is reported within half a spacing of
/// the scan midpoint.
pub fn fit_comb(
    xs: &[f64],
    ys: &[f64],
    delta_hint: f64,
    kernel_fwhm: Option<f64>,
) -> Result<FitResult> {
    if xs.len() < 16 || xs.len() != ys.len() {
        return Err(Error::TooFewSamples {
            needed: 16,
            got: xs.len().min(ys.len()),
        });
    }
    if delta_hint.is_nan() || delta_hint <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta_hint",
            constraint: "> 0",
            value: delta_hint,
        });
    }
    // fit in units of the expected tooth spacing so all parameters are O(1)
    let unit = delta_hint;
    let scaled: Vec<f64> = xs.iter().map(|&x| x / unit).collect();

    let peaks = resolvable_peaks(&scaled, ys, 1.0);
    if peaks.len() < 3 {
        return Err(Error::TooFewTeeth {
            needed: 3,
            got: peaks.len(),
        });
    }

    let ymax = ys.iter().cloned().fold(f64::MIN, f64::max);
    let ymin = ys.iter().cloned().fold(f64::MAX, f64::min);
    let spacing: f64 = {
        let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1].0 - w[0].0).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        if (mean - 1.0).abs() <= 0.3 {
            mean
        } else {
            1.0
        }
    };
    let tallest = peaks
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let gamma0 = half_max_width(&scaled, ys, tallest.0, ymin).clamp(spacing / 20.0, spacing);

    let model = CombModel {
        x_min: scaled.iter().cloned().fold(f64::MAX, f64::min),
        x_max: scaled.iter().cloned().fold(f64::MIN, f64::max),
        kernel_sigma: kernel_fwhm.map_or(0.0, |k| fwhm_to_sigma(k / unit)),
    };
    let init = [ymax - ymin, ymin.max(0.0), gamma0, spacing, tallest.0];
    let lower = [0.0, 0.0, 1e-6, 1e-3, f64::NEG_INFINITY];
    let mut fit = lm::fit(&model, &scaled, ys, &init, &lower, &Options::default());

    // an interior scan only pins the center modulo the spacing; report the
    // tooth nearest the scan midpoint
    let mid = (model.x_min + model.x_max) / 2.0;
    if fit.params[3] > 0.0 {
        fit.params[4] -= fit.params[3] * ((fit.params[4] - mid) / fit.params[3]).round();
    }

    let mut params = BTreeMap::new();
    let mut sigmas = BTreeMap::new();
    for (name, index, rescale) in [
        ("d", 0, 1.0),
        ("d0", 1, 1.0),
        ("gamma_fwhm", 2, unit),
        ("delta", 3, unit),
        ("center", 4, unit),
    ] {
        params.insert(name.into(), fit.params[index] * rescale);
        sigmas.insert(name.into(), fit.sigmas[index] * rescale);
    }
    let finesse = fit.params[3] / fit.params[2];
    params.insert("finesse".into(), finesse);
    let rel_delta = fit.sigmas[3] / fit.params[3];
    let rel_gamma = fit.sigmas[2] / fit.params[2];
    sigmas.insert(
        "finesse".into(),
        finesse * (rel_delta * rel_delta + rel_gamma * rel_gamma).sqrt(),
    );
    Ok(FitResult {
        params,
        sigmas,
        residual_norm: fit.residual_rms,
        converged: fit.converged,
        n_iter: fit.n_iter,
        warnings: Vec::new(),
    })
}

/// Local maxima above half contrast, merged when closer than half the
/// expected spacing.
fn resolvable_peaks(xs: &[f64], ys: &[f64], delta_hint: f64) -> Vec<(f64, f64)> {
    let ymax = ys.iter().cloned().fold(f64::MIN, f64::max);
    let ymin = ys.iter().cloned().fold(f64::MAX, f64::min);
    let threshold = ymin + 0.5 * (ymax - ymin);
    if ymax <= ymin || ymax.is_nan() || ymin.is_nan() {
        return Vec::new();
    }
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let mut in_run = false;
    let mut best = (0.0, f64::MIN);
    for (&x, &y) in xs.iter().zip(ys) {
        if y > threshold {
            if !in_run {
                in_run = true;
                best = (x, y);
            } else if y > best.1 {
                best = (x, y);
            }
        } else if in_run {
            in_run = false;
            push_peak(&mut peaks, best, delta_hint);
        }
    }
    if in_run {
        push_peak(&mut peaks, best, delta_hint);
    }
    peaks
}

fn push_peak(peaks: &mut Vec<(f64, f64)>, candidate: (f64, f64), delta_hint: f64) {
    if let Some(last) = peaks.last_mut() {
        if candidate.0 - last.0 < 0.5 * delta_hint {
            if candidate.1 > last.1 {
                *last = candidate;
            }
            return;
        }
    }
    peaks.push(candidate);
}

fn half_max_width(xs: &[f64], ys: &[f64], peak_x: f64, baseline: f64) -> f64 {
    let peak_index = xs
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - peak_x).abs().total_cmp(&(b.1 - peak_x).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let half = baseline + (ys[peak_index] - baseline) / 2.0;
    let mut left = peak_index;
    while left > 0 && ys[left] > half {
        left -= 1;
    }
    let mut right = peak_index;
    while right + 1 < ys.len() && ys[right] > half {
        right += 1;
    }
    (xs[right] - xs[left]).abs()
}

/// Extracts the inhomogeneous spin linewidth from an echo-decay series.
///
/// The decay `h = A·exp(-ts²·γ²·π²/(2 ln 2))` is linear in `ts²` after
/// taking logs, so the fit is a closed-form regression of `ln h` on `ts²`;
/// no iteration and no initial guess. Zero heights are excluded with a
/// warning. Reports `A` and `gamma_is`.
pub fn fit_spin_linewidth(series: &DecaySeries) -> Result<FitResult> {
    let mut warnings = Vec::new();
    let usable: Vec<(f64, f64)> = series
        .points()
        .iter()
        .filter(|&&(ts, h)| {
            if h > 0.0 {
                true
            } else {
                warnings.push(format!("excluded zero height at ts = {ts} s"));
                false
            }
        })
        .cloned()
        .collect();
    if usable.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: usable.len(),
        });
    }

    let n = usable.len() as f64;
    let txs: Vec<f64> = usable.iter().map(|&(ts, _)| ts * ts).collect();
    let lys: Vec<f64> = usable.iter().map(|&(_, h)| h.ln()).collect();
    let x_mean = txs.iter().sum::<f64>() / n;
    let y_mean = lys.iter().sum::<f64>() / n;
    let sxx: f64 = txs.iter().map(|&x| (x - x_mean) * (x - x_mean)).sum();
    let sxy: f64 = txs
        .iter()
        .zip(&lys)
        .map(|(&x, &y)| (x - x_mean) * (y - y_mean))
        .sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::InvalidSeries);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    if slope.is_nan() || slope >= 0.0 {
        return Err(Error::NonDecayingSeries);
    }

    let hmax = usable.iter().map(|&(_, h)| h).fold(f64::MIN, f64::max);
    let hmin = usable.iter().map(|&(_, h)| h).fold(f64::MAX, f64::min);
    if hmax / hmin < 2.0 {
        return Err(Error::InsufficientDecay { needed: 4 });
    }

    // h = A exp(-ts² γ² π²/(2 ln 2))  =>  slope = -γ² π²/(2 ln 2)
    let pi = std::f64::consts::PI;
    let gamma_is = (-slope * 2.0 * LN_2).sqrt() / pi;
    let amplitude = intercept.exp();

    let ssr: f64 = txs
        .iter()
        .zip(&lys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = (usable.len() - 2).max(1) as f64;
    let log_variance = ssr / dof;
    let slope_sigma = (log_variance / sxx).sqrt();
    let intercept_sigma = (log_variance * (1.0 / n + x_mean * x_mean / sxx)).sqrt();
    // delta method through gamma = sqrt(-slope · 2 ln2)/π
    let gamma_sigma = slope_sigma * (2.0 * LN_2).sqrt() / (2.0 * pi * (-slope).sqrt());

    let residual_norm = {
        let ssr_linear: f64 = usable
            .iter()
            .map(|&(ts, h)| {
                let model = amplitude * (slope * ts * ts).exp();
                (h - model) * (h - model)
            })
            .sum();
        (ssr_linear / n).sqrt()
    };

    let mut params = BTreeMap::new();
    params.insert("A".into(), amplitude);
    params.insert("gamma_is".into(), gamma_is);
    let mut sigmas = BTreeMap::new();
    sigmas.insert("A".into(), amplitude * intercept_sigma);
    sigmas.insert("gamma_is".into(), gamma_sigma);
    Ok(FitResult {
        params,
        sigmas,
        residual_norm,
        converged: true,
        n_iter: 1,
        warnings,
    })
}
