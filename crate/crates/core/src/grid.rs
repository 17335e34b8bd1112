//! Uniform simulation grids and sampled complex traces in time and frequency.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::comb::CombSpec;
use crate::error::{Error, Result};

const CSV_HEADER: &str = "t_or_nu,re,im";

/// Uniformly sampled simulation window.
///
/// `n_samples` time bins cover `time_span` seconds, so the conjugate
/// frequency axis has resolution `1/time_span` and total span
/// `n_samples/time_span`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSimGrid", into = "RawSimGrid")]
pub struct SimGrid {
    n_samples: usize,
    time_span: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimGrid {
    n_samples: usize,
    time_span: f64,
}

impl TryFrom<RawSimGrid> for SimGrid {
    type Error = Error;

    fn try_from(raw: RawSimGrid) -> Result<Self> {
        SimGrid::new(raw.n_samples, raw.time_span)
    }
}

impl From<SimGrid> for RawSimGrid {
    fn from(grid: SimGrid) -> Self {
        RawSimGrid {
            n_samples: grid.n_samples,
            time_span: grid.time_span,
        }
    }
}

impl SimGrid {
    pub fn new(n_samples: usize, time_span: f64) -> Result<Self> {
        if n_samples < 2 || !n_samples.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n_samples));
        }
        if !time_span.is_finite() || time_span <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "time_span",
                constraint: "> 0",
                value: time_span,
            });
        }
        Ok(SimGrid {
            n_samples,
            time_span,
        })
    }

    /// 2^16 samples over 50 us: resolves 165 kHz teeth with >= 8 points
    /// while spanning far more than the combs used here.
    pub fn default_for_scenarios() -> Self {
        SimGrid {
            n_samples: 1 << 16,
            time_span: 50e-6,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn time_span(&self) -> f64 {
        self.time_span
    }

    pub fn time_step(&self) -> f64 {
        self.time_span / self.n_samples as f64
    }

    pub fn freq_step(&self) -> f64 {
        1.0 / self.time_span
    }

    /// Total width of the frequency axis.
    pub fn freq_span(&self) -> f64 {
        self.n_samples as f64 / self.time_span
    }

    pub fn time_at(&self, index: usize) -> f64 {
        index as f64 * self.time_step()
    }

    /// Frequency of FFT bin `index`, in the usual wrap-around ordering
    /// (non-negative frequencies first, then negative ones).
    pub fn freq_at(&self, index: usize) -> f64 {
        let n = self.n_samples as i64;
        let k = index as i64;
        let k = if k < n / 2 { k } else { k - n };
        k as f64 * self.freq_step()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(|i| self.time_at(i))
    }

    /// Checks that the grid can hold the comb: the frequency axis must
    /// cover at least 4x the comb bandwidth and the time axis more than
    /// 3x the echo time `1/Δ`.
    pub fn validate_for_comb(&self, comb: &CombSpec) -> Result<()> {
        let bandwidth = comb.bandwidth();
        if self.freq_span() < 4.0 * bandwidth {
            return Err(Error::GridTooNarrow {
                span_hz: self.freq_span(),
                bandwidth_hz: bandwidth,
            });
        }
        let echo_time = comb.echo_time();
        if self.time_span <= 3.0 * echo_time {
            return Err(Error::GridTooShort {
                time_span_s: self.time_span,
                echo_time_s: echo_time,
            });
        }
        Ok(())
    }
}

/// Complex field amplitude sampled on the time axis of a [`SimGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub grid: SimGrid,
    pub samples: Vec<Complex64>,
}

/// Complex amplitude per frequency bin, FFT bin ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: SimGrid,
    pub samples: Vec<Complex64>,
}

impl TimeTrace {
    pub fn new(grid: SimGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_samples() {
            return Err(Error::GridMismatch);
        }
        Ok(TimeTrace { grid, samples })
    }

    pub fn zeros(grid: SimGrid) -> Self {
        TimeTrace {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.n_samples()],
        }
    }

    /// Integrated `|field|²` over the trace, in field-units² × seconds.
    pub fn energy(&self) -> f64 {
        let dt = self.grid.time_step();
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * dt
    }

    /// `|field|²` per time bin.
    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    pub fn to_spectrum(&self) -> Spectrum {
        let mut samples = self.samples.clone();
        fft_forward(&mut samples);
        Spectrum {
            grid: self.grid,
            samples,
        }
    }

    /// Writes `t_or_nu,re,im` rows with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for (t, s) in self.grid.times().zip(&self.samples) {
            writeln!(w, "{},{},{}", t, s.re, s.im)?;
        }
        Ok(())
    }

    /// Reads the format written by [`TimeTrace::write_csv`]. The sample
    /// count must be a power of two and the time column uniformly spaced.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (xs, samples) = read_rows(r)?;
        let n = xs.len();
        let dt = uniform_step(&xs)?;
        let grid = SimGrid::new(n, dt * n as f64)?;
        Ok(TimeTrace { grid, samples })
    }
}

impl Spectrum {
    pub fn new(grid: SimGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_samples() {
            return Err(Error::GridMismatch);
        }
        Ok(Spectrum { grid, samples })
    }

    pub fn to_time_trace(&self) -> TimeTrace {
        let mut samples = self.samples.clone();
        fft_inverse(&mut samples);
        TimeTrace {
            grid: self.grid,
            samples,
        }
    }

    /// `|amplitude|²` per frequency bin, FFT ordering.
    pub fn power(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// Writes rows ordered by ascending frequency (negative half first).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        let n = self.grid.n_samples();
        for i in 0..n {
            let k = (i + n / 2) % n;
            let s = self.samples[k];
            writeln!(w, "{},{},{}", self.grid.freq_at(k), s.re, s.im)?;
        }
        Ok(())
    }

    /// Reads the format written by [`Spectrum::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (xs, shifted) = read_rows(r)?;
        let n = xs.len();
        let df = uniform_step(&xs)?;
        let grid = SimGrid::new(n, 1.0 / df)?;
        let mut samples = vec![Complex64::new(0.0, 0.0); n];
        for (i, s) in shifted.into_iter().enumerate() {
            samples[(i + n / 2) % n] = s;
        }
        Ok(Spectrum { grid, samples })
    }
}

fn read_rows<R: BufRead>(r: R) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut xs = Vec::new();
    let mut samples = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if idx == 0 {
            if line != CSV_HEADER {
                return Err(Error::Csv {
                    line: 1,
                    message: format!("expected header `{CSV_HEADER}`, got `{line}`"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<f64> {
            fields
                .next()
                .ok_or_else(|| Error::Csv {
                    line: idx + 1,
                    message: format!("missing {name} column"),
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Csv {
                    line: idx + 1,
                    message: format!("bad {name} value: {e}"),
                })
        };
        let x = next("t_or_nu")?;
        let re = next("re")?;
        let im = next("im")?;
        xs.push(x);
        samples.push(Complex64::new(re, im));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: xs.len(),
        });
    }
    Ok((xs, samples))
}

fn uniform_step(xs: &[f64]) -> Result<f64> {
    let step = xs[1] - xs[0];
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Csv {
            line: 2,
            message: "first column must be strictly increasing".into(),
        });
    }
    for (i, w) in xs.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
            return Err(Error::Csv {
                line: i + 3,
                message: "first column is not uniformly sampled".into(),
            });
        }
    }
    Ok(step)
}

pub(crate) fn fft_forward(samples: &mut [Complex64]) {
    FftPlanner::new()
        .plan_fft_forward(samples.len())
        .process(samples);
}

pub(crate) fn fft_inverse(samples: &mut [Complex64]) {
    FftPlanner::new()
        .plan_fft_inverse(samples.len())
        .process(samples);
    let scale = 1.0 / samples.len() as f64;
    for s in samples {
        *s *= scale;
    }
}
