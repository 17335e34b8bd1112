//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The comb teeth are wider than their spacing; no grating survives.
    #[error("comb finesse {finesse:.4} must exceed 1 (delta {delta} Hz / gamma {gamma} Hz)")]
    FinesseTooLow { finesse: f64, delta: f64, gamma: f64 },

    #[error("{name} must be {constraint} (got {value})")]
    InvalidParameter {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },

    #[error("tooth count must be an odd integer >= 1 (got {0})")]
    InvalidToothCount(u32),

    #[error("finesse must be positive (got {0})")]
    NonPositiveFinesse(f64),

    #[error("grid size must be a power of two >= 2 (got {0})")]
    NotPowerOfTwo(usize),

    #[error("grid frequency span {span_hz} Hz is below 4x the comb bandwidth ({bandwidth_hz} Hz)")]
    GridTooNarrow { span_hz: f64, bandwidth_hz: f64 },

    #[error("grid time span {time_span_s} s does not exceed 3x the echo time {echo_time_s} s")]
    GridTooShort { time_span_s: f64, echo_time_s: f64 },

    #[error("traces live on different grids")]
    GridMismatch,

    #[error("echo window must be positive (got {0} s)")]
    EmptyWindow(f64),

    #[error("echo window [{lo} s, {hi} s] overlaps the transmitted pulse around {transmission} s")]
    WindowOverlapsTransmission { lo: f64, hi: f64, transmission: f64 },

    #[error("pulse train needs {train_s} s but the grid spans only {span_s} s")]
    TrainExceedsGrid { train_s: f64, span_s: f64 },

    /// A retrieved efficiency larger than its two-level bound has no real
    /// transfer efficiency.
    #[error("three-level efficiency {eta3} exceeds the two-level efficiency {eta2}")]
    UnphysicalTransfer { eta3: f64, eta2: f64 },

    #[error("trace is flat; nothing to fit")]
    FlatTrace,

    #[error("need at least {needed} samples ({got} given)")]
    TooFewSamples { needed: usize, got: usize },

    #[error("fewer than {needed} resolvable comb teeth in the trace ({got} found)")]
    TooFewTeeth { needed: usize, got: usize },

    #[error("decay series does not decay; cannot extract a linewidth")]
    NonDecayingSeries,

    #[error("decay series needs >= {needed} positive points spanning a factor-2 decay")]
    InsufficientDecay { needed: usize },

    #[error("decay times must be strictly increasing with non-negative heights")]
    InvalidSeries,

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
