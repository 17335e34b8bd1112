//! Atomic-frequency-comb (AFC) optical memory toolkit.
//!
//! An AFC absorbs a weak input pulse in a periodic spectral grating of ions
//! and re-emits it as an echo a time `1/Δ` later, where `Δ` is the tooth
//! spacing; a pair of control pulses can park the excitation in a spin
//! state in between for on-demand readout. This crate provides
//!
//! - [`comb`]: the comb parametrization and the closed-form echo
//!   efficiency, including finesse optimization,
//! - [`propagation`]: first-principles propagation of pulses through the
//!   comb as a causal spectral filter, with numerical echo efficiencies,
//! - [`spinwave`]: control-pulse transfer and spin dephasing, composed
//!   into the full three-level storage efficiency,
//! - [`estimation`]: least-squares extraction of comb, peak, and spin
//!   linewidth parameters from sampled traces,
//! - [`lm`]: the small Levenberg-Marquardt engine behind the fitters.

pub mod comb;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod lm;
pub mod propagation;
pub mod spinwave;

pub use comb::{
    afc_efficiency, fwhm_to_sigma, modes_in_bandwidth, multimode_capacity, optimal_finesse,
    sigma_to_fwhm, teeth_for_bandwidth, CombSpec, MediumSpec,
};
pub use error::{Error, Result};
pub use estimation::{
    fit_comb, fit_gaussian_peak, fit_gaussian_peak_trace, fit_spin_linewidth, DecaySeries,
    FitResult,
};
pub use grid::{SimGrid, Spectrum, TimeTrace};
pub use propagation::{
    echo_efficiency, gaussian_pulse, propagate, pulse_train_spectrum, transfer_function,
};
pub use spinwave::{
    effective_transfer_efficiency, extract_transfer_efficiency, pi_pulse_duration,
    rabi_transfer_probability, spin_decay_factor, spin_half_time, three_level_efficiency,
    ControlPulseSpec, PulseShape, SpinParams, StorageScenario,
};
