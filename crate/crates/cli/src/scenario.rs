//! End-to-end storage scenarios: comb propagation for the two-level echo,
//! analytic cross-check, and composition into the full recalled efficiency.

use afc_core::{
    afc_efficiency, echo_efficiency, effective_transfer_efficiency, gaussian_pulse, propagate,
    spin_decay_factor, three_level_efficiency, TimeTrace,
};
use serde::Serialize;

use crate::config::Config;
use crate::sequence::{validate_sequence, Severity};
use crate::CliError;

/// Everything a scenario run reports. Serializes deterministically: same
/// config digest, same bytes.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    /// Two-level echo efficiency from the spectral propagation.
    pub two_level_efficiency: f64,
    /// Closed-form two-level efficiency for the same comb.
    pub two_level_efficiency_analytic: f64,
    /// Per-pulse transfer efficiency used in the composition.
    pub transfer_efficiency: f64,
    pub spin_decay_factor: f64,
    pub mode_overlap: f64,
    /// Recalled efficiency of the full scheme.
    pub three_level_efficiency: f64,
    /// When the recalled echo appears: input_time + 1/delta + ts.
    pub echo_time: f64,
    pub two_level_echo_time: f64,
    /// ts + 1/delta.
    pub total_memory_time: f64,
    pub warnings: Vec<String>,
    /// Digest of the configuration that produced this report.
    pub provenance: String,
}

#[derive(Debug)]
pub struct ScenarioOutput {
    pub report: ScenarioReport,
    pub input: TimeTrace,
    pub output: TimeTrace,
}

/// Runs one scenario: validates the sequence, propagates the input pulse
/// through the comb, measures the echo, and composes the three-level
/// efficiency. Sequence violations abort; warnings end up in the report.
pub fn run_scenario(config: &Config) -> Result<ScenarioOutput, CliError> {
    let plan = config.sequence_plan();
    let diagnostics = validate_sequence(&plan);
    let violations: Vec<String> = diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Violation)
        .map(|d| d.to_string())
        .collect();
    if !violations.is_empty() {
        return Err(CliError::Validation(violations.join("\n")));
    }
    let mut warnings: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();

    let comb = config.comb;
    let scenario = config.storage_scenario()?;
    if plan.input_spectral_fwhm() > comb.bandwidth() / 4.0 {
        warnings.push(format!(
            "warning[input_fwhm]: input spectral FWHM {:.3} MHz exceeds a quarter of the comb \
             bandwidth ({:.3} MHz); the linear filter model degrades",
            plan.input_spectral_fwhm() / 1e6,
            comb.bandwidth() / 1e6
        ));
    }

    let grid = config.grid;
    let input = gaussian_pulse(grid, plan.input_time, plan.input_fwhm);
    let output = propagate(&input, &comb)?;
    let window = 0.6 / comb.delta();
    let eta2 = echo_efficiency(&output, &input, plan.two_level_echo_time(), window)?;
    let eta2_analytic = afc_efficiency(comb.d(), comb.finesse(), comb.d0())?;

    let transfer = match scenario.measured_transfer {
        Some(eta) => eta,
        None => effective_transfer_efficiency(scenario.input_fwhm, &scenario.control)?,
    };
    let decay = spin_decay_factor(scenario.ts, &scenario.spin)?;
    let eta3 = three_level_efficiency(&scenario, eta2)?;

    let report = ScenarioReport {
        two_level_efficiency: eta2,
        two_level_efficiency_analytic: eta2_analytic,
        transfer_efficiency: transfer,
        spin_decay_factor: decay,
        mode_overlap: scenario.mode_overlap,
        three_level_efficiency: eta3,
        echo_time: plan.echo_time(),
        two_level_echo_time: plan.two_level_echo_time(),
        total_memory_time: scenario.total_memory_time(),
        warnings,
        provenance: config.digest(),
    };
    Ok(ScenarioOutput {
        report,
        input,
        output,
    })
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub const CSV_HEADER: &'static str = "two_level_efficiency,two_level_efficiency_analytic,\
transfer_efficiency,spin_decay_factor,mode_overlap,three_level_efficiency,echo_time,\
two_level_echo_time,total_memory_time,n_warnings,provenance";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.two_level_efficiency,
            self.two_level_efficiency_analytic,
            self.transfer_efficiency,
            self.spin_decay_factor,
            self.mode_overlap,
            self.three_level_efficiency,
            self.echo_time,
            self.two_level_echo_time,
            self.total_memory_time,
            self.warnings.len(),
            self.provenance,
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}
