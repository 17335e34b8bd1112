//! Scenario configuration: one JSON document with `comb`, `medium`,
//! `control`, `spin`, `sequence`, `grid`, and `scenario` sections.
//! Unknown keys are rejected so typos fail loudly.

use std::fs;
use std::path::Path;

use afc_core::{CombSpec, ControlPulseSpec, MediumSpec, SimGrid, SpinParams, StorageScenario};
use serde::{Deserialize, Serialize};

use crate::sequence::SequencePlan;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub comb: CombSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumSpec>,
    pub control: ControlPulseSpec,
    pub spin: SpinParams,
    pub sequence: SequenceSection,
    #[serde(default = "SimGrid::default_for_scenarios")]
    pub grid: SimGrid,
    #[serde(default)]
    pub scenario: ScenarioSection,
}

/// Protocol timing. `delta` may be omitted; it then follows the comb tooth
/// spacing. When present it must agree with the comb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSection {
    pub input_fwhm: f64,
    pub input_time: f64,
    pub control1_time: f64,
    pub control2_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Scenario-level factors that are neither comb nor timing: the
/// crossed-beam overlap loss and an optional measured per-pulse transfer
/// efficiency that overrides the modeled one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub mode_overlap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_transfer: Option<f64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            mode_overlap: 1.0,
            measured_transfer: None,
        }
    }
}

impl Config {
    /// Parses and fully validates a configuration document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Config = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        if let Some(delta) = self.sequence.delta {
            let comb_delta = self.comb.delta();
            if (delta - comb_delta).abs() > 1e-9 * comb_delta {
                return Err(CliError::Validation(format!(
                    "config: sequence.delta ({delta} Hz) disagrees with comb.delta ({comb_delta} Hz); \
                     omit sequence.delta to follow the comb"
                )));
            }
        }
        self.storage_scenario()?.validate()?;
        Ok(())
    }

    /// The comb tooth spacing, which also sets the two-level echo delay.
    pub fn delta(&self) -> f64 {
        self.sequence.delta.unwrap_or_else(|| self.comb.delta())
    }

    pub fn sequence_plan(&self) -> SequencePlan {
        SequencePlan {
            input_fwhm: self.sequence.input_fwhm,
            input_time: self.sequence.input_time,
            control1_time: self.sequence.control1_time,
            control2_time: self.sequence.control2_time,
            control: self.control,
            delta: self.delta(),
        }
    }

    pub fn storage_scenario(&self) -> Result<StorageScenario, CliError> {
        let plan = self.sequence_plan();
        Ok(StorageScenario {
            comb: self.comb,
            input_fwhm: self.sequence.input_fwhm,
            control: self.control,
            ts: plan.ts(),
            spin: self.spin,
            mode_overlap: self.scenario.mode_overlap,
            measured_transfer: self.scenario.measured_transfer,
        })
    }

    /// Stable fingerprint of the full configuration (FNV-1a over the
    /// canonical JSON form, defaults included).
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }

    /// Canonical JSON value with all defaults materialized; the form that
    /// sweep parameter paths index into.
    pub fn canonical_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
