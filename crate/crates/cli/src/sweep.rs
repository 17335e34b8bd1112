//! Parameter sweeps: one scenario run per value of a dotted config path,
//! evaluated concurrently, reported in input order.

use rayon::prelude::*;
use serde_json::Value;

use crate::config::Config;
use crate::scenario::{run_scenario, ScenarioReport};
use crate::CliError;

/// Replaces the numeric field at a dotted `section.field` path.
pub fn set_numeric_path(doc: &mut Value, path: &str, new_value: f64) -> Result<(), CliError> {
    let mut cursor = &mut *doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let object = cursor.as_object_mut().ok_or_else(|| {
            CliError::Validation(format!("unknown parameter path `{path}`"))
        })?;
        let entry = object.get_mut(*segment).ok_or_else(|| {
            CliError::Validation(format!(
                "unknown parameter path `{path}` (no field `{segment}`)"
            ))
        })?;
        if i + 1 == segments.len() {
            if !entry.is_number() {
                return Err(CliError::Validation(format!(
                    "parameter path `{path}` is not numeric"
                )));
            }
            let number = serde_json::Number::from_f64(new_value).ok_or_else(|| {
                CliError::Validation(format!("value {new_value} is not a finite number"))
            })?;
            *entry = Value::Number(number);
            return Ok(());
        }
        cursor = entry;
    }
    Err(CliError::Validation(format!(
        "unknown parameter path `{path}`"
    )))
}

/// Runs the scenario once per value of `param`, concurrently. Results come
/// back in the order the values were given, independent of scheduling.
pub fn sweep(
    config: &Config,
    param: &str,
    values: &[f64],
) -> Result<Vec<(f64, ScenarioReport)>, CliError> {
    if values.is_empty() {
        return Err(CliError::Validation("sweep needs at least one value".into()));
    }
    let base = config.canonical_value();
    {
        // reject unknown paths before spawning any work
        let mut probe = base.clone();
        set_numeric_path(&mut probe, param, 0.0)?;
    }
    values
        .par_iter()
        .map(|&value| {
            let mut doc = base.clone();
            set_numeric_path(&mut doc, param, value)?;
            let text = serde_json::to_string(&doc).expect("value serializes");
            let config = Config::from_json(&text)
                .map_err(|e| CliError::Validation(format!("{param} = {value}: {e}")))?;
            let run = run_scenario(&config)
                .map_err(|e| CliError::Validation(format!("{param} = {value}: {e}")))?;
            Ok((value, run.report))
        })
        .collect()
}

pub fn sweep_csv(param: &str, rows: &[(f64, ScenarioReport)]) -> String {
    let mut out = format!("param,value,{}\n", ScenarioReport::CSV_HEADER);
    for (value, report) in rows {
        out.push_str(&format!("{param},{value},{}\n", report.csv_row()));
    }
    out
}

pub fn sweep_json(param: &str, rows: &[(f64, ScenarioReport)]) -> String {
    #[derive(serde::Serialize)]
    struct Row<'a> {
        param: &'a str,
        value: f64,
        #[serde(flatten)]
        report: &'a ScenarioReport,
    }
    let rows: Vec<Row> = rows
        .iter()
        .map(|(value, report)| Row {
            param,
            value: *value,
            report,
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&rows).expect("rows serialize");
    text.push('\n');
    text
}
