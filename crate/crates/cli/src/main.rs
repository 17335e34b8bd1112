//! `afc`: simulate comb storage scenarios, sweep parameters, validate pulse
//! sequences, and fit physical parameters from measured traces.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use afc_cli::config::Config;
use afc_cli::scenario::{run_scenario, ScenarioOutput};
use afc_cli::sequence::{validate_sequence, Severity};
use afc_cli::sweep::{sweep, sweep_csv, sweep_json};
use afc_cli::CliError;
use afc_core::estimation::{read_xy_csv, FitResult};
use afc_core::{afc_efficiency, fit_comb, fit_spin_linewidth, optimal_finesse, DecaySeries};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "afc",
    version,
    about = "Atomic-frequency-comb memory simulator and trace-fitting toolkit",
    long_about = "Simulates echo storage in an atomic frequency comb, composes spin-wave \
storage efficiencies, and fits comb / peak / spin-linewidth parameters from measured traces.\n\
Exit codes: 0 success, 2 validation errors, 3 fit non-convergence."
)]
struct Cli {
    /// Scenario configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for reports and traces; stdout only when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for stochastic operations. Reserved: every current command is
    /// deterministic, but the flag is stable CLI surface.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output format for reports and fit results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run one storage scenario: propagate the input pulse through the
    /// comb, measure the two-level echo, compose the recalled efficiency.
    #[command(long_about = "Runs one storage scenario.\n\nWith --out, writes report.json (or \
report.csv), input.csv and output.csv. Trace CSV columns: t_or_nu (seconds), re, im (field \
amplitude). Report CSV columns: two_level_efficiency, two_level_efficiency_analytic, \
transfer_efficiency, spin_decay_factor, mode_overlap, three_level_efficiency, echo_time, \
two_level_echo_time, total_memory_time, n_warnings, provenance.")]
    Simulate,

    /// Re-run the scenario over a list of values for one numeric config
    /// field, e.g. --param comb.delta --values 5e5,3.33e5,2.5e5,2e5.
    #[command(long_about = "Sweeps one numeric configuration field.\n\nRows come back in the \
order the values were given. CSV columns: param, value, then the report columns of `simulate`.")]
    Sweep {
        /// Dotted path into the config, e.g. comb.delta or sequence.control2_time.
        #[arg(long)]
        param: String,
        /// Comma-separated list of values to sweep over.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },

    /// Fit the Gaussian comb profile to an absorption scan.
    #[command(long_about = "Fits comb parameters (d, d0, gamma_fwhm, delta, center, derived \
finesse) to an absorption trace.\n\nInput CSV: header row naming the columns, then `nu_hz,\
optical_depth` rows. Exit code 3 if the fit does not converge.")]
    FitComb {
        /// Absorption trace CSV (frequency in Hz, optical depth).
        #[arg(long)]
        input: PathBuf,
        /// Approximate tooth spacing in Hz (within 20%).
        #[arg(long)]
        delta_hint: f64,
        /// FWHM in Hz of a Gaussian instrument kernel to deconvolve.
        #[arg(long)]
        kernel_fwhm: Option<f64>,
    },

    /// Fit the spin dephasing decay to an echo-height series.
    #[command(long_about = "Fits the Gaussian spin-storage decay, reporting the amplitude A and \
the inhomogeneous spin linewidth gamma_is.\n\nInput CSV: header `ts_seconds,height`, then one \
row per storage time. Exit code 3 if the fit does not converge.")]
    FitDecay {
        /// Echo-decay series CSV (`ts_seconds,height`).
        #[arg(long)]
        input: PathBuf,
    },

    /// Check the pulse-sequence timing of a config without running it.
    Validate,

    /// Report the comb finesse that maximizes the echo efficiency.
    OptimizeFinesse {
        /// Peak optical depth; defaults to comb.d of --config.
        #[arg(long)]
        d: Option<f64>,
        /// Background optical depth; defaults to comb.d0 of --config, else 0.
        #[arg(long)]
        d0: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate => {
            let config = load_config(&cli)?;
            let output = run_scenario(&config)?;
            emit_simulation(&cli, &output)
        }
        Command::Sweep { param, values } => {
            let config = load_config(&cli)?;
            let rows = sweep(&config, param, values)?;
            let (name, text) = match cli.format {
                Format::Json => ("sweep.json", sweep_json(param, &rows)),
                Format::Csv => ("sweep.csv", sweep_csv(param, &rows)),
            };
            emit(&cli, name, &text)
        }
        Command::FitComb {
            input,
            delta_hint,
            kernel_fwhm,
        } => {
            let reader = open(input)?;
            let (_, xs, ys) = read_xy_csv(reader)?;
            let fit = fit_comb(&xs, &ys, *delta_hint, *kernel_fwhm)?;
            emit_fit(&cli, "fit_comb", &fit)
        }
        Command::FitDecay { input } => {
            let reader = open(input)?;
            let series = DecaySeries::read_csv(reader)?;
            let fit = fit_spin_linewidth(&series)?;
            emit_fit(&cli, "fit_decay", &fit)
        }
        Command::Validate => {
            let config = load_config(&cli)?;
            let diagnostics = validate_sequence(&config.sequence_plan());
            for diagnostic in &diagnostics {
                println!("{diagnostic}");
            }
            if diagnostics
                .iter()
                .any(|d| d.severity == Severity::Violation)
            {
                Err(CliError::Validation("sequence has violations".into()))
            } else {
                println!("sequence ok ({} warnings)", diagnostics.len());
                Ok(())
            }
        }
        Command::OptimizeFinesse { d, d0 } => {
            let comb = match &cli.config {
                Some(path) => Some(Config::load(path)?.comb),
                None => None,
            };
            let d = d
                .or(comb.as_ref().map(|c| c.d()))
                .ok_or_else(|| CliError::Validation("pass --d or --config".into()))?;
            let d0 = d0.or(comb.as_ref().map(|c| c.d0())).unwrap_or(0.0);
            let best = optimal_finesse(d);
            let eta = afc_efficiency(d, best, d0)?;
            let text = match cli.format {
                Format::Json => format!(
                    "{{\n  \"d\": {d},\n  \"d0\": {d0},\n  \"optimal_finesse\": {best},\n  \
                     \"efficiency_at_optimum\": {eta}\n}}\n"
                ),
                Format::Csv => format!(
                    "d,d0,optimal_finesse,efficiency_at_optimum\n{d},{d0},{best},{eta}\n"
                ),
            };
            emit(&cli, "optimal_finesse.txt", &text)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required for this command".into()))?;
    Config::load(path)
}

fn open(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn emit(cli: &Cli, file_name: &str, text: &str) -> Result<(), CliError> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(file_name), text)?;
    }
    print!("{text}");
    Ok(())
}

fn emit_simulation(cli: &Cli, output: &ScenarioOutput) -> Result<(), CliError> {
    let (name, text) = match cli.format {
        Format::Json => ("report.json", output.report.to_json()),
        Format::Csv => ("report.csv", output.report.to_csv()),
    };
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), &text)?;
        let mut input_csv = Vec::new();
        output.input.write_csv(&mut input_csv)?;
        fs::write(dir.join("input.csv"), input_csv)?;
        let mut output_csv = Vec::new();
        output.output.write_csv(&mut output_csv)?;
        fs::write(dir.join("output.csv"), output_csv)?;
    }
    print!("{text}");
    Ok(())
}

fn emit_fit(cli: &Cli, stem: &str, fit: &FitResult) -> Result<(), CliError> {
    let (name, text) = match cli.format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(fit).expect("fit serializes");
            text.push('\n');
            (format!("{stem}.json"), text)
        }
        Format::Csv => {
            let mut text = String::from("param,value,sigma\n");
            for (key, value) in &fit.params {
                let sigma = fit.sigmas.get(key).copied().unwrap_or(f64::NAN);
                text.push_str(&format!("{key},{value},{sigma}\n"));
            }
            (format!("{stem}.csv"), text)
        }
    };
    emit(cli, &name, &text)?;
    if !fit.converged {
        return Err(CliError::FitDidNotConverge(format!(
            "stopped after {} iterations (rms residual {})",
            fit.n_iter, fit.residual_norm
        )));
    }
    Ok(())
}
