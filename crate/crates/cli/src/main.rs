use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use readout_cli::config::{ConfigError, RunConfig};
use readout_cli::plot::line_plot;
use readout_cli::report::run_report;
use readout_cli::simulate::{photon_series, run_simulate, SimMode};
use readout_cli::sweep::{run_optimize, run_sweep};
use readout_cli::verify::run_verify;
use readout_core::Error as CoreError;

/// Design and simulate dispersive single-shot qubit readout through a
/// transmission-line resonator.
#[derive(Parser)]
#[command(name = "readout-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derived quantities and the feasibility gate for one configuration.
    Report {
        /// Configuration file (TOML).
        #[arg(short = 'c', long)]
        config: PathBuf,
        /// Output path (stdout when omitted).
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Output format: text or records (JSON lines).
        #[arg(long, default_value = "text")]
        format: String,
        /// List failing constraints first.
        #[arg(long)]
        sort_by_severity: bool,
    },
    /// Time series of the pre-flip steady state and post-flip transient.
    Simulate {
        #[arg(short = 'c', long)]
        config: PathBuf,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Evaluation mode: closed-form or ode.
        #[arg(long, default_value = "closed-form")]
        mode: String,
        /// Integrator step in seconds (defaults to half the admissible step).
        #[arg(long)]
        dt: Option<f64>,
        /// Also write an SVG plot next to the output file.
        #[arg(long)]
        plot: bool,
    },
    /// Grid evaluation over freed design variables, as CSV.
    Sweep {
        #[arg(short = 'c', long)]
        config: PathBuf,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Freed variable, repeatable: name=lo:hi[:log|:lin]. Units follow
        /// the config keys (kappa 1/s, g MHz, omega_qr GHz, window s).
        #[arg(long = "free")]
        free: Vec<String>,
        /// Grid points per freed axis.
        #[arg(long, default_value_t = 9)]
        points: usize,
    },
    /// Constrained design search over freed variables.
    Optimize {
        #[arg(short = 'c', long)]
        config: PathBuf,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[arg(long = "free")]
        free: Vec<String>,
        /// min-window, max-fidelity or max-n-total.
        #[arg(long)]
        objective: String,
        /// Coarse-scan points per freed axis.
        #[arg(long, default_value_t = 9)]
        points: usize,
    },
    /// Check the dispersive closed forms against the master-equation
    /// reference (requires an [oracle] section).
    Verify {
        #[arg(short = 'c', long)]
        config: PathBuf,
        /// Write the oracle field transient as CSV (simulate schema).
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

fn open_output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn exit_code_for_error(err: &anyhow::Error) -> u8 {
    if let Some(CoreError::TruncationInadequate { .. }) = err.downcast_ref::<CoreError>() {
        return 4;
    }
    1
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Report {
            config,
            output,
            format,
            sort_by_severity,
        } => {
            if !matches!(format.as_str(), "text" | "records") {
                return Err(
                    ConfigError(format!("--format {format:?}: expected text or records")).into(),
                );
            }
            let config = RunConfig::load(&config)?;
            let mut out = open_output(&output)?;
            run_report(&config, &format, sort_by_severity, &mut out)
        }
        Command::Simulate {
            config,
            output,
            mode,
            dt,
            plot,
        } => {
            let sim_mode = SimMode::parse(&mode).ok_or_else(|| {
                ConfigError(format!("--mode {mode:?}: expected closed-form or ode"))
            })?;
            if plot && output.is_none() {
                return Err(ConfigError("--plot requires -o <output path>".into()).into());
            }
            let config = RunConfig::load(&config)?;
            let code = {
                let mut out = open_output(&output)?;
                run_simulate(&config, sim_mode, dt, &mut out)?
            };
            if plot {
                let rows = readout_cli::simulate::simulate_rows(&config, sim_mode, dt)?;
                let svg_path = output.as_ref().unwrap().with_extension("svg");
                let mut svg = std::fs::File::create(&svg_path)?;
                line_plot(
                    &mut svg,
                    "cavity photon number",
                    "t (s)",
                    "n",
                    &[("n_cavity", photon_series(&config, &rows))],
                )?;
            }
            Ok(code)
        }
        Command::Sweep {
            config,
            output,
            free,
            points,
        } => {
            let config = RunConfig::load(&config)?;
            let mut out = open_output(&output)?;
            run_sweep(&config, &free, points, &mut out)
        }
        Command::Optimize {
            config,
            output,
            free,
            objective,
            points,
        } => {
            let config = RunConfig::load(&config)?;
            let mut out = open_output(&output)?;
            run_optimize(&config, &free, &objective, points, &mut out)
        }
        Command::Verify { config, output } => {
            let config = RunConfig::load(&config)?;
            let mut out = std::io::stdout().lock();
            match output {
                Some(p) => {
                    let mut csv = std::fs::File::create(Path::new(&p))?;
                    run_verify(&config, &mut out, Some(&mut csv))
                }
                None => run_verify(&config, &mut out, None),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for_error(&err))
        }
    }
}
