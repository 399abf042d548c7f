//! The `sweep` and `optimize` subcommands.

use std::io::Write;

use readout_core::feasibility::{explain, ConstraintStatus};
use readout_core::model::{angular_to_ghz, angular_to_mhz, ghz_to_angular, mhz_to_angular};
use readout_core::optimizer::{
    optimize, sweep, DesignSpace, FreeVar, Objective, OptimizeOutcome, SweepRow, VarSpec,
};

use crate::config::{ConfigError, RunConfig};
use crate::fmt::{csv_line, sci};
use crate::report::exit_code_for;

pub const SWEEP_HEADER: &str = "kappa_per_s,g_over_2pi_mhz,omega_qr_over_2pi_ghz,window_s,n_bar,\
chi_over_2pi_mhz,q_factor,gamma_r_per_s,fidelity,n_total,v_out_v,\
c1,c2,c3,c4,c5,c6,c7,c8,status";

/// Parse a `--free name=lo:hi[:log|:lin]` argument. Bounds use the config
/// units: kappa in 1/s, g in MHz (ω/2π), omega_qr in GHz (ω/2π), window in
/// seconds, n_bar dimensionless.
pub fn parse_free(arg: &str) -> Result<VarSpec, ConfigError> {
    let (name, rest) = arg
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("--free {arg}: expected name=lo:hi[:log|:lin]")))?;
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(ConfigError(format!(
            "--free {arg}: expected name=lo:hi[:log|:lin]"
        )));
    }
    let parse_num = |s: &str| -> Result<f64, ConfigError> {
        s.parse()
            .map_err(|_| ConfigError(format!("--free {arg}: bad bound {s:?}")))
    };
    let lo = parse_num(parts[0])?;
    let hi = parse_num(parts[1])?;
    let (var, lo, hi) = match name {
        "kappa" => (FreeVar::Kappa, lo, hi),
        "g" => (FreeVar::Coupling, mhz_to_angular(lo), mhz_to_angular(hi)),
        "omega_qr" => (FreeVar::Detuning, ghz_to_angular(lo), ghz_to_angular(hi)),
        "window" => (FreeVar::Window, lo, hi),
        "n_bar" => (FreeVar::NBar, lo, hi),
        other => {
            return Err(ConfigError(format!(
                "--free {arg}: unknown variable {other:?} (kappa, g, omega_qr, window, n_bar)"
            )))
        }
    };
    let spec = match parts.get(2) {
        None => VarSpec::new(var, lo, hi),
        Some(&"log") => VarSpec::with_scale(var, lo, hi, true),
        Some(&"lin") => VarSpec::with_scale(var, lo, hi, false),
        Some(other) => {
            return Err(ConfigError(format!(
                "--free {arg}: unknown scale {other:?} (log or lin)"
            )))
        }
    };
    spec.map_err(|e| ConfigError(format!("--free {arg}: {e}")))
}

pub fn parse_objective(s: &str) -> Result<Objective, ConfigError> {
    match s {
        "min-window" => Ok(Objective::MinWindow),
        "max-fidelity" => Ok(Objective::MaxFidelity),
        "max-n-total" => Ok(Objective::MaxNTotal),
        other => Err(ConfigError(format!(
            "--objective {other:?}: expected min-window, max-fidelity or max-n-total"
        ))),
    }
}

fn design_space(config: &RunConfig, free: &[String]) -> anyhow::Result<DesignSpace> {
    let specs = free
        .iter()
        .map(|s| parse_free(s))
        .collect::<Result<Vec<_>, _>>()?;
    if config.duration == 0.0 {
        return Err(ConfigError("measurement.duration_s: must be positive for sweeps".into()).into());
    }
    Ok(DesignSpace::new(
        config.device,
        config.duration,
        config.target_nbar,
        specs,
    )?)
}

fn row_fields(row: &SweepRow) -> Vec<String> {
    let mut fields = vec![
        sci(row.kappa),
        sci(angular_to_mhz(row.g)),
        sci(angular_to_ghz(row.omega_qr)),
        sci(row.window),
        sci(row.n_bar),
        sci(angular_to_mhz(row.chi)),
        sci(row.q_factor),
        sci(row.gamma_r),
        sci(row.fidelity),
        sci(row.n_total),
        sci(row.v_out),
    ];
    fields.extend(row.ratios.iter().map(|&r| sci(r)));
    fields.push(row.overall.as_str().to_string());
    fields
}

pub fn run_sweep(
    config: &RunConfig,
    free: &[String],
    points: usize,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let space = design_space(config, free)?;
    let result = sweep(&space, points, &config.margins)?;
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in &result.rows {
        writeln!(out, "{}", csv_line(&row_fields(row)))?;
    }
    Ok(0)
}

pub fn write_optimum_text(outcome: &OptimizeOutcome, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "verdict: {}",
        if outcome.feasible {
            "feasible"
        } else {
            "infeasible (least-violating point shown)"
        }
    )?;
    writeln!(out, "objective value: {}", sci(outcome.objective_value))?;
    writeln!(out, "optimum")?;
    let row = &outcome.best;
    writeln!(out, "  kappa        = {} 1/s", sci(row.kappa))?;
    writeln!(out, "  g/2pi        = {} MHz", sci(angular_to_mhz(row.g)))?;
    writeln!(
        out,
        "  omega_qr/2pi = {} GHz",
        sci(angular_to_ghz(row.omega_qr))
    )?;
    writeln!(out, "  window       = {} s", sci(row.window))?;
    writeln!(out, "  n_bar        = {}", sci(row.n_bar))?;
    writeln!(out, "  chi/2pi      = {} MHz", sci(angular_to_mhz(row.chi)))?;
    writeln!(out, "  gamma_r      = {} 1/s", sci(row.gamma_r))?;
    writeln!(out, "  fidelity     = {}", sci(row.fidelity))?;
    writeln!(out, "  n_total      = {}", sci(row.n_total))?;
    writeln!(out, "constraints")?;
    for line in explain(&outcome.report, false) {
        writeln!(out, "  {line}")?;
    }
    writeln!(out, "overall: {}", outcome.report.overall.as_str())?;
    writeln!(out, "iterations: {}", outcome.iterations)?;
    writeln!(out, "audit trail")?;
    for line in &outcome.trail {
        writeln!(out, "  {line}")?;
    }
    Ok(())
}

pub fn run_optimize(
    config: &RunConfig,
    free: &[String],
    objective: &str,
    coarse_points: usize,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let space = design_space(config, free)?;
    let objective = parse_objective(objective)?;
    let outcome = optimize(&space, objective, &config.margins, coarse_points)?;
    write_optimum_text(&outcome, out)?;
    if !outcome.feasible {
        return Ok(exit_code_for(ConstraintStatus::Fail));
    }
    Ok(exit_code_for(outcome.report.overall))
}
