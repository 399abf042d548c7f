//! The `verify` subcommand: checks the dispersive closed forms against the
//! master-equation reference.
//!
//! Three validations run from the configured device and `[oracle]` settings:
//! the post-flip field transient, the cavity-induced polarization decay
//! rate, and the extracted dispersive shift. With `-o` the transient's
//! oracle time series is written in the same CSV schema as `simulate`, so
//! the two can be diffed directly.

use std::io::Write;

use readout_core::oracle::{
    field_transient_run, validate_dispersive_shift, validate_sigma_decay, CheckOutcome, OracleRun,
};

use crate::config::{ConfigError, RunConfig};
use crate::fmt::{csv_line, sci};
use crate::simulate::CSV_HEADER;

pub fn write_outcome(outcome: &CheckOutcome, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<24} measured={} reference={} error={} tolerance={} {}",
        outcome.name,
        sci(outcome.measured),
        sci(outcome.reference),
        sci(outcome.error),
        sci(outcome.tolerance),
        if outcome.pass { "PASS" } else { "FAIL" }
    )
}

fn write_run_csv(config: &RunConfig, run: &OracleRun, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let kappa = config.device.kappa;
    for (((&t, &a), &n), &s) in run
        .times
        .iter()
        .zip(&run.a)
        .zip(&run.photon)
        .zip(&run.sigma_z)
    {
        writeln!(
            out,
            "{}",
            csv_line(&[
                sci(t),
                sci(a.re),
                sci(a.im),
                sci(n),
                sci(kappa / 2.0 * n),
                sci(s),
            ])
        )?;
    }
    Ok(())
}

pub fn run_verify(
    config: &RunConfig,
    out: &mut dyn Write,
    csv_out: Option<&mut dyn Write>,
) -> anyhow::Result<i32> {
    let oracle = config
        .oracle
        .ok_or_else(|| ConfigError("missing key oracle (the [oracle] section)".into()))?;
    let device = &config.device;

    let (field, run) = field_transient_run(device, config.target_nbar, &oracle)?;
    write_outcome(&field, out)?;
    let decay = validate_sigma_decay(device, &oracle)?;
    write_outcome(&decay, out)?;
    let shift = validate_dispersive_shift(device, &oracle)?;
    write_outcome(&shift, out)?;

    if let Some(csv) = csv_out {
        write_run_csv(config, &run, csv)?;
    }

    let all_pass = field.pass && decay.pass && shift.pass;
    writeln!(out, "verify: {}", if all_pass { "PASS" } else { "FAIL" })?;
    Ok(if all_pass { 0 } else { 3 })
}
