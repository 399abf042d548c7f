//! The `report` subcommand: derived quantities plus the feasibility gate.

use std::io::Write;

use serde::Serialize;

use readout_core::dynamics::{DriveMode, DriveSpec};
use readout_core::feasibility::{
    check_constraints_with_photons, explain, ConstraintKind, ConstraintReport, ConstraintStatus,
    PhotonCountSource,
};
use readout_core::model::{angular_to_ghz, angular_to_mhz, fidelity, QubitState};
use readout_core::readout::{drive_for_target_nbar, total_photons_steady, ReadoutBudget};

use crate::config::RunConfig;
use crate::fmt::sci;

pub fn exit_code_for(status: ConstraintStatus) -> i32 {
    match status {
        ConstraintStatus::Pass => 0,
        ConstraintStatus::Marginal => 2,
        ConstraintStatus::Fail => 3,
    }
}

/// Everything the report prints, assembled from library calls.
pub struct ReportData {
    pub drive: DriveSpec,
    pub chi: f64,
    pub q_factor: Option<f64>,
    pub gamma_r: f64,
    pub fidelity: Option<f64>,
    pub budget: ReadoutBudget,
    pub constraints: ConstraintReport,
}

pub fn build_report(config: &RunConfig) -> anyhow::Result<ReportData> {
    let device = &config.device;
    let resonant_state = match config.drive_mode {
        DriveMode::GroundResonant => QubitState::Ground,
        _ => QubitState::Excited,
    };
    let epsilon =
        drive_for_target_nbar(device, config.target_nbar, resonant_state, config.drive_mode)?;
    let drive = DriveSpec::new(config.drive_mode, epsilon);
    let gamma_r = device.gamma_r(config.target_nbar, false)?;
    let n_total = total_photons_steady(config.target_nbar, device.kappa, config.duration);
    let constraints = check_constraints_with_photons(
        device,
        config.duration,
        config.target_nbar,
        n_total,
        PhotonCountSource::SteadyProduct,
        &config.margins,
    )?;
    Ok(ReportData {
        drive,
        chi: device.chi(),
        q_factor: device.quality_factor().ok(),
        gamma_r,
        fidelity: fidelity(gamma_r, config.duration).ok(),
        budget: ReadoutBudget::steady(device, &drive, config.target_nbar, config.duration)?,
        constraints,
    })
}

pub fn write_text(
    config: &RunConfig,
    data: &ReportData,
    sort_by_severity: bool,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    let device = &config.device;
    writeln!(out, "device")?;
    writeln!(
        out,
        "  omega_r/2pi        = {} GHz",
        sci(angular_to_ghz(device.omega_r))
    )?;
    writeln!(
        out,
        "  omega_q/2pi        = {} GHz",
        sci(angular_to_ghz(device.omega_q))
    )?;
    writeln!(
        out,
        "  g/2pi              = {} MHz",
        sci(angular_to_mhz(device.g))
    )?;
    writeln!(out, "  kappa              = {} 1/s", sci(device.kappa))?;
    writeln!(out, "  n_bath             = {}", sci(device.n_bath))?;
    writeln!(out, "  impedance          = {} ohm", sci(device.impedance))?;
    writeln!(out, "derived")?;
    writeln!(out, "  chi/2pi            = {} MHz", sci(angular_to_mhz(data.chi)))?;
    writeln!(
        out,
        "  detuning/2pi       = {} GHz",
        sci(angular_to_ghz(device.detuning()))
    )?;
    match data.q_factor {
        Some(q) => writeln!(out, "  quality factor     = {}", sci(q))?,
        None => writeln!(out, "  quality factor     = infinite (kappa = 0)")?,
    }
    writeln!(out, "  gamma_r            = {} 1/s", sci(data.gamma_r))?;
    match data.fidelity {
        Some(f) => writeln!(out, "  fidelity           = {}", sci(f))?,
        None => writeln!(
            out,
            "  fidelity           = complete decay (gamma_r * duration >= 1)"
        )?,
    }
    writeln!(out, "  n_bar              = {}", sci(data.budget.n_bar))?;
    writeln!(
        out,
        "  n_total            = {} ({})",
        sci(data.budget.n_total),
        data.constraints.source.as_str()
    )?;
    writeln!(out, "  shot noise         = {}", sci(data.budget.shot_noise))?;
    writeln!(out, "  separation         = {}", sci(data.budget.separation))?;
    writeln!(out, "  power              = {} W", sci(data.budget.power))?;
    writeln!(out, "  v_out              = {} V", sci(data.budget.voltage))?;
    writeln!(out, "constraints")?;
    for line in explain(&data.constraints, sort_by_severity) {
        writeln!(out, "  {line}")?;
    }
    writeln!(out, "overall: {}", data.constraints.overall.as_str())?;
    Ok(())
}

#[derive(Serialize)]
struct DerivedRecord<'a> {
    record: &'a str,
    chi_rad_per_s: f64,
    chi_over_2pi_mhz: f64,
    omega_qr_rad_per_s: f64,
    q_factor: Option<f64>,
    gamma_r_per_s: f64,
    fidelity: Option<f64>,
    n_bar: f64,
    n_total: f64,
    photon_source: &'a str,
    shot_noise: f64,
    separation: f64,
    power_w: f64,
    v_out_v: f64,
}

#[derive(Serialize)]
struct ConstraintRecord<'a> {
    record: &'a str,
    id: &'a str,
    tag: &'a str,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    kind: &'a str,
    margin: Option<f64>,
    status: &'a str,
}

#[derive(Serialize)]
struct OverallRecord<'a> {
    record: &'a str,
    status: &'a str,
    exit_code: i32,
}

pub fn write_records(
    config: &RunConfig,
    data: &ReportData,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let derived = DerivedRecord {
        record: "derived",
        chi_rad_per_s: data.chi,
        chi_over_2pi_mhz: angular_to_mhz(data.chi),
        omega_qr_rad_per_s: config.device.detuning(),
        q_factor: data.q_factor,
        gamma_r_per_s: data.gamma_r,
        fidelity: data.fidelity,
        n_bar: data.budget.n_bar,
        n_total: data.budget.n_total,
        photon_source: data.constraints.source.as_str(),
        shot_noise: data.budget.shot_noise,
        separation: data.budget.separation,
        power_w: data.budget.power,
        v_out_v: data.budget.voltage,
    };
    writeln!(out, "{}", serde_json::to_string(&derived)?)?;
    for c in &data.constraints.constraints {
        let (kind, margin) = match c.kind {
            ConstraintKind::Strong { margin } => ("strong", Some(margin)),
            ConstraintKind::Weak => ("weak", None),
        };
        let record = ConstraintRecord {
            record: "constraint",
            id: c.id,
            tag: c.tag,
            lhs: c.lhs,
            rhs: c.rhs,
            ratio: c.ratio,
            kind,
            margin,
            status: c.status.as_str(),
        };
        writeln!(out, "{}", serde_json::to_string(&record)?)?;
    }
    let overall = OverallRecord {
        record: "overall",
        status: data.constraints.overall.as_str(),
        exit_code: exit_code_for(data.constraints.overall),
    };
    writeln!(out, "{}", serde_json::to_string(&overall)?)?;
    Ok(())
}

/// Run the subcommand; returns the process exit code.
pub fn run_report(
    config: &RunConfig,
    format: &str,
    sort_by_severity: bool,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let data = build_report(config)?;
    match format {
        "records" => write_records(config, &data, out)?,
        _ => write_text(config, &data, sort_by_severity, out)?,
    }
    Ok(exit_code_for(data.constraints.overall))
}
