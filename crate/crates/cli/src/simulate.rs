//! The `simulate` subcommand: pre-flip steady state, instantaneous flip at
//! t₀, and the post-flip transient, as a CSV time series.

use std::io::Write;

use num_complex::Complex64;

use readout_core::dynamics::{
    integrate_field_ode, required_field_step, steady_state_field, transient_field, DriveSpec,
    SigmaSchedule, TimeGrid,
};
use readout_core::model::QubitState;
use readout_core::readout::drive_for_target_nbar;

use crate::config::RunConfig;
use crate::fmt::{csv_line, sci};

pub const CSV_HEADER: &str = "t_s,re_a,im_a,n_cavity,flux_out_per_s,sigma_z";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    ClosedForm,
    Ode,
}

impl SimMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "closed-form" => Some(SimMode::ClosedForm),
            "ode" => Some(SimMode::Ode),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimRow {
    pub t: f64,
    pub a: Complex64,
    pub sigma_z: f64,
}

/// Compute the trajectory rows. The flip sits exactly on a grid node; the
/// row at t₀ carries the post-flip σ_z with the still-unmoved field.
pub fn simulate_rows(
    config: &RunConfig,
    mode: SimMode,
    dt_override: Option<f64>,
) -> anyhow::Result<Vec<SimRow>> {
    if config.duration == 0.0 {
        return Ok(Vec::new());
    }
    let device = &config.device;
    let epsilon = drive_for_target_nbar(
        device,
        config.target_nbar,
        QubitState::Excited,
        config.drive_mode,
    )?;
    let drive = DriveSpec::new(config.drive_mode, epsilon);
    let h_max = required_field_step(device, &drive);
    let h_target = match dt_override {
        Some(dt) => {
            if dt > h_max {
                return Err(readout_core::Error::StepTooLarge {
                    required: h_max,
                    got: dt,
                }
                .into());
            }
            dt
        }
        None => h_max / 2.0,
    };
    let t0 = config.t0;
    let ground = steady_state_field(device, &drive, QubitState::Ground)?;

    let mut rows = Vec::new();
    if t0 > 0.0 {
        // Pre-flip segment: the detuned steady state is a fixed point of
        // the field equation, so both modes emit the constant value.
        let n_pre = (t0 / h_target).ceil() as usize;
        let h = t0 / n_pre as f64;
        for k in 0..n_pre {
            rows.push(SimRow {
                t: k as f64 * h,
                a: ground,
                sigma_z: QubitState::Ground.sigma_z(),
            });
        }
    }

    let n_post = (config.duration / h_target).ceil().max(1.0) as usize;
    match mode {
        SimMode::ClosedForm => {
            let h = config.duration / n_post as f64;
            for k in 0..=n_post {
                let t_rel = k as f64 * h;
                rows.push(SimRow {
                    t: t0 + t_rel,
                    a: transient_field(device, epsilon, t_rel)?,
                    sigma_z: QubitState::Excited.sigma_z(),
                });
            }
        }
        SimMode::Ode => {
            let grid = TimeGrid::new(t0, t0 + config.duration, n_post)?;
            let schedule = SigmaSchedule::FlipAt {
                t0,
                before: QubitState::Ground,
                after: QubitState::Excited,
            };
            let traj =
                integrate_field_ode(device, &drive, &schedule, |_| epsilon, &grid, None)?;
            for (&t, &a) in traj.times.iter().zip(&traj.amplitude) {
                rows.push(SimRow {
                    t,
                    a,
                    sigma_z: QubitState::Excited.sigma_z(),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_csv(config: &RunConfig, rows: &[SimRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let device = &config.device;
    for row in rows {
        let n_cavity = row.a.norm_sqr() + device.n_bath;
        let flux = device.kappa / 2.0 * n_cavity;
        writeln!(
            out,
            "{}",
            csv_line(&[
                sci(row.t),
                sci(row.a.re),
                sci(row.a.im),
                sci(n_cavity),
                sci(flux),
                sci(row.sigma_z),
            ])
        )?;
    }
    Ok(())
}

pub fn run_simulate(
    config: &RunConfig,
    mode: SimMode,
    dt_override: Option<f64>,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let rows = simulate_rows(config, mode, dt_override)?;
    write_csv(config, &rows, out)?;
    Ok(0)
}

/// Series for the optional plot: cavity photon number over time.
pub fn photon_series(config: &RunConfig, rows: &[SimRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .map(|r| (r.t, r.a.norm_sqr() + config.device.n_bath))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn case_i(t0: f64) -> RunConfig {
        let text = format!(
            r#"
[device]
omega_r_over_2pi_ghz = 6.5
omega_q_over_2pi_ghz = 8.0
g_over_2pi_mhz = 75.0
kappa_per_s = 5.0e7

[drive]
target_nbar = 10.0

[measurement]
duration_s = 4.0e-8
t0_s = {t0}
"#
        );
        RunConfig::parse(&text).unwrap()
    }

    #[test]
    fn closed_form_final_row() {
        let config = case_i(2e-8);
        let rows = simulate_rows(&config, SimMode::ClosedForm, None).unwrap();
        let last = rows.last().unwrap();
        assert_relative_eq!(last.t, 6e-8, max_relative = 1e-12);
        assert_relative_eq!(last.a.norm_sqr(), 5.3145, max_relative = 1e-3);
        assert_eq!(last.sigma_z, -1.0);
        // Pre-flip rows hold the detuned steady level.
        assert_relative_eq!(rows[0].a.norm_sqr(), 2.196, max_relative = 1e-3);
        assert_eq!(rows[0].sigma_z, 1.0);
    }

    #[test]
    fn zero_duration_yields_no_rows() {
        let mut config = case_i(2e-8);
        config.duration = 0.0;
        let rows = simulate_rows(&config, SimMode::ClosedForm, None).unwrap();
        assert!(rows.is_empty());
        let mut buf = Vec::new();
        write_csv(&config, &rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn modes_agree_pointwise() {
        let config = case_i(1e-8);
        let closed = simulate_rows(&config, SimMode::ClosedForm, None).unwrap();
        let ode = simulate_rows(&config, SimMode::Ode, None).unwrap();
        assert_eq!(closed.len(), ode.len());
        for (c, o) in closed.iter().zip(&ode) {
            assert_relative_eq!(c.t, o.t, max_relative = 1e-12);
            assert!(
                (c.a - o.a).norm() <= 1e-6 * c.a.norm(),
                "at t = {:.3e}: {} vs {}",
                c.t,
                c.a,
                o.a
            );
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let config = case_i(0.0);
        let err = simulate_rows(&config, SimMode::Ode, Some(1e-8)).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("too large"), "message: {msg}");
    }
}
