//! The inequality gate for nondemolition single-shot dispersive readout.
//!
//! Eight dimensionless constraints, evaluated in a fixed order. Each is
//! oriented so that ratio = lhs/rhs ≤ 1 means satisfied:
//!
//! | id | tag                  | lhs            | rhs          | kind   |
//! |----|----------------------|----------------|--------------|--------|
//! | C1 | frequency-proximity  | |ω_qr|         | min(ω_q,ω_r) | strong |
//! | C2 | dispersive-regime    | g·√n̄          | |ω_qr|       | strong |
//! | C3 | photon-count         | 1              | n_T          | strong |
//! | C4 | backaction-budget    | n_T            | ω_qr/(4χ)    | strong |
//! | C5 | line-resolution      | κ/2            | 2|χ|         | weak   |
//! | C6 | bandwidth-window     | 1/window       | κ/2          | weak   |
//! | C7 | dispersive-bandwidth | κ/2            | |ω_qr|       | strong |
//! | C8 | state-survival       | γ_r·window     | 1            | strong |
//!
//! "Strong" constraints encode a ≪ relation: they pass only with a margin to
//! spare (ratio ≤ margin), are marginal up to the boundary, and fail beyond
//! it. "Weak" constraints are hard thresholds with a boundary-inclusive
//! pass. γ_r in C8 uses the photon-number-only form (the vacuum term is
//! negligible at the multi-photon counts C3 demands).

use crate::dynamics::{steady_state_field, DriveMode, DriveSpec};
use crate::error::{Error, Result};
use crate::model::{relaxation_rate, DeviceParams, QubitState};
use crate::readout::total_photons_steady;

/// Relative slack for boundary comparisons, so a parameter set sitting
/// exactly on a threshold is not failed by floating-point rounding.
pub const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintStatus {
    Pass,
    Marginal,
    Fail,
}

impl ConstraintStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintStatus::Pass => "PASS",
            ConstraintStatus::Marginal => "MARGINAL",
            ConstraintStatus::Fail => "FAIL",
        }
    }

    fn severity(self) -> u8 {
        match self {
            ConstraintStatus::Fail => 0,
            ConstraintStatus::Marginal => 1,
            ConstraintStatus::Pass => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    /// A ≪ relation: pass below `margin`, marginal up to 1, fail beyond.
    Strong { margin: f64 },
    /// A hard threshold: pass iff ratio ≤ 1 (boundary inclusive).
    Weak,
}

/// One evaluated inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub id: &'static str,
    pub tag: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub kind: ConstraintKind,
    pub status: ConstraintStatus,
}

fn within(ratio: f64, bound: f64) -> bool {
    ratio <= bound * (1.0 + BOUNDARY_SLACK)
}

/// Status from ratio and kind alone.
pub fn status_for(ratio: f64, kind: ConstraintKind) -> ConstraintStatus {
    match kind {
        ConstraintKind::Strong { margin } => {
            if within(ratio, margin) {
                ConstraintStatus::Pass
            } else if within(ratio, 1.0) {
                ConstraintStatus::Marginal
            } else {
                ConstraintStatus::Fail
            }
        }
        ConstraintKind::Weak => {
            if within(ratio, 1.0) {
                ConstraintStatus::Pass
            } else {
                ConstraintStatus::Fail
            }
        }
    }
}

impl Constraint {
    fn evaluate(
        id: &'static str,
        tag: &'static str,
        lhs: f64,
        rhs: f64,
        kind: ConstraintKind,
    ) -> Self {
        // lhs = 0 is satisfied regardless of rhs; a positive lhs against a
        // zero rhs is an infinite violation.
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self {
            id,
            tag,
            lhs,
            rhs,
            ratio,
            kind,
            status: status_for(ratio, kind),
        }
    }
}

/// Pass margins for the strong constraints, overridable per constraint.
///
/// The default margin is 0.2; C1 defaults to 0.5 because workable designs
/// put the detuning at a sizable fraction of the carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub default_margin: f64,
    /// Index k overrides C(k+1).
    pub overrides: [Option<f64>; 8],
}

impl Default for Margins {
    fn default() -> Self {
        let mut overrides = [None; 8];
        overrides[0] = Some(0.5);
        Self {
            default_margin: 0.2,
            overrides,
        }
    }
}

impl Margins {
    /// Margin for constraint C`index+1`.
    pub fn for_constraint(&self, index: usize) -> f64 {
        self.overrides[index].unwrap_or(self.default_margin)
    }
}

/// Where the emitted-photon count in C3/C4 came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonCountSource {
    /// n_T = (κ/2)·window·n̄ with a steady n̄.
    SteadyProduct,
    /// Trapezoidal average over a supplied trajectory.
    Trajectory,
}

impl PhotonCountSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PhotonCountSource::SteadyProduct => "steady-product",
            PhotonCountSource::Trajectory => "trajectory",
        }
    }
}

/// The full gate outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub constraints: Vec<Constraint>,
    pub overall: ConstraintStatus,
    pub n_bar: f64,
    pub n_total: f64,
    pub source: PhotonCountSource,
}

impl ConstraintReport {
    fn from_constraints(
        constraints: Vec<Constraint>,
        n_bar: f64,
        n_total: f64,
        source: PhotonCountSource,
    ) -> Self {
        let overall = constraints
            .iter()
            .map(|c| c.status)
            .fold(ConstraintStatus::Pass, |acc, s| {
                if s.severity() < acc.severity() {
                    s
                } else {
                    acc
                }
            });
        Self {
            constraints,
            overall,
            n_bar,
            n_total,
            source,
        }
    }
}

/// Evaluate the gate with an explicitly supplied photon budget.
pub fn check_constraints_with_photons(
    device: &DeviceParams,
    window: f64,
    n_bar: f64,
    n_total: f64,
    source: PhotonCountSource,
    margins: &Margins,
) -> Result<ConstraintReport> {
    if !(window > 0.0) {
        return Err(Error::InvalidParameter {
            name: "window",
            reason: format!("measurement window must be positive, got {window}"),
        });
    }
    let omega_qr = device.detuning().abs();
    let chi = device.chi();
    let half_kappa = device.kappa / 2.0;
    let gamma_r = relaxation_rate(chi, device.detuning(), device.kappa, n_bar, false)?;
    let strong = |k: usize| ConstraintKind::Strong {
        margin: margins.for_constraint(k),
    };

    // ω_qr/(4χ) = ω_qr²/(4g²), positive for either detuning sign.
    let backaction_cap = if device.g > 0.0 {
        omega_qr * omega_qr / (4.0 * device.g * device.g)
    } else {
        f64::INFINITY
    };

    let constraints = vec![
        Constraint::evaluate(
            "C1",
            "frequency-proximity",
            omega_qr,
            device.omega_q.min(device.omega_r),
            strong(0),
        ),
        Constraint::evaluate(
            "C2",
            "dispersive-regime",
            device.g * n_bar.sqrt(),
            omega_qr,
            strong(1),
        ),
        Constraint::evaluate("C3", "photon-count", 1.0, n_total, strong(2)),
        Constraint::evaluate("C4", "backaction-budget", n_total, backaction_cap, strong(3)),
        Constraint::evaluate(
            "C5",
            "line-resolution",
            half_kappa,
            2.0 * chi.abs(),
            ConstraintKind::Weak,
        ),
        Constraint::evaluate(
            "C6",
            "bandwidth-window",
            1.0 / window,
            half_kappa,
            ConstraintKind::Weak,
        ),
        Constraint::evaluate("C7", "dispersive-bandwidth", half_kappa, omega_qr, strong(6)),
        Constraint::evaluate("C8", "state-survival", gamma_r * window, 1.0, strong(7)),
    ];
    Ok(ConstraintReport::from_constraints(
        constraints,
        n_bar,
        n_total,
        source,
    ))
}

/// Evaluate the gate for a calibrated drive: n̄ is the steady-state photon
/// number of the resonantly driven cavity and n_T the product formula.
pub fn check_constraints(
    device: &DeviceParams,
    drive: &DriveSpec,
    window: f64,
    margins: &Margins,
) -> Result<ConstraintReport> {
    let resonant_state = match drive.mode {
        DriveMode::GroundResonant => QubitState::Ground,
        _ => QubitState::Excited,
    };
    let n_bar = steady_state_field(device, drive, resonant_state)?.norm_sqr();
    let n_total = total_photons_steady(n_bar, device.kappa, window);
    check_constraints_with_photons(
        device,
        window,
        n_bar,
        n_total,
        PhotonCountSource::SteadyProduct,
        margins,
    )
}

/// Evaluate the gate with the photon budget measured from a trajectory:
/// n̄ is the trapezoidal time average and n_T the per-port count over the
/// trajectory window.
pub fn check_constraints_with_trajectory(
    device: &DeviceParams,
    trajectory: &crate::dynamics::FieldTrajectory,
    margins: &Margins,
) -> Result<ConstraintReport> {
    let (n_bar, n_total) = crate::readout::total_photons(trajectory, device.kappa)?;
    let window = trajectory.times[trajectory.times.len() - 1] - trajectory.times[0];
    check_constraints_with_photons(
        device,
        window,
        n_bar,
        n_total,
        PhotonCountSource::Trajectory,
        margins,
    )
}

/// One formatted line per constraint. With `sort_by_severity` the failing
/// constraints come first (then marginal, then passing), preserving id order
/// within each group.
pub fn explain(report: &ConstraintReport, sort_by_severity: bool) -> Vec<String> {
    let mut indices: Vec<usize> = (0..report.constraints.len()).collect();
    if sort_by_severity {
        indices.sort_by_key(|&i| (report.constraints[i].status.severity(), i));
    }
    indices
        .into_iter()
        .map(|i| {
            let c = &report.constraints[i];
            format!(
                "{} {:<20} lhs={:<15.8e} rhs={:<15.8e} ratio={:<15.8e} {}",
                c.id,
                c.tag,
                c.lhs,
                c.rhs,
                c.ratio,
                c.status.as_str()
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_device, reference_device_doubled};
    use crate::readout::drive_for_target_nbar;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn case_i_report() -> ConstraintReport {
        let dev = reference_device();
        check_constraints_with_photons(
            &dev,
            4e-8,
            10.0,
            10.0,
            PhotonCountSource::SteadyProduct,
            &Margins::default(),
        )
        .unwrap()
    }

    fn ratio(report: &ConstraintReport, id: &str) -> f64 {
        report
            .constraints
            .iter()
            .find(|c| c.id == id)
            .unwrap()
            .ratio
    }

    #[test]
    fn reference_design_passes() {
        let report = case_i_report();
        assert_eq!(report.overall, ConstraintStatus::Pass);
        assert_relative_eq!(ratio(&report, "C4"), 0.1, max_relative = 1e-9);
        assert_relative_eq!(ratio(&report, "C6"), 1.0, max_relative = 1e-9);
        assert_relative_eq!(ratio(&report, "C8"), 0.1, max_relative = 1e-9);
    }

    #[test]
    fn calibrated_drive_path_matches_explicit_photons() {
        let dev = reference_device();
        let eps =
            drive_for_target_nbar(&dev, 10.0, QubitState::Excited, DriveMode::ExcitedResonant)
                .unwrap();
        let drive = DriveSpec::new(DriveMode::ExcitedResonant, eps);
        let report = check_constraints(&dev, &drive, 4e-8, &Margins::default()).unwrap();
        assert_eq!(report.overall, ConstraintStatus::Pass);
        assert_relative_eq!(report.n_bar, 10.0, max_relative = 1e-12);
        assert_relative_eq!(report.n_total, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn trajectory_sourced_budget() {
        // A still-ramping transient emits fewer photons than the steady
        // product; the report records the trajectory source.
        use crate::dynamics::{transient_field, FieldTrajectory};
        use num_complex::Complex64;
        let dev = reference_device();
        let eps = Complex64::new(dev.kappa / 2.0 * 10.0_f64.sqrt(), 0.0);
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 4e-8 / 2000.0).collect();
        let amps: Vec<Complex64> = times
            .iter()
            .map(|&t| transient_field(&dev, eps, t).unwrap())
            .collect();
        let traj = FieldTrajectory::new(times, amps, 0.0).unwrap();
        let report =
            check_constraints_with_trajectory(&dev, &traj, &Margins::default()).unwrap();
        assert_eq!(report.source, PhotonCountSource::Trajectory);
        assert!(report.n_total < 10.0);
        assert_relative_eq!(report.n_total, 3.508, max_relative = 1e-3);
    }

    #[test]
    fn zero_kappa_fails_bandwidth() {
        let base = reference_device();
        let dev = DeviceParams::new(base.omega_r, base.omega_q, base.g, 0.0, 0.0, 50.0).unwrap();
        let report = check_constraints_with_photons(
            &dev,
            4e-8,
            10.0,
            0.0,
            PhotonCountSource::SteadyProduct,
            &Margins::default(),
        )
        .unwrap();
        assert_eq!(report.overall, ConstraintStatus::Fail);
        let c6 = report.constraints.iter().find(|c| c.id == "C6").unwrap();
        assert_eq!(c6.status, ConstraintStatus::Fail);
        assert!(c6.ratio.is_infinite());
    }

    #[test]
    fn reduced_coupling_loses_line_resolution() {
        // g/ω_qr lowered from 0.05 to 0.05/√2: the halved shift no longer
        // clears the cavity bandwidth and C5 tips just past its threshold.
        let base = reference_device();
        let dev = DeviceParams::new(
            base.omega_r,
            base.omega_q,
            0.05 / 2.0_f64.sqrt() * base.detuning(),
            base.kappa,
            0.0,
            50.0,
        )
        .unwrap();
        let report = check_constraints_with_photons(
            &dev,
            4e-8,
            10.0,
            10.0,
            PhotonCountSource::SteadyProduct,
            &Margins::default(),
        )
        .unwrap();
        let c5 = report.constraints.iter().find(|c| c.id == "C5").unwrap();
        assert_eq!(c5.status, ConstraintStatus::Fail);
        assert_relative_eq!(c5.ratio, 1.061, max_relative = 1e-3);
        assert_eq!(report.overall, ConstraintStatus::Fail);

        // Halving g outright is worse still: 2χ drops fourfold.
        let halved = DeviceParams::new(
            base.omega_r,
            base.omega_q,
            0.5 * base.g,
            base.kappa,
            0.0,
            50.0,
        )
        .unwrap();
        let report = check_constraints_with_photons(
            &halved,
            4e-8,
            10.0,
            10.0,
            PhotonCountSource::SteadyProduct,
            &Margins::default(),
        )
        .unwrap();
        assert_eq!(report.overall, ConstraintStatus::Fail);
        assert_relative_eq!(ratio(&report, "C5"), 2.122, max_relative = 1e-3);
    }

    #[test]
    fn doubled_frequencies_halve_line_resolution_ratio() {
        let case_i = case_i_report();
        let dev = reference_device_doubled();
        let case_ii = check_constraints_with_photons(
            &dev,
            4e-8,
            10.0,
            10.0,
            PhotonCountSource::SteadyProduct,
            &Margins::default(),
        )
        .unwrap();
        assert_relative_eq!(
            ratio(&case_ii, "C5"),
            ratio(&case_i, "C5") / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn window_moves_c6_and_c8_oppositely() {
        let dev = reference_device();
        let mut last_c6 = f64::INFINITY;
        let mut last_c8 = 0.0;
        for k in 1..=20 {
            let window = 1e-8 * k as f64;
            let n_total = total_photons_steady(10.0, dev.kappa, window);
            let report = check_constraints_with_photons(
                &dev,
                window,
                10.0,
                n_total,
                PhotonCountSource::SteadyProduct,
                &Margins::default(),
            )
            .unwrap();
            let c6 = ratio(&report, "C6");
            let c8 = ratio(&report, "C8");
            assert!(c6 <= last_c6, "C6 worsened with a longer window");
            assert!(c8 >= last_c8, "C8 improved with a longer window");
            last_c6 = c6;
            last_c8 = c8;
        }
    }

    #[test]
    fn ratios_are_scale_covariant() {
        // All eight ratios are dimensionless: scaling every rate up and the
        // window down by a common factor changes nothing.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let omega_r = rng.gen_range(1e9..1e11);
            let detuning = rng.gen_range(0.01..0.4) * omega_r;
            let g = rng.gen_range(0.001..0.1) * detuning;
            let kappa = rng.gen_range(1e5..1e9);
            let window = rng.gen_range(1e-9..1e-6);
            let n_bar = rng.gen_range(0.1..100.0);
            let scale = rng.gen_range(1e-3..1e3);

            let dev = DeviceParams::new(omega_r, omega_r + detuning, g, kappa, 0.0, 50.0).unwrap();
            let scaled = DeviceParams::new(
                omega_r * scale,
                (omega_r + detuning) * scale,
                g * scale,
                kappa * scale,
                0.0,
                50.0,
            )
            .unwrap();
            let n_total = total_photons_steady(n_bar, kappa, window);
            let n_total_scaled = total_photons_steady(n_bar, kappa * scale, window / scale);
            let margins = Margins::default();
            let a = check_constraints_with_photons(
                &dev,
                window,
                n_bar,
                n_total,
                PhotonCountSource::SteadyProduct,
                &margins,
            )
            .unwrap();
            let b = check_constraints_with_photons(
                &scaled,
                window / scale,
                n_bar,
                n_total_scaled,
                PhotonCountSource::SteadyProduct,
                &margins,
            )
            .unwrap();
            for (x, y) in a.constraints.iter().zip(&b.constraints) {
                assert_relative_eq!(x.ratio, y.ratio, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn status_is_pure_in_ratio_and_margin() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let ratio = rng.gen_range(0.0..2.0);
            let margin = rng.gen_range(0.05..0.9);
            let strong = status_for(ratio, ConstraintKind::Strong { margin });
            let expected = if ratio <= margin * (1.0 + BOUNDARY_SLACK) {
                ConstraintStatus::Pass
            } else if ratio <= 1.0 + BOUNDARY_SLACK {
                ConstraintStatus::Marginal
            } else {
                ConstraintStatus::Fail
            };
            assert_eq!(strong, expected);

            let weak = status_for(ratio, ConstraintKind::Weak);
            let expected = if ratio <= 1.0 + BOUNDARY_SLACK {
                ConstraintStatus::Pass
            } else {
                ConstraintStatus::Fail
            };
            assert_eq!(weak, expected);
        }
    }

    #[test]
    fn overall_aggregation() {
        let report = case_i_report();
        assert_eq!(report.overall, ConstraintStatus::Pass);
        // Tighten every margin to force marginal-but-not-failing statuses.
        let dev = reference_device();
        let margins = Margins {
            default_margin: 0.01,
            overrides: [None; 8],
        };
        let tight = check_constraints_with_photons(
            &dev,
            4e-8,
            10.0,
            10.0,
            PhotonCountSource::SteadyProduct,
            &margins,
        )
        .unwrap();
        assert_eq!(tight.overall, ConstraintStatus::Marginal);
    }

    #[test]
    fn explain_formatting() {
        let report = case_i_report();
        let lines = explain(&report, false);
        assert_eq!(lines.len(), 8);
        for (k, line) in lines.iter().enumerate() {
            assert!(line.starts_with(&format!("C{}", k + 1)), "line: {line}");
        }

        let empty =
            ConstraintReport::from_constraints(vec![], 0.0, 0.0, PhotonCountSource::SteadyProduct);
        assert!(explain(&empty, false).is_empty());
    }

    #[test]
    fn explain_sorts_failures_first() {
        let base = reference_device();
        let dev = DeviceParams::new(
            base.omega_r,
            base.omega_q,
            0.5 * base.g,
            base.kappa,
            0.0,
            50.0,
        )
        .unwrap();
        let report = check_constraints_with_photons(
            &dev,
            4e-8,
            10.0,
            10.0,
            PhotonCountSource::SteadyProduct,
            &Margins::default(),
        )
        .unwrap();
        let lines = explain(&report, true);
        assert!(lines[0].starts_with("C5"), "first line: {}", lines[0]);
        assert!(lines[0].ends_with("FAIL"));
    }
}
