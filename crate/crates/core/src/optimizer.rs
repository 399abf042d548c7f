//! Parameter sweeps and constrained design search.
//!
//! A [`DesignSpace`] fixes a base device/drive/window configuration and
//! frees a subset of {κ, g, ω_qr, window, n̄} inside inclusive bounds.
//! [`sweep`] evaluates the model and the feasibility gate on a full grid;
//! [`optimize`] runs a coarse grid scan followed by a bounded Nelder–Mead
//! refinement with a deterministic penalty for constraint violations. There
//! is no randomness anywhere: identical inputs produce bit-identical audit
//! trails.

use crate::error::{Error, Result};
use crate::feasibility::{
    check_constraints_with_photons, ConstraintReport, ConstraintStatus, Margins,
    PhotonCountSource, BOUNDARY_SLACK,
};
use crate::model::{relaxation_rate, DeviceParams};
use crate::readout::{output_power_voltage, total_photons_steady};

/// Default cap on the total number of grid points in a sweep.
pub const DEFAULT_GRID_CAP: usize = 1_000_000;

/// Penalty weight applied per unit of constraint violation.
const PENALTY_WEIGHT: f64 = 1e3;

/// Simplex convergence threshold, relative to the bounds span per axis.
const SIMPLEX_TOLERANCE: f64 = 1e-6;

const MAX_ITERATIONS: usize = 500;

/// A design variable that may be freed.
///
/// The discriminant order is the canonical axis order used for grids,
/// points, and rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FreeVar {
    Kappa,
    Coupling,
    Detuning,
    Window,
    NBar,
}

impl FreeVar {
    pub fn name(self) -> &'static str {
        match self {
            FreeVar::Kappa => "kappa",
            FreeVar::Coupling => "g",
            FreeVar::Detuning => "omega_qr",
            FreeVar::Window => "window",
            FreeVar::NBar => "n_bar",
        }
    }

    /// Rates and frequencies default to log-spaced grids; counts and
    /// durations to linear ones.
    fn default_log(self) -> bool {
        matches!(self, FreeVar::Kappa | FreeVar::Coupling | FreeVar::Detuning)
    }
}

/// One freed axis with inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarSpec {
    pub var: FreeVar,
    pub lo: f64,
    pub hi: f64,
    pub log_scale: bool,
}

impl VarSpec {
    pub fn new(var: FreeVar, lo: f64, hi: f64) -> Result<Self> {
        Self::with_scale(var, lo, hi, var.default_log())
    }

    pub fn with_scale(var: FreeVar, lo: f64, hi: f64, log_scale: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: format!("{}: need finite lo <= hi, got [{lo}, {hi}]", var.name()),
            });
        }
        if log_scale && lo <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: format!("{}: log-scale bounds must be positive", var.name()),
            });
        }
        let positive_floor = match var {
            FreeVar::Window => 0.0,
            FreeVar::Detuning => f64::NEG_INFINITY,
            _ => -f64::EPSILON,
        };
        if var == FreeVar::Window && lo <= positive_floor {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: "window bounds must be positive".into(),
            });
        }
        if var == FreeVar::Detuning && lo <= 0.0 && hi >= 0.0 {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: "detuning bounds must exclude zero".into(),
            });
        }
        if (var == FreeVar::Kappa || var == FreeVar::Coupling || var == FreeVar::NBar) && lo < 0.0
        {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: format!("{} bounds must be nonnegative", var.name()),
            });
        }
        Ok(Self {
            var,
            lo,
            hi,
            log_scale,
        })
    }

    fn grid(&self, n: usize) -> Vec<f64> {
        if n == 1 || self.lo == self.hi {
            return vec![self.lo; n.max(1)];
        }
        (0..n)
            .map(|k| {
                let f = k as f64 / (n - 1) as f64;
                if self.log_scale {
                    (self.lo.ln() + f * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + f * (self.hi - self.lo)
                }
            })
            .collect()
    }
}

/// Fixed base configuration plus the freed axes.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpace {
    pub device: DeviceParams,
    pub window: f64,
    pub n_bar: f64,
    pub free: Vec<VarSpec>,
    pub grid_cap: usize,
}

impl DesignSpace {
    pub fn new(device: DeviceParams, window: f64, n_bar: f64, free: Vec<VarSpec>) -> Result<Self> {
        if !(window > 0.0) || n_bar < 0.0 {
            return Err(Error::InvalidParameter {
                name: "design_space",
                reason: "window must be positive and n_bar nonnegative".into(),
            });
        }
        let mut free = free;
        free.sort_by_key(|v| v.var);
        for pair in free.windows(2) {
            if pair[0].var == pair[1].var {
                return Err(Error::InvalidParameter {
                    name: "design_space",
                    reason: format!("variable {} freed twice", pair[0].var.name()),
                });
            }
        }
        Ok(Self {
            device,
            window,
            n_bar,
            free,
            grid_cap: DEFAULT_GRID_CAP,
        })
    }

    pub fn dimension(&self) -> usize {
        self.free.len()
    }

    /// Apply a point in free-axis order to the base configuration.
    fn instantiate(&self, point: &[f64]) -> Result<(DeviceParams, f64, f64)> {
        let mut kappa = self.device.kappa;
        let mut g = self.device.g;
        let mut omega_q = self.device.omega_q;
        let mut window = self.window;
        let mut n_bar = self.n_bar;
        for (spec, &x) in self.free.iter().zip(point) {
            match spec.var {
                FreeVar::Kappa => kappa = x,
                FreeVar::Coupling => g = x,
                FreeVar::Detuning => omega_q = self.device.omega_r + x,
                FreeVar::Window => window = x,
                FreeVar::NBar => n_bar = x,
            }
        }
        let device = DeviceParams::new(
            self.device.omega_r,
            omega_q,
            g,
            kappa,
            self.device.n_bath,
            self.device.impedance,
        )?;
        Ok((device, window, n_bar))
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Coordinates along the freed axes, in canonical order.
    pub point: Vec<f64>,
    pub kappa: f64,
    pub g: f64,
    pub omega_qr: f64,
    pub window: f64,
    pub n_bar: f64,
    pub chi: f64,
    pub q_factor: f64,
    pub gamma_r: f64,
    /// 1 − γ_r·window; may fall below zero outside the feasible region.
    pub fidelity: f64,
    pub n_total: f64,
    pub v_out: f64,
    pub ratios: [f64; 8],
    pub overall: ConstraintStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

fn evaluate_point(
    space: &DesignSpace,
    point: &[f64],
    margins: &Margins,
) -> Result<(SweepRow, ConstraintReport)> {
    let (device, window, n_bar) = space.instantiate(point)?;
    let n_total = total_photons_steady(n_bar, device.kappa, window);
    let report = check_constraints_with_photons(
        &device,
        window,
        n_bar,
        n_total,
        PhotonCountSource::SteadyProduct,
        margins,
    )?;
    let gamma_r = relaxation_rate(device.chi(), device.detuning(), device.kappa, n_bar, false)?;
    let q_factor = if device.kappa > 0.0 {
        device.omega_r / device.kappa
    } else {
        f64::INFINITY
    };
    let (_, v_out) = output_power_voltage(n_bar, device.kappa, device.omega_r, device.impedance)?;
    let mut ratios = [0.0; 8];
    for (slot, c) in ratios.iter_mut().zip(&report.constraints) {
        *slot = c.ratio;
    }
    let row = SweepRow {
        point: point.to_vec(),
        kappa: device.kappa,
        g: device.g,
        omega_qr: device.detuning(),
        window,
        n_bar,
        chi: device.chi(),
        q_factor,
        gamma_r,
        fidelity: 1.0 - gamma_r * window,
        n_total,
        v_out,
        ratios,
        overall: report.overall,
    };
    Ok((row, report))
}

/// Evaluate every grid point, `points_per_axis` per freed axis.
///
/// Rows are ordered by mixed-radix grid index with the last canonical axis
/// varying fastest. With no free variables the result is the single base
/// point.
pub fn sweep(space: &DesignSpace, points_per_axis: usize, margins: &Margins) -> Result<SweepResult> {
    let dims: Vec<usize> = space
        .free
        .iter()
        .map(|_| points_per_axis.max(1))
        .collect();
    let total: usize = dims.iter().product::<usize>().max(1);
    if total > space.grid_cap {
        return Err(Error::GridCapExceeded {
            size: total,
            cap: space.grid_cap,
        });
    }
    let axes: Vec<Vec<f64>> = space
        .free
        .iter()
        .map(|v| v.grid(points_per_axis.max(1)))
        .collect();

    let mut rows = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut point = vec![0.0; axes.len()];
        for k in (0..axes.len()).rev() {
            point[k] = axes[k][rem % dims[k]];
            rem /= dims[k];
        }
        let (row, _) = evaluate_point(space, &point, margins)?;
        rows.push(row);
    }
    Ok(SweepResult { rows })
}

/// Scalar objectives; all are minimized internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MinWindow,
    MaxFidelity,
    MaxNTotal,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::MinWindow => "min-window",
            Objective::MaxFidelity => "max-fidelity",
            Objective::MaxNTotal => "max-n-total",
        }
    }

    fn raw(self, row: &SweepRow) -> f64 {
        match self {
            Objective::MinWindow => row.window,
            Objective::MaxFidelity => -row.fidelity,
            Objective::MaxNTotal => -row.n_total,
        }
    }

    /// Report the minimized value in user orientation.
    pub fn user_value(self, minimized: f64) -> f64 {
        match self {
            Objective::MinWindow => minimized,
            _ => -minimized,
        }
    }
}

/// Violation beyond the failure boundary, summed over constraints.
fn total_violation(ratios: &[f64; 8]) -> f64 {
    let limit = 1.0 * (1.0 + BOUNDARY_SLACK);
    ratios.iter().map(|r| (r - limit).max(0.0)).sum()
}

/// Search outcome. `feasible` is false when not even the coarse grid found a
/// point clearing every constraint; the least-violating point is returned in
/// that case.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub best: SweepRow,
    pub report: ConstraintReport,
    /// Minimized objective at `best` (user orientation via [`Objective::user_value`]).
    pub objective_value: f64,
    /// Best feasible objective seen during the coarse phase.
    pub coarse_objective: f64,
    pub feasible: bool,
    pub iterations: usize,
    /// One line per coarse/simplex step; bit-identical across reruns.
    pub trail: Vec<String>,
}

struct Tracker<'a> {
    space: &'a DesignSpace,
    margins: &'a Margins,
    objective: Objective,
    evaluations: usize,
    best_feasible: Option<(f64, SweepRow, ConstraintReport)>,
    least_violating: Option<(f64, SweepRow, ConstraintReport)>,
}

impl<'a> Tracker<'a> {
    /// Penalized objective: raw objective plus 10³ per unit of constraint
    /// violation past the failure boundary. Exactly the raw objective at
    /// feasible points.
    fn penalized(&mut self, point: &[f64]) -> Result<f64> {
        let (row, report) = evaluate_point(self.space, point, self.margins)?;
        self.evaluations += 1;
        let raw = self.objective.raw(&row);
        let violation = total_violation(&row.ratios);
        let value = raw + PENALTY_WEIGHT * violation;
        if row.overall != ConstraintStatus::Fail {
            if self
                .best_feasible
                .as_ref()
                .is_none_or(|(best, _, _)| raw < *best)
            {
                self.best_feasible = Some((raw, row, report));
            }
        } else if self
            .least_violating
            .as_ref()
            .is_none_or(|(v, _, _)| violation < *v)
        {
            self.least_violating = Some((violation, row, report));
        }
        Ok(value)
    }
}

fn clip(point: &mut [f64], free: &[VarSpec]) {
    for (x, spec) in point.iter_mut().zip(free) {
        *x = x.clamp(spec.lo, spec.hi);
    }
}

fn format_point(point: &[f64]) -> String {
    let coords: Vec<String> = point.iter().map(|x| format!("{x:.12e}")).collect();
    format!("[{}]", coords.join(", "))
}

/// Two-phase constrained search: coarse grid scan, then bounded Nelder–Mead
/// refinement of the best feasible point.
///
/// The returned point never violates a hard (weak-kind) constraint; strong
/// constraints may be marginal and are reported as such in the outcome's
/// constraint report.
pub fn optimize(
    space: &DesignSpace,
    objective: Objective,
    margins: &Margins,
    coarse_points: usize,
) -> Result<OptimizeOutcome> {
    let mut tracker = Tracker {
        space,
        margins,
        objective,
        evaluations: 0,
        best_feasible: None,
        least_violating: None,
    };
    let mut trail = Vec::new();

    // Coarse scan (a single evaluation when nothing is free).
    let coarse = sweep_points(space, coarse_points.max(1));
    for point in &coarse {
        let value = tracker.penalized(point)?;
        trail.push(format!(
            "coarse f={value:.12e} x={}",
            format_point(point)
        ));
    }
    let coarse_objective = match &tracker.best_feasible {
        Some((raw, _, _)) => *raw,
        None => {
            let (violation, row, report) = tracker
                .least_violating
                .clone()
                .expect("grid evaluated at least one point");
            trail.push(format!("infeasible min-violation={violation:.12e}"));
            return Ok(OptimizeOutcome {
                objective_value: objective.user_value(objective.raw(&row)),
                best: row,
                report,
                coarse_objective: f64::INFINITY,
                feasible: false,
                iterations: 0,
                trail,
            });
        }
    };
    trail.push(format!("coarse-best f={coarse_objective:.12e}"));

    let dim = space.dimension();
    let mut iterations = 0;
    if dim > 0 {
        // Initial simplex: best coarse point plus a 5%-of-span step per
        // axis, reflected inward at the bounds.
        let x0 = tracker.best_feasible.as_ref().unwrap().1.point.clone();
        let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
        let f0 = tracker.penalized(&x0)?;
        simplex.push((f0, x0.clone()));
        for k in 0..dim {
            let spec = &space.free[k];
            let span = spec.hi - spec.lo;
            let step = if span == 0.0 { 0.0 } else { 0.05 * span };
            let mut x = x0.clone();
            x[k] = if x[k] + step <= spec.hi {
                x[k] + step
            } else {
                x[k] - step
            };
            clip(&mut x, &space.free);
            let f = tracker.penalized(&x)?;
            simplex.push((f, x));
        }

        let spans: Vec<f64> = space.free.iter().map(|v| (v.hi - v.lo).max(0.0)).collect();
        while iterations < MAX_ITERATIONS {
            simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            // Relative simplex diameter against the bounds span.
            let mut diameter = 0.0_f64;
            for k in 0..dim {
                if spans[k] == 0.0 {
                    continue;
                }
                let lo = simplex.iter().map(|(_, x)| x[k]).fold(f64::INFINITY, f64::min);
                let hi = simplex
                    .iter()
                    .map(|(_, x)| x[k])
                    .fold(f64::NEG_INFINITY, f64::max);
                diameter = diameter.max((hi - lo) / spans[k]);
            }
            if diameter < SIMPLEX_TOLERANCE {
                trail.push(format!("converged diameter={diameter:.12e}"));
                break;
            }
            iterations += 1;

            let worst = simplex[dim].clone();
            let mut centroid = vec![0.0; dim];
            for (_, x) in &simplex[..dim] {
                for k in 0..dim {
                    centroid[k] += x[k] / dim as f64;
                }
            }
            let mut reflected: Vec<f64> = centroid
                .iter()
                .zip(&worst.1)
                .map(|(c, w)| c + (c - w))
                .collect();
            clip(&mut reflected, &space.free);
            let f_reflected = tracker.penalized(&reflected)?;

            let move_name;
            if f_reflected < simplex[0].0 {
                let mut expanded: Vec<f64> = centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + 2.0 * (r - c))
                    .collect();
                clip(&mut expanded, &space.free);
                let f_expanded = tracker.penalized(&expanded)?;
                if f_expanded < f_reflected {
                    simplex[dim] = (f_expanded, expanded);
                    move_name = "expand";
                } else {
                    simplex[dim] = (f_reflected, reflected);
                    move_name = "reflect";
                }
            } else if f_reflected < simplex[dim - 1].0 {
                simplex[dim] = (f_reflected, reflected);
                move_name = "reflect";
            } else {
                let toward = if f_reflected < worst.0 {
                    &reflected
                } else {
                    &worst.1
                };
                let mut contracted: Vec<f64> = centroid
                    .iter()
                    .zip(toward)
                    .map(|(c, w)| c + 0.5 * (w - c))
                    .collect();
                clip(&mut contracted, &space.free);
                let f_contracted = tracker.penalized(&contracted)?;
                if f_contracted < worst.0.min(f_reflected) {
                    simplex[dim] = (f_contracted, contracted);
                    move_name = "contract";
                } else {
                    // Shrink everything toward the best vertex.
                    let best = simplex[0].1.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let mut x: Vec<f64> = best
                            .iter()
                            .zip(&vertex.1)
                            .map(|(b, v)| b + 0.5 * (v - b))
                            .collect();
                        clip(&mut x, &space.free);
                        let f = tracker.penalized(&x)?;
                        *vertex = (f, x);
                    }
                    move_name = "shrink";
                }
            }
            simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            trail.push(format!(
                "it={iterations:03} move={move_name} f={:.12e} x={}",
                simplex[0].0,
                format_point(&simplex[0].1)
            ));
        }
    }

    let (raw, row, report) = tracker.best_feasible.expect("feasible point tracked");
    trail.push(format!("best f={raw:.12e} x={}", format_point(&row.point)));
    Ok(OptimizeOutcome {
        objective_value: objective.user_value(raw),
        best: row,
        report,
        coarse_objective,
        feasible: true,
        iterations,
        trail,
    })
}

/// Coarse-phase grid points in sweep order.
fn sweep_points(space: &DesignSpace, points_per_axis: usize) -> Vec<Vec<f64>> {
    let dims: Vec<usize> = space.free.iter().map(|_| points_per_axis).collect();
    let total: usize = dims.iter().product::<usize>().max(1);
    let axes: Vec<Vec<f64>> = space
        .free
        .iter()
        .map(|v| v.grid(points_per_axis))
        .collect();
    (0..total)
        .map(|index| {
            let mut rem = index;
            let mut point = vec![0.0; axes.len()];
            for k in (0..axes.len()).rev() {
                point[k] = axes[k][rem % dims[k]];
                rem /= dims[k];
            }
            point
        })
        .collect()
}
