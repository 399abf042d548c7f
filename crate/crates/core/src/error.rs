//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model evaluation, integration, and design search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated its domain (nonpositive, out of range, ...).
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Qubit and resonator are exactly degenerate; the dispersive shift
    /// g²/ω_qr is undefined.
    #[error("zero qubit-resonator detuning: dispersive shift undefined")]
    ZeroDetuning,

    /// κ = 0 requested where a finite linewidth is required.
    #[error("kappa = 0: {0}")]
    ZeroKappa(&'static str),

    /// Undamped, resonantly driven cavity: the steady-state amplitude
    /// diverges.
    #[error("steady-state field diverges: kappa = 0 on resonance")]
    DivergentSteadyState,

    /// γ_r·Δt ≥ 1: the excited state fully decays within the window and the
    /// linear fidelity model no longer applies.
    #[error("complete decay: gamma_r * duration = {product:.3} >= 1")]
    CompleteDecay { product: f64 },

    /// Negative time offset passed to a transient evaluated for t ≥ t₀.
    #[error("negative time offset {t} s")]
    NegativeTime { t: f64 },

    /// Integration step too coarse for the fastest retained rate.
    #[error("step {got:.3e} s too large; the fastest retained scale requires <= {required:.3e} s")]
    StepTooLarge { required: f64, got: f64 },

    /// Trajectory too short to define a measurement window.
    #[error("trajectory has {points} point(s); a window needs at least two")]
    DegenerateWindow { points: usize },

    /// Qubit polarization left [-1, 1] beyond tolerance during integration.
    #[error("sigma_z drifted to {value} at t = {t:.3e} s; model out of range")]
    SigmaOutOfRange { value: f64, t: f64 },

    /// No drive amplitude can reach the requested photon number.
    #[error("drive calibration infeasible: {0}")]
    InfeasibleDrive(&'static str),

    /// Requested sweep grid exceeds the configured cap.
    #[error("grid size {size} exceeds cap {cap}")]
    GridCapExceeded { size: usize, cap: usize },

    /// Design space has no free variable to optimize over.
    #[error("design space has no free variables")]
    EmptyDesignSpace,

    /// Fock-space truncation too small for the populated states.
    #[error("Fock truncation inadequate: top-level population {population:.2e}; retry with n_fock >= {suggested}")]
    TruncationInadequate { population: f64, suggested: usize },

    /// Density-matrix trace moved more than tolerated in one step.
    #[error("trace drifted by {drift:.2e} in one step at t = {t:.3e}; reduce dt")]
    TraceDrift { drift: f64, t: f64 },

    /// A density-matrix invariant (Hermiticity, positivity, trace) failed.
    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),

    /// Least-squares fit residual exceeded its diagnostic threshold.
    #[error("fit residual {residual:.3e} above threshold {threshold:.3e}")]
    FitResidual { residual: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
