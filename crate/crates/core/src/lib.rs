//! Design and simulation toolkit for dispersive single-shot readout of a
//! superconducting qubit through a weakly coupled transmission-line resonator.
//!
//! The library is organized around the readout chain:
//!
//! - [`model`] — device parameters, unit conventions, and the derived
//!   quantities (dispersive shift, quality factor, cavity-induced relaxation,
//!   measurement fidelity).
//! - [`dynamics`] — cavity-field and qubit-polarization evolution: closed
//!   forms for the steady and transient field, plus fixed-step RK4
//!   integrators for the semiclassical equations of motion.
//! - [`readout`] — output-side observables: transmitted field, photon flux
//!   and counts, power, voltage, and state separation.
//! - [`feasibility`] — the inequality gate that decides whether a parameter
//!   set supports a nondemolition single-shot dispersive measurement.
//! - [`optimizer`] — grid sweeps and constrained derivative-free design
//!   search over the free device/drive parameters.
//! - [`oracle`] — a brute-force Lindblad master-equation integrator on a
//!   truncated qubit ⊗ Fock space, used to validate the dispersive
//!   approximations against the full Hamiltonian.
//!
//! All frequencies are stored as angular frequencies (rad/s); decay rates are
//! plain 1/s. Helpers in [`model`] convert from the ordinary (ω/2π)
//! frequencies used in configuration files.

pub mod dynamics;
pub mod error;
pub mod feasibility;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod readout;

pub use error::Error;
pub use model::{CircuitParams, DerivedQuantities, DeviceParams, QubitState};
