//! Physical parameters, unit conventions, and algebraically derived
//! quantities.
//!
//! Everything downstream works in angular frequencies (rad/s). Configuration
//! files quote ordinary frequencies (ω/2π, the numbers on a spectrum
//! analyzer) for ω_r, ω_q, g and χ, and a raw 1/s rate for the cavity
//! leakage κ; the `*_to_angular` helpers convert at the boundary.
//!
//! Sign conventions: the detuning is ω_qr = ω_q − ω_r, the qubit
//! polarization σ_z is +1 in the ground state and −1 in the excited state,
//! and the resonator eigenfrequency seen by the drive is ω_r − χσ_z.

use crate::error::{Error, Result};

/// Reduced Planck constant (J·s), CODATA 2018.
pub const HBAR: f64 = 1.054571817e-34;

pub const TAU: f64 = std::f64::consts::TAU;

/// Ordinary frequency in GHz (ω/2π) to angular rad/s.
pub fn ghz_to_angular(ghz: f64) -> f64 {
    ghz * 1e9 * TAU
}

/// Angular rad/s to ordinary frequency in GHz.
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (1e9 * TAU)
}

/// Ordinary frequency in MHz (ω/2π) to angular rad/s.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    mhz * 1e6 * TAU
}

/// Angular rad/s to ordinary frequency in MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (1e6 * TAU)
}

/// Qubit polarization eigenstate.
///
/// Ground maps to σ_z = +1 and excited to σ_z = −1, matching the qubit term
/// −(ħω_q/2)σ_z of the Hamiltonian (the excited level carries the higher
/// energy). This is a fixed convention, not a configuration knob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    /// σ_z eigenvalue: +1 for ground, −1 for excited.
    pub fn sigma_z(self) -> f64 {
        match self {
            QubitState::Ground => 1.0,
            QubitState::Excited => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            QubitState::Ground => QubitState::Excited,
            QubitState::Excited => QubitState::Ground,
        }
    }
}

/// Resonator/qubit/coupling/leakage parameters, all in angular units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Resonator eigenfrequency (rad/s).
    pub omega_r: f64,
    /// Qubit transition frequency (rad/s).
    pub omega_q: f64,
    /// Qubit-resonator coupling strength (rad/s).
    pub g: f64,
    /// Cavity energy-decay rate, total over both ports (1/s). Each port of
    /// the symmetric two-sided cavity carries κ/2.
    pub kappa: f64,
    /// Thermal photon occupancy of the resonator bath (dimensionless).
    pub n_bath: f64,
    /// Output impedance R (Ω).
    pub impedance: f64,
}

impl DeviceParams {
    pub fn new(
        omega_r: f64,
        omega_q: f64,
        g: f64,
        kappa: f64,
        n_bath: f64,
        impedance: f64,
    ) -> Result<Self> {
        let positive = |name: &'static str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        let nonneg = |name: &'static str, v: f64| -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be nonnegative and finite, got {v}"),
                })
            }
        };
        positive("omega_r", omega_r)?;
        positive("omega_q", omega_q)?;
        nonneg("g", g)?;
        nonneg("kappa", kappa)?;
        nonneg("n_bath", n_bath)?;
        positive("impedance", impedance)?;
        if omega_q == omega_r {
            return Err(Error::ZeroDetuning);
        }
        Ok(Self {
            omega_r,
            omega_q,
            g,
            kappa,
            n_bath,
            impedance,
        })
    }

    /// Qubit-resonator detuning ω_qr = ω_q − ω_r (rad/s, signed).
    pub fn detuning(&self) -> f64 {
        self.omega_q - self.omega_r
    }

    /// Dispersive shift χ = g²/ω_qr (rad/s, signed).
    pub fn chi(&self) -> f64 {
        // detuning is nonzero by construction
        self.g * self.g / self.detuning()
    }

    /// g/|ω_qr|, the small parameter of the dispersive expansion.
    pub fn dispersive_ratio(&self) -> f64 {
        self.g / self.detuning().abs()
    }

    /// Resonator quality factor Q = ω_r/κ.
    pub fn quality_factor(&self) -> Result<f64> {
        quality_factor(self.omega_r, self.kappa)
    }

    /// Cavity-induced qubit relaxation rate at the given cavity photon
    /// number. See [`relaxation_rate`].
    pub fn gamma_r(&self, photon_number: f64, include_vacuum_term: bool) -> Result<f64> {
        relaxation_rate(
            self.chi(),
            self.detuning(),
            self.kappa,
            photon_number,
            include_vacuum_term,
        )
    }

    /// Bundle of the derived quantities at the given photon number.
    pub fn derived(&self, photon_number: f64, include_vacuum_term: bool) -> Result<DerivedQuantities> {
        Ok(DerivedQuantities {
            chi: self.chi(),
            omega_qr: self.detuning(),
            q_factor: self.quality_factor()?,
            gamma_r: self.gamma_r(photon_number, include_vacuum_term)?,
        })
    }
}

/// Circuit-element values that determine the coupling strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Coupling capacitance C_g (F). Zero means no coupling capacitor.
    pub c_g: f64,
    /// Capacitance shunting the junction, C_J (F).
    pub c_j: f64,
    /// Transmission-line length L (m).
    pub line_length: f64,
    /// Line capacitance per unit length c (F/m).
    pub line_cap_per_len: f64,
}

impl CircuitParams {
    pub fn new(c_g: f64, c_j: f64, line_length: f64, line_cap_per_len: f64) -> Result<Self> {
        if !(c_g >= 0.0 && c_g.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "c_g",
                reason: format!("must be nonnegative and finite, got {c_g}"),
            });
        }
        for (name, v) in [
            ("c_j", c_j),
            ("line_length", line_length),
            ("line_cap_per_len", line_cap_per_len),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: match name {
                        "c_j" => "c_j",
                        "line_length" => "line_length",
                        _ => "line_cap_per_len",
                    },
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(Self {
            c_g,
            c_j,
            line_length,
            line_cap_per_len,
        })
    }
}

/// Derived quantities used throughout reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// Dispersive shift χ = g²/ω_qr (rad/s, signed).
    pub chi: f64,
    /// Detuning ω_qr = ω_q − ω_r (rad/s, signed).
    pub omega_qr: f64,
    /// Quality factor Q = ω_r/κ.
    pub q_factor: f64,
    /// Cavity-induced qubit relaxation rate (1/s).
    pub gamma_r: f64,
}

/// Dispersive shift χ = g²/ω_qr.
///
/// Signed: positive when the qubit sits above the resonator.
pub fn chi(g: f64, omega_qr: f64) -> Result<f64> {
    if omega_qr == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    Ok(g * g / omega_qr)
}

/// Coupling strength from circuit elements: g = C_g √(ω_r ω_q / (2 L c C_J)).
///
/// C_g = 0 is allowed and yields g = 0 (no coupling capacitor); the remaining
/// elements must be strictly positive.
pub fn coupling_from_circuit(circuit: &CircuitParams, omega_r: f64, omega_q: f64) -> Result<f64> {
    for (name, v) in [("omega_r", omega_r), ("omega_q", omega_q)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: if name == "omega_r" { "omega_r" } else { "omega_q" },
                reason: format!("must be positive and finite, got {v}"),
            });
        }
    }
    let denom = 2.0 * circuit.line_length * circuit.line_cap_per_len * circuit.c_j;
    Ok(circuit.c_g * (omega_r * omega_q / denom).sqrt())
}

/// Quality factor Q = ω_r/κ. κ = 0 would mean an infinite Q.
pub fn quality_factor(omega_r: f64, kappa: f64) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::ZeroKappa("quality factor is infinite"));
    }
    Ok(omega_r / kappa)
}

/// Cavity-induced qubit relaxation rate γ_r = (2χ/ω_qr)·κ·(n + 1).
///
/// With `include_vacuum_term` off the rate is (2χ/ω_qr)·κ·n, the form used
/// when the average photon number dwarfs the vacuum contribution. With n = 0
/// and the flag on this is the vacuum-induced (Purcell) rate: the qubit
/// decays through the leaky resonator even with the cavity empty.
pub fn relaxation_rate(
    chi: f64,
    omega_qr: f64,
    kappa: f64,
    photon_number: f64,
    include_vacuum_term: bool,
) -> Result<f64> {
    if omega_qr == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if photon_number < 0.0 {
        return Err(Error::InvalidParameter {
            name: "photon_number",
            reason: format!("must be nonnegative, got {photon_number}"),
        });
    }
    let occupancy = if include_vacuum_term {
        photon_number + 1.0
    } else {
        photon_number
    };
    Ok(2.0 * chi / omega_qr * kappa * occupancy)
}

/// Probability of the excited state surviving the measurement window,
/// 1 − γ_r·Δt.
///
/// Fails with [`Error::CompleteDecay`] once γ_r·Δt ≥ 1: the state is gone
/// and the linear model (and the nondemolition premise) no longer holds.
pub fn fidelity(gamma_r: f64, duration: f64) -> Result<f64> {
    let product = gamma_r * duration;
    if product >= 1.0 {
        return Err(Error::CompleteDecay { product });
    }
    Ok(1.0 - product)
}

/// Volts per quadrature unit at the line center: √(ħω_r/(L·c)).
///
/// The second-harmonic voltage there is V(t) = −√(ħω_r/(Lc))·(a + a†); this
/// returns the prefactor.
pub fn voltage_scale(omega_r: f64, line_length: f64, line_cap_per_len: f64) -> Result<f64> {
    for (name, v) in [
        ("omega_r", omega_r),
        ("line_length", line_length),
        ("line_cap_per_len", line_cap_per_len),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: match name {
                    "omega_r" => "omega_r",
                    "line_length" => "line_length",
                    _ => "line_cap_per_len",
                },
                reason: format!("must be positive and finite, got {v}"),
            });
        }
    }
    Ok((HBAR * omega_r / (line_length * line_cap_per_len)).sqrt())
}

/// The worked device of the first design example: ω_r/2π = 6.5 GHz,
/// ω_q/2π = 8 GHz, g = 0.05·ω_qr, κ = 0.5·10⁸ 1/s, R = 50 Ω, cold bath.
pub fn reference_device() -> DeviceParams {
    let omega_r = ghz_to_angular(6.5);
    let omega_q = ghz_to_angular(8.0);
    let g = 0.05 * (omega_q - omega_r);
    DeviceParams::new(omega_r, omega_q, g, 0.5e8, 0.0, 50.0).expect("reference device is valid")
}

/// Same device with both frequencies doubled (the second design example).
pub fn reference_device_doubled() -> DeviceParams {
    let omega_r = ghz_to_angular(13.0);
    let omega_q = ghz_to_angular(16.0);
    let g = 0.05 * (omega_q - omega_r);
    DeviceParams::new(omega_r, omega_q, g, 0.5e8, 0.0, 50.0).expect("reference device is valid")
}
