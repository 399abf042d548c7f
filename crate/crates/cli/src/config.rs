//! TOML run configuration.
//!
//! Frequencies are quoted the way instruments display them: ω/2π in GHz for
//! the resonator, qubit and (explicit) drive, ω/2π in MHz for the coupling
//! and a raw 1/s rate for the cavity leakage. Circuit elements use fF, pF,
//! m and nF/m. Exactly one of `device.g_over_2pi_mhz` and a `[circuit]`
//! section must be present; with a circuit section the coupling is derived
//! from the element values.

use serde::Deserialize;

use readout_core::dynamics::DriveMode;
use readout_core::feasibility::Margins;
use readout_core::model::{
    coupling_from_circuit, ghz_to_angular, mhz_to_angular, CircuitParams, DeviceParams,
};
use readout_core::oracle::{Frame, OracleConfig};

/// A configuration problem, carrying the offending key.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn missing(key: &str) -> ConfigError {
    ConfigError(format!("missing key {key}"))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    device: Option<RawDevice>,
    circuit: Option<RawCircuit>,
    drive: Option<RawDrive>,
    measurement: Option<RawMeasurement>,
    feasibility: Option<RawFeasibility>,
    oracle: Option<RawOracle>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    omega_r_over_2pi_ghz: Option<f64>,
    omega_q_over_2pi_ghz: Option<f64>,
    g_over_2pi_mhz: Option<f64>,
    kappa_per_s: Option<f64>,
    n_bath: Option<f64>,
    impedance_ohm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    c_g_ff: Option<f64>,
    c_j_pf: Option<f64>,
    line_length_m: Option<f64>,
    line_cap_nf_per_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    mode: Option<String>,
    omega_d_over_2pi_ghz: Option<f64>,
    target_nbar: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasurement {
    duration_s: Option<f64>,
    t0_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeasibility {
    margin_default: Option<f64>,
    margin_c1: Option<f64>,
    margin_c2: Option<f64>,
    margin_c3: Option<f64>,
    margin_c4: Option<f64>,
    margin_c5: Option<f64>,
    margin_c6: Option<f64>,
    margin_c7: Option<f64>,
    margin_c8: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    n_fock: Option<usize>,
    dt_s: Option<f64>,
    rwa: Option<bool>,
    frame: Option<String>,
}

/// Fully validated run configuration, in library units.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub device: DeviceParams,
    pub circuit: Option<CircuitParams>,
    pub drive_mode: DriveMode,
    pub target_nbar: f64,
    /// Measurement window (s).
    pub duration: f64,
    /// Pre-flip segment length for simulations (s).
    pub t0: f64,
    pub margins: Margins,
    pub oracle: Option<OracleConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("invalid TOML: {e}")))?;

        let device = raw.device.as_ref().ok_or_else(|| missing("device"))?;
        let omega_r_ghz = device
            .omega_r_over_2pi_ghz
            .ok_or_else(|| missing("device.omega_r_over_2pi_ghz"))?;
        let omega_q_ghz = device
            .omega_q_over_2pi_ghz
            .ok_or_else(|| missing("device.omega_q_over_2pi_ghz"))?;
        let kappa = device
            .kappa_per_s
            .ok_or_else(|| missing("device.kappa_per_s"))?;
        let n_bath = device.n_bath.unwrap_or(0.0);
        let impedance = device.impedance_ohm.unwrap_or(50.0);
        let omega_r = ghz_to_angular(omega_r_ghz);
        let omega_q = ghz_to_angular(omega_q_ghz);

        let circuit = match &raw.circuit {
            None => None,
            Some(c) => {
                let c_g = c.c_g_ff.ok_or_else(|| missing("circuit.c_g_ff"))? * 1e-15;
                let c_j = c.c_j_pf.ok_or_else(|| missing("circuit.c_j_pf"))? * 1e-12;
                let len = c
                    .line_length_m
                    .ok_or_else(|| missing("circuit.line_length_m"))?;
                let cap = c
                    .line_cap_nf_per_m
                    .ok_or_else(|| missing("circuit.line_cap_nf_per_m"))?
                    * 1e-9;
                Some(
                    CircuitParams::new(c_g, c_j, len, cap)
                        .map_err(|e| ConfigError(format!("circuit: {e}")))?,
                )
            }
        };

        let g = match (device.g_over_2pi_mhz, &circuit) {
            (Some(_), Some(_)) => {
                return Err(ConfigError(
                    "give either device.g_over_2pi_mhz or a [circuit] section, not both".into(),
                ))
            }
            (None, None) => return Err(missing("device.g_over_2pi_mhz (or a [circuit] section)")),
            (Some(mhz), None) => mhz_to_angular(mhz),
            (None, Some(c)) => coupling_from_circuit(c, omega_r, omega_q)
                .map_err(|e| ConfigError(format!("circuit: {e}")))?,
        };

        let device = DeviceParams::new(omega_r, omega_q, g, kappa, n_bath, impedance)
            .map_err(|e| ConfigError(format!("device: {e}")))?;

        let drive = raw.drive.as_ref().ok_or_else(|| missing("drive"))?;
        let drive_mode = match drive.mode.as_deref().unwrap_or("excited-resonant") {
            "excited-resonant" => DriveMode::ExcitedResonant,
            "ground-resonant" => DriveMode::GroundResonant,
            "explicit" => {
                let ghz = drive
                    .omega_d_over_2pi_ghz
                    .ok_or_else(|| missing("drive.omega_d_over_2pi_ghz"))?;
                DriveMode::Explicit(ghz_to_angular(ghz))
            }
            other => {
                return Err(ConfigError(format!(
                    "drive.mode: unknown mode {other:?} (expected excited-resonant, ground-resonant or explicit)"
                )))
            }
        };
        let target_nbar = drive
            .target_nbar
            .ok_or_else(|| missing("drive.target_nbar"))?;
        if target_nbar < 0.0 {
            return Err(ConfigError("drive.target_nbar: must be nonnegative".into()));
        }

        let measurement = raw.measurement.as_ref().ok_or_else(|| missing("measurement"))?;
        let duration = measurement
            .duration_s
            .ok_or_else(|| missing("measurement.duration_s"))?;
        if duration < 0.0 {
            return Err(ConfigError("measurement.duration_s: must be nonnegative".into()));
        }
        let t0 = measurement.t0_s.unwrap_or(0.0);
        if t0 < 0.0 {
            return Err(ConfigError("measurement.t0_s: must be nonnegative".into()));
        }

        let mut margins = Margins::default();
        if let Some(f) = &raw.feasibility {
            if let Some(m) = f.margin_default {
                margins.default_margin = m;
                // An explicit default overrides the built-in C1 exception.
                margins.overrides = [None; 8];
            }
            let per = [
                f.margin_c1,
                f.margin_c2,
                f.margin_c3,
                f.margin_c4,
                f.margin_c5,
                f.margin_c6,
                f.margin_c7,
                f.margin_c8,
            ];
            for (slot, value) in margins.overrides.iter_mut().zip(per) {
                if value.is_some() {
                    *slot = value;
                }
            }
        }

        let oracle = match &raw.oracle {
            None => None,
            Some(o) => {
                let frame = match o.frame.as_deref().unwrap_or("drive-rotating") {
                    "drive-rotating" => Frame::DriveRotating,
                    "lab" => Frame::Lab,
                    other => {
                        return Err(ConfigError(format!(
                            "oracle.frame: unknown frame {other:?} (expected drive-rotating or lab)"
                        )))
                    }
                };
                Some(OracleConfig {
                    n_fock: o.n_fock.unwrap_or(12),
                    dt: o.dt_s,
                    frame,
                    rwa: o.rwa.unwrap_or(false),
                })
            }
        };

        Ok(Self {
            device,
            circuit,
            drive_mode,
            target_nbar,
            duration,
            t0,
            margins,
            oracle,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
