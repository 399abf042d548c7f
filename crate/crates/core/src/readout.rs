//! Output-side observables: transmitted field, photon flux and counts,
//! power, voltage, and the field-space separation of the two qubit states.
//!
//! The resonator is a symmetric two-sided cavity; every per-port quantity
//! carries κ/2. "Monitored port" means one side; the total emitted over both
//! ports is twice the per-port count.

use num_complex::Complex64;

use crate::dynamics::{steady_state_field, DriveMode, DriveSpec, FieldTrajectory};
use crate::error::{Error, Result};
use crate::model::{DeviceParams, QubitState, HBAR};

/// Transmitted field at one port: b_out = −√(κ/2)·a.
pub fn output_field(a: Complex64, kappa: f64) -> Complex64 {
    -(kappa / 2.0).sqrt() * a
}

/// Per-port photon flux (κ/2)·n for a cavity photon number n (photons/s).
pub fn output_flux(photon_number: f64, kappa: f64) -> f64 {
    kappa / 2.0 * photon_number
}

/// Time-averaged photon number and total photons emitted through the
/// monitored port over the trajectory window: n_T = (κ/2)·(t − t₀)·n̄.
///
/// n̄ is the trapezoidal time average of the trajectory's photon number
/// (thermal occupancy included).
pub fn total_photons(trajectory: &FieldTrajectory, kappa: f64) -> Result<(f64, f64)> {
    if trajectory.len() < 2 {
        return Err(Error::DegenerateWindow {
            points: trajectory.len(),
        });
    }
    let times = &trajectory.times;
    let n = &trajectory.photon_number;
    let window = times[times.len() - 1] - times[0];
    let mut integral = 0.0;
    for k in 0..times.len() - 1 {
        integral += (n[k] + n[k + 1]) / 2.0 * (times[k + 1] - times[k]);
    }
    let n_bar = integral / window;
    Ok((n_bar, kappa / 2.0 * window * n_bar))
}

/// Emitted photon count for a steady (constant) photon number:
/// n_T = (κ/2)·window·n̄.
pub fn total_photons_steady(n_bar: f64, kappa: f64, window: f64) -> f64 {
    kappa / 2.0 * window * n_bar
}

/// Emitted power and output voltage: P = (κ/2)·n̄·ħω_r, V = √(P·R).
pub fn output_power_voltage(
    n_bar: f64,
    kappa: f64,
    omega_r: f64,
    impedance: f64,
) -> Result<(f64, f64)> {
    if !(omega_r > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_r",
            reason: format!("must be positive, got {omega_r}"),
        });
    }
    if !(impedance > 0.0) {
        return Err(Error::InvalidParameter {
            name: "impedance",
            reason: format!("must be positive, got {impedance}"),
        });
    }
    if n_bar < 0.0 || kappa < 0.0 {
        return Err(Error::InvalidParameter {
            name: "n_bar",
            reason: "photon number and kappa must be nonnegative".into(),
        });
    }
    let power = kappa / 2.0 * n_bar * HBAR * omega_r;
    Ok((power, (power * impedance).sqrt()))
}

/// Field-space distance |a_excited − a_ground| between the steady-state
/// amplitudes of the two qubit states under the same drive.
///
/// Coherent amplitudes only: thermal photons are state-independent and do
/// not discriminate.
pub fn state_separation(device: &DeviceParams, drive: &DriveSpec) -> Result<f64> {
    let excited = steady_state_field(device, drive, QubitState::Excited)?;
    let ground = steady_state_field(device, drive, QubitState::Ground)?;
    Ok((excited - ground).norm())
}

/// Real, nonnegative drive amplitude that puts `target_nbar` photons in the
/// cavity for the given qubit state: ε = √(n̄·(Δ² + (κ/2)²)).
pub fn drive_for_target_nbar(
    device: &DeviceParams,
    target_nbar: f64,
    qubit: QubitState,
    mode: DriveMode,
) -> Result<Complex64> {
    if target_nbar < 0.0 {
        return Err(Error::InvalidParameter {
            name: "target_nbar",
            reason: format!("must be nonnegative, got {target_nbar}"),
        });
    }
    if target_nbar == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let probe = DriveSpec::new(mode, Complex64::new(1.0, 0.0));
    let delta = probe.detuning_for(device, qubit);
    let half_kappa = device.kappa / 2.0;
    if delta == 0.0 && half_kappa == 0.0 {
        return Err(Error::InfeasibleDrive(
            "kappa = 0 on resonance: any finite drive diverges",
        ));
    }
    let eps = (target_nbar * (delta * delta + half_kappa * half_kappa)).sqrt();
    Ok(Complex64::new(eps, 0.0))
}

/// Signal budget of a measurement window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutBudget {
    /// Time-averaged cavity photon number.
    pub n_bar: f64,
    /// Photons emitted through the monitored port during the window.
    pub n_total: f64,
    /// Power coupled out of the resonator (W).
    pub power: f64,
    /// Output voltage across the impedance (V).
    pub voltage: f64,
    /// Poisson fluctuation of the emitted count, √n_T.
    pub shot_noise: f64,
    /// |a_excited − a_ground| steady-state field separation.
    pub separation: f64,
}

impl ReadoutBudget {
    /// Budget for a steady window at photon number `n_bar`.
    pub fn steady(
        device: &DeviceParams,
        drive: &DriveSpec,
        n_bar: f64,
        window: f64,
    ) -> Result<Self> {
        let n_total = total_photons_steady(n_bar, device.kappa, window);
        let (power, voltage) =
            output_power_voltage(n_bar, device.kappa, device.omega_r, device.impedance)?;
        Ok(Self {
            n_bar,
            n_total,
            power,
            voltage,
            shot_noise: n_total.sqrt(),
            separation: state_separation(device, drive)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::transient_field;
    use crate::model::reference_device;
    use approx::assert_relative_eq;

    fn calibrated_drive(device: &DeviceParams, n_bar: f64) -> DriveSpec {
        let eps =
            drive_for_target_nbar(device, n_bar, QubitState::Excited, DriveMode::ExcitedResonant)
                .unwrap();
        DriveSpec::new(DriveMode::ExcitedResonant, eps)
    }

    #[test]
    fn output_field_basics() {
        assert_eq!(output_field(Complex64::new(0.0, 0.0), 5e7).norm(), 0.0);
        let a = Complex64::new(1.3, -0.7);
        let b = output_field(a, 5e7);
        assert_relative_eq!(b.norm_sqr(), 5e7 / 2.0 * a.norm_sqr(), max_relative = 1e-12);
    }

    #[test]
    fn resonant_flux_reference() {
        // |a|² = 10 at κ = 5·10⁷ leaks 2.5·10⁸ photons/s per port.
        assert_relative_eq!(output_flux(10.0, 5e7), 2.5e8, max_relative = 1e-12);
    }

    #[test]
    fn total_photons_constant_window() {
        let dev = reference_device();
        let amp = Complex64::new(10.0_f64.sqrt(), 0.0);
        let times: Vec<f64> = (0..=8).map(|k| k as f64 * 0.5e-8).collect();
        let amps = vec![amp; times.len()];
        let traj = FieldTrajectory::new(times, amps, 0.0).unwrap();
        let (n_bar, n_t) = total_photons(&traj, dev.kappa).unwrap();
        assert_relative_eq!(n_bar, 10.0, max_relative = 1e-12);
        assert_relative_eq!(n_t, 10.0, max_relative = 1e-12);
        // Per-port flux equals (κ/2)·n̄ exactly on a constant trajectory.
        assert_relative_eq!(
            output_flux(n_bar, dev.kappa),
            dev.kappa / 2.0 * 10.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn total_photons_zero_window_and_degenerate() {
        assert_eq!(total_photons_steady(10.0, 5e7, 0.0), 0.0);
        let traj = FieldTrajectory::new(vec![0.0], vec![Complex64::new(1.0, 0.0)], 0.0).unwrap();
        assert!(matches!(
            total_photons(&traj, 5e7),
            Err(Error::DegenerateWindow { points: 1 })
        ));
    }

    #[test]
    fn total_photons_transient_window() {
        // Count photons over the post-flip transient and compare with the
        // analytic quadrature of |a(t)|² = |A∞ + (A0 − A∞)e^{-κt/2}|².
        let dev = reference_device();
        let drive = calibrated_drive(&dev, 10.0);
        let eps = drive.epsilon;
        let window = 4e-8;
        let points = 4000;
        let times: Vec<f64> = (0..=points)
            .map(|k| k as f64 * window / points as f64)
            .collect();
        let amps: Vec<Complex64> = times
            .iter()
            .map(|&t| transient_field(&dev, eps, t).unwrap())
            .collect();
        let traj = FieldTrajectory::new(times, amps, 0.0).unwrap();
        let (_, n_t) = total_photons(&traj, dev.kappa).unwrap();

        let a_inf = eps / (dev.kappa / 2.0);
        let a_0 = eps / Complex64::new(dev.kappa / 2.0, -2.0 * dev.chi());
        let d = a_0 - a_inf;
        let k = dev.kappa;
        let integral = a_inf.norm_sqr() * window
            + 2.0 * (a_inf.conj() * d).re * (2.0 / k) * (1.0 - (-k * window / 2.0).exp())
            + d.norm_sqr() * (1.0 / k) * (1.0 - (-k * window).exp());
        let expected = k / 2.0 * integral;

        assert_relative_eq!(n_t, expected, max_relative = 1e-5);
        assert_relative_eq!(n_t, 3.508, max_relative = 1e-3);
        // Still ramping: strictly below the steady-state count for the same
        // window.
        assert!(n_t < total_photons_steady(10.0, dev.kappa, window));
    }

    #[test]
    fn power_voltage_reference() {
        let dev = reference_device();
        let (p, v) = output_power_voltage(10.0, dev.kappa, dev.omega_r, dev.impedance).unwrap();
        assert_relative_eq!(v, 0.23e-6, max_relative = 0.02);
        assert_relative_eq!(v * v / dev.impedance, p, max_relative = 1e-15);

        // Doubled resonator frequency: √2 more voltage.
        let (_, v2) =
            output_power_voltage(10.0, dev.kappa, 2.0 * dev.omega_r, dev.impedance).unwrap();
        assert_relative_eq!(v2 / v, 2.0_f64.sqrt(), max_relative = 1e-12);

        let (p0, v0) = output_power_voltage(0.0, dev.kappa, dev.omega_r, dev.impedance).unwrap();
        assert_eq!(p0, 0.0);
        assert_eq!(v0, 0.0);
    }

    #[test]
    fn voltage_monotonicity() {
        let dev = reference_device();
        let base = output_power_voltage(10.0, dev.kappa, dev.omega_r, dev.impedance)
            .unwrap()
            .1;
        for (n, k, w) in [
            (20.0, dev.kappa, dev.omega_r),
            (10.0, 2.0 * dev.kappa, dev.omega_r),
            (10.0, dev.kappa, 1.5 * dev.omega_r),
        ] {
            let v = output_power_voltage(n, k, w, dev.impedance).unwrap().1;
            assert!(v > base);
        }
    }

    #[test]
    fn separation_reference_value() {
        let dev = reference_device();
        let drive = calibrated_drive(&dev, 10.0);
        let sep = state_separation(&dev, &drive).unwrap();
        // |ε/(κ/2) − ε/(κ/2 − 2iχ)| with 2χ/(κ/2) = 1.885.
        let a_e = drive.epsilon / (dev.kappa / 2.0);
        let a_g = drive.epsilon / Complex64::new(dev.kappa / 2.0, -2.0 * dev.chi());
        assert_relative_eq!(sep, (a_e - a_g).norm(), max_relative = 1e-12);
        assert_relative_eq!(sep, 2.7935, max_relative = 1e-3);
    }

    #[test]
    fn separation_vanishes_without_shift() {
        let dev = reference_device();
        let no_coupling =
            DeviceParams::new(dev.omega_r, dev.omega_q, 0.0, dev.kappa, 0.0, 50.0).unwrap();
        let drive = DriveSpec::new(DriveMode::ExcitedResonant, Complex64::new(7.9e7, 0.0));
        assert_eq!(state_separation(&no_coupling, &drive).unwrap(), 0.0);
    }

    #[test]
    fn separation_monotonicity() {
        // Fixed ε: separation shrinks with κ and grows with |χ|.
        let dev = reference_device();
        let drive = DriveSpec::new(DriveMode::ExcitedResonant, Complex64::new(7.9e7, 0.0));
        let base = state_separation(&dev, &drive).unwrap();
        let leakier =
            DeviceParams::new(dev.omega_r, dev.omega_q, dev.g, 4.0 * dev.kappa, 0.0, 50.0)
                .unwrap();
        assert!(state_separation(&leakier, &drive).unwrap() < base);
        let stronger =
            DeviceParams::new(dev.omega_r, dev.omega_q, 1.5 * dev.g, dev.kappa, 0.0, 50.0)
                .unwrap();
        assert!(state_separation(&stronger, &drive).unwrap() > base);
    }

    #[test]
    fn drive_calibration_reference() {
        let dev = reference_device();
        let eps =
            drive_for_target_nbar(&dev, 10.0, QubitState::Excited, DriveMode::ExcitedResonant)
                .unwrap();
        assert_relative_eq!(
            eps.re,
            dev.kappa / 2.0 * 10.0_f64.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(eps.re, 7.9057e7, max_relative = 1e-4);
        assert_eq!(eps.im, 0.0);

        let zero =
            drive_for_target_nbar(&dev, 0.0, QubitState::Excited, DriveMode::ExcitedResonant)
                .unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn drive_calibration_round_trip() {
        let dev = reference_device();
        for target in [0.5, 1.0, 10.0, 123.0] {
            for qubit in [QubitState::Ground, QubitState::Excited] {
                let eps = drive_for_target_nbar(&dev, target, qubit, DriveMode::ExcitedResonant)
                    .unwrap();
                let drive = DriveSpec::new(DriveMode::ExcitedResonant, eps);
                let a = steady_state_field(&dev, &drive, qubit).unwrap();
                assert_relative_eq!(a.norm_sqr(), target, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn drive_calibration_infeasible() {
        let dev = DeviceParams::new(1e9, 2e9, 1e7, 0.0, 0.0, 50.0).unwrap();
        assert!(matches!(
            drive_for_target_nbar(&dev, 1.0, QubitState::Excited, DriveMode::ExcitedResonant),
            Err(Error::InfeasibleDrive(_))
        ));
    }

    #[test]
    fn budget_invariants() {
        let dev = reference_device();
        let drive = calibrated_drive(&dev, 10.0);
        let b = ReadoutBudget::steady(&dev, &drive, 10.0, 4e-8).unwrap();
        assert_eq!(b.n_total, dev.kappa / 2.0 * 4e-8 * 10.0);
        assert_relative_eq!(b.shot_noise * b.shot_noise, b.n_total, max_relative = 1e-15);
        assert_relative_eq!(b.n_total, 10.0, max_relative = 1e-12);
    }
}
