//! Battery spectrum and the two Hamiltonians the dynamics runs under: the
//! rotating-frame matrix with the global phase on its 1-3 corner, and the lab
//! frame drive with explicit carriers and per-field phases.

use std::f64::consts::TAU as TWO_PI;

use num_complex::Complex64;

use crate::dynamics::DensityState;
use crate::error::{Error, Result};
use crate::linalg::Matrix3;
use crate::pulse::{eval_pulses, PulseSchedule};

/// The three bare level energies, strictly increasing, in units of
/// `hbar omega0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatterySpectrum {
    eps: [f64; 3],
}

impl BatterySpectrum {
    pub fn new(eps1: f64, eps2: f64, eps3: f64) -> Result<Self> {
        if !(eps1 < eps2 && eps2 < eps3) {
            return Err(Error::SpectrumOrder { eps1, eps2, eps3 });
        }
        Ok(Self {
            eps: [eps1, eps2, eps3],
        })
    }

    pub fn eps(&self) -> [f64; 3] {
        self.eps
    }

    pub fn eps1(&self) -> f64 {
        self.eps[0]
    }

    pub fn eps2(&self) -> f64 {
        self.eps[1]
    }

    pub fn eps3(&self) -> f64 {
        self.eps[2]
    }

    /// Work capacity `eps3 - eps1`.
    pub fn c_max(&self) -> f64 {
        self.eps[2] - self.eps[0]
    }

    /// Bare Hamiltonian `diag(eps1, eps2, eps3)`.
    pub fn bare_hamiltonian(&self) -> Matrix3 {
        Matrix3::from_diagonal(self.eps)
    }
}

impl Default for BatterySpectrum {
    /// The working point used throughout: `(0, 1, 1.95)`.
    fn default() -> Self {
        Self {
            eps: [0.0, 1.0, 1.95],
        }
    }
}

/// The drive switch: on over the protocol window, off outside it.
///
/// The window is treated as closed, so the boundary instants `t = 0` and
/// `t = tau` count as on; being a measure-zero choice it cannot affect the
/// dynamics, and it keeps the Hamiltonian right-continuous at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchWindow {
    pub tau: f64,
}

impl SwitchWindow {
    pub fn lambda(&self, t: f64) -> f64 {
        if (0.0..=self.tau).contains(&t) {
            1.0
        } else {
            0.0
        }
    }
}

/// Lab-frame drive: the pulse schedule plus explicit carrier frequencies and
/// the three individual field phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabFrameDrive {
    pub schedule: PulseSchedule,
    pub omega12: f64,
    pub omega23: f64,
    pub omega13: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

const DRIVE_TOL: f64 = 1e-12;

impl LabFrameDrive {
    /// Builds a drive and checks both invariants: carriers resonant with the
    /// level splittings, and `phi1 + phi2 - phi3` equal to the schedule's
    /// global phase.
    pub fn new(
        schedule: PulseSchedule,
        spectrum: &BatterySpectrum,
        carriers: (f64, f64, f64),
        phases: (f64, f64, f64),
    ) -> Result<Self> {
        let drive = Self {
            schedule,
            omega12: carriers.0,
            omega23: carriers.1,
            omega13: carriers.2,
            phi1: phases.0,
            phi2: phases.1,
            phi3: phases.2,
        };
        drive.validate(spectrum)?;
        Ok(drive)
    }

    /// Resonant drive with the simplest phase split: the whole global phase
    /// on field 1, `phi2 = phi3 = 0`.
    pub fn resonant(schedule: PulseSchedule, spectrum: &BatterySpectrum) -> Self {
        let [e1, e2, e3] = spectrum.eps();
        Self {
            schedule,
            omega12: e2 - e1,
            omega23: e3 - e2,
            omega13: e3 - e1,
            phi1: schedule.phi,
            phi2: 0.0,
            phi3: 0.0,
        }
    }

    pub fn validate(&self, spectrum: &BatterySpectrum) -> Result<()> {
        let [e1, e2, e3] = spectrum.eps();
        for (transition, carrier, splitting) in [
            ("1-2", self.omega12, e2 - e1),
            ("2-3", self.omega23, e3 - e2),
            ("1-3", self.omega13, e3 - e1),
        ] {
            if (carrier - splitting).abs() > DRIVE_TOL {
                return Err(Error::DriveResonance {
                    transition,
                    carrier,
                    splitting,
                });
            }
        }
        let combination = self.phi1 + self.phi2 - self.phi3;
        if (combination - self.schedule.phi).abs() > DRIVE_TOL {
            return Err(Error::DrivePhaseSplit {
                combination,
                phi: self.schedule.phi,
            });
        }
        Ok(())
    }
}

/// Reduces a phase to [0, 2 pi). `rem_euclid` is an exact operation, so two
/// phases that differ by an exactly representable multiple of 2 pi reduce to
/// bitwise-identical values.
fn reduce_phase(phi: f64) -> f64 {
    phi.rem_euclid(TWO_PI)
}

/// Rotating-frame Hamiltonian: zero diagonal, real `omega12` and `omega23`
/// couplings, and the 1-3 coupling carrying the global phase as
/// `omega13 * exp(i phi)`.
pub fn build_interaction_hamiltonian(schedule: &PulseSchedule, t: f64) -> Result<Matrix3> {
    let (o12, o23, o13) = eval_pulses(schedule, t)?;
    let phase = Complex64::from_polar(1.0, reduce_phase(schedule.phi));
    let z = Complex64::ZERO;
    let r12 = Complex64::new(o12, 0.0);
    let r23 = Complex64::new(o23, 0.0);
    let c13 = phase * o13;
    Ok(Matrix3::new([
        [z, r12, c13],
        [r12, z, r23],
        [c13.conj(), r23, z],
    ]))
}

/// Lab-frame Hamiltonian: the bare levels plus, inside the switch window, the
/// drive matrix with explicit carrier oscillations
/// `omega_jk(t) * exp(+i (w_jk t - phi_k))` on the upper triangle.
///
/// The carrier rotates with the level splitting so that conjugation by
/// `exp(i H0 t)` cancels it under resonance, leaving the static
/// rotating-frame matrix with loop phase `-(phi1 + phi2 - phi3)`; the
/// opposite carrier direction would leave a `2 H0` detuning instead of a
/// rotating frame.
pub fn build_lab_hamiltonian(
    spectrum: &BatterySpectrum,
    drive: &LabFrameDrive,
    t: f64,
) -> Result<Matrix3> {
    if t < 0.0 {
        return Err(Error::PulseDomain {
            t,
            tau: drive.schedule.tau,
        });
    }
    let h0 = spectrum.bare_hamiltonian();
    let window = SwitchWindow {
        tau: drive.schedule.tau,
    };
    if window.lambda(t) == 0.0 {
        return Ok(h0);
    }
    let (o12, o23, o13) = eval_pulses(&drive.schedule, t)?;
    let e12 = Complex64::from_polar(o12, drive.omega12 * t - drive.phi1);
    let e23 = Complex64::from_polar(o23, drive.omega23 * t - drive.phi2);
    let e13 = Complex64::from_polar(o13, drive.omega13 * t - drive.phi3);
    let z = Complex64::ZERO;
    let h1 = Matrix3::new([
        [z, e12, e13],
        [e12.conj(), z, e23],
        [e13.conj(), e23.conj(), z],
    ]);
    Ok(h0 + h1)
}

/// Frame change `rho -> exp(i H0 t) rho exp(-i H0 t)`, applied entrywise as
/// `rho_jk * exp(i (eps_j - eps_k) t)`. Diagonal entries are returned bit for
/// bit unchanged, so populations, trace and eigenvalues are preserved.
pub fn to_interaction_picture(
    rho: &DensityState,
    t: f64,
    spectrum: &BatterySpectrum,
) -> DensityState {
    let eps = spectrum.eps();
    let m = rho.matrix();
    let mut out = *m;
    for j in 0..3 {
        for k in 0..3 {
            if j != k {
                out.entries[j][k] =
                    m.entries[j][k] * Complex64::from_polar(1.0, (eps[j] - eps[k]) * t);
            }
        }
    }
    DensityState::new_unchecked(out)
}
