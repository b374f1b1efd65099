//! Density-matrix time evolution.
//!
//! The primary integrator is a classic fixed-step fourth-order Runge-Kutta on
//! the full density matrix, with the step chosen so that
//! `max_t ||H(t)|| * dt` stays below a configured bound. An independent
//! propagator oracle re-runs the same evolution as a product of exact matrix
//! exponentials obtained by eigendecomposition; the two must agree for a
//! result to be trusted, and the acceptance suite enforces that.
//!
//! Trace is never renormalized. Drift beyond tolerance is an error carrying
//! the time at which it happened.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_interaction_hamiltonian, build_lab_hamiltonian, BatterySpectrum, LabFrameDrive,
};
use crate::linalg::{eigh, unitary_exp, Matrix3};
use crate::pulse::PulseSchedule;

/// Hermiticity tolerance for a valid density matrix.
pub const STATE_HERMITICITY_TOL: f64 = 1e-10;
/// Unit-trace tolerance for a valid density matrix.
pub const STATE_TRACE_TOL: f64 = 1e-8;
/// Eigenvalues may undershoot zero by at most this much.
pub const STATE_EIGENVALUE_FLOOR: f64 = -1e-8;

/// A validated 3x3 density matrix: Hermitian, unit trace, positive
/// semidefinite within the tolerances above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityState {
    m: Matrix3,
}

impl DensityState {
    pub fn new(m: Matrix3) -> Result<Self> {
        let herm = m.hermiticity_defect();
        if !(herm <= STATE_HERMITICITY_TOL) {
            return Err(Error::StateInvariant {
                detail: format!("hermiticity defect {herm:e} exceeds {STATE_HERMITICITY_TOL:e}"),
            });
        }
        let tr = m.trace();
        let tr_err = (tr - Complex64::ONE).norm();
        if !(tr_err <= STATE_TRACE_TOL) {
            return Err(Error::StateInvariant {
                detail: format!("trace {tr} is not 1 within {STATE_TRACE_TOL:e}"),
            });
        }
        let es = eigh(&m)?;
        if !(es.values[0] >= STATE_EIGENVALUE_FLOOR) {
            return Err(Error::StateInvariant {
                detail: format!(
                    "smallest eigenvalue {:e} below floor {STATE_EIGENVALUE_FLOOR:e}",
                    es.values[0]
                ),
            });
        }
        Ok(Self { m })
    }

    /// For internal construction of states that are valid by construction
    /// (unitary images of validated states, picture changes).
    pub(crate) fn new_unchecked(m: Matrix3) -> Self {
        Self { m }
    }

    /// Projector onto bare level `k` (0-based).
    pub fn pure(k: usize) -> Self {
        let mut m = Matrix3::zeros();
        m.entries[k][k] = Complex64::ONE;
        Self { m }
    }

    /// The battery's initial state, everything in the lowest level.
    pub fn ground() -> Self {
        Self::pure(0)
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Matrix3::identity() * (1.0 / 3.0),
        }
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.m
    }

    /// `Tr rho^2`, 1 for pure states.
    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }
}

/// Which Hamiltonian the supplied closure represents. Purely descriptive
/// metadata; the integrator treats both frames identically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Interaction,
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Upper bound on `(max_t ||H(t)||) * dt` per step.
    pub max_step_scaled: f64,
    /// Allowed deviation of `Tr rho` from 1 before the run is declared
    /// diverged.
    pub trace_drift_tol: f64,
    pub picture: Picture,
    /// Precomputed bound on `max_t ||H(t)||_F`. When `None` the integrator
    /// measures it by scanning the Hamiltonian over a dense time grid; sweep
    /// drivers that know the bound analytically pass it to skip the scan.
    pub norm_scale: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            max_step_scaled: 0.01,
            trace_drift_tol: 1e-8,
            picture: Picture::Interaction,
            norm_scale: None,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.max_step_scaled > 0.0) {
            return Err(Error::Config(format!(
                "max_step_scaled must be positive, got {}",
                self.max_step_scaled
            )));
        }
        if !(self.trace_drift_tol > 0.0) {
            return Err(Error::Config(format!(
                "trace_drift_tol must be positive, got {}",
                self.trace_drift_tol
            )));
        }
        if let Some(scale) = self.norm_scale {
            if !(scale > 0.0) && scale.is_finite() {
                return Err(Error::Config(format!(
                    "norm_scale must be positive when given, got {scale}"
                )));
            }
        }
        Ok(())
    }
}

/// Time-ordered evolution samples, first at `t = 0`, last at exactly `t = tau`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<(f64, DensityState)>,
    /// Integration steps between retained samples.
    pub sample_stride: usize,
    /// Total integration steps taken.
    pub n_steps: usize,
    /// Largest `|Tr rho - 1|` seen at any step.
    pub max_trace_drift: f64,
    /// Largest Hermiticity defect seen at any retained sample.
    pub max_hermiticity_defect: f64,
}

impl Trajectory {
    fn assemble(
        samples: Vec<(f64, DensityState)>,
        sample_stride: usize,
        n_steps: usize,
        tau: f64,
        max_trace_drift: f64,
        max_hermiticity_defect: f64,
    ) -> Self {
        debug_assert!(samples.len() >= 2);
        debug_assert_eq!(samples[0].0, 0.0);
        debug_assert_eq!(samples.last().unwrap().0, tau);
        debug_assert!(samples.windows(2).all(|w| w[0].0 < w[1].0));
        Self {
            samples,
            sample_stride,
            n_steps,
            max_trace_drift,
            max_hermiticity_defect,
        }
    }

    pub fn samples(&self) -> &[(f64, DensityState)] {
        &self.samples
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().unwrap().0
    }

    pub fn final_state(&self) -> &DensityState {
        &self.samples.last().unwrap().1
    }
}

/// Target number of retained samples for a full trajectory.
const FULL_SAMPLE_TARGET: usize = 1000;
const MIN_STEPS: usize = 16;
/// Grid resolution used when measuring `max_t ||H(t)||_F`.
const NORM_SCAN_INTERVALS: usize = 4096;

fn scan_norm_scale<F: Fn(f64) -> Matrix3>(h_at: &F, tau: f64) -> f64 {
    let mut scale = 0.0f64;
    for k in 0..=NORM_SCAN_INTERVALS {
        let t = if k == NORM_SCAN_INTERVALS {
            tau
        } else {
            tau * (k as f64 / NORM_SCAN_INTERVALS as f64)
        };
        scale = scale.max(h_at(t).frobenius_norm());
    }
    scale
}

fn step_count<F: Fn(f64) -> Matrix3>(h_at: &F, tau: f64, config: &IntegratorConfig) -> usize {
    let scale = config
        .norm_scale
        .unwrap_or_else(|| scan_norm_scale(h_at, tau));
    ((tau * scale / config.max_step_scaled).ceil() as usize).max(MIN_STEPS)
}

/// `-i [H, rho]`, the right-hand side of the evolution equation with hbar = 1.
fn liouville_rhs(h: &Matrix3, rho: &Matrix3) -> Matrix3 {
    h.commutator(rho) * Complex64::new(0.0, -1.0)
}

fn grid_time(tau: f64, k: usize, n: usize) -> f64 {
    if k == n {
        tau
    } else {
        tau * (k as f64 / n as f64)
    }
}

enum Retention {
    /// Keep about [`FULL_SAMPLE_TARGET`] evenly spaced samples.
    Full,
    /// Keep only the initial and final states.
    Endpoints,
}

struct StepperOutput {
    samples: Vec<(f64, DensityState)>,
    stride: usize,
    max_trace_drift: f64,
    max_hermiticity_defect: f64,
}

/// Shared sampling and invariant bookkeeping around any one-step map.
fn run_steps<F>(
    rho0: &DensityState,
    tau: f64,
    n_steps: usize,
    trace_drift_tol: f64,
    retention: Retention,
    mut advance: F,
) -> Result<StepperOutput>
where
    F: FnMut(f64, f64, &Matrix3) -> Matrix3,
{
    let stride = match retention {
        Retention::Full => (n_steps / FULL_SAMPLE_TARGET).max(1),
        Retention::Endpoints => n_steps,
    };
    let mut samples = Vec::with_capacity(n_steps / stride + 2);
    let mut rho = *rho0.matrix();
    let mut max_drift = (rho.trace() - Complex64::ONE).norm();
    let mut max_herm = rho.hermiticity_defect();
    samples.push((0.0, *rho0));

    for k in 0..n_steps {
        let t0 = grid_time(tau, k, n_steps);
        let t1 = grid_time(tau, k + 1, n_steps);
        rho = advance(t0, t1, &rho);

        let drift = (rho.trace() - Complex64::ONE).norm();
        if !drift.is_finite() || drift > trace_drift_tol {
            return Err(Error::IntegrationDiverged {
                t: t1,
                drift,
                tol: trace_drift_tol,
            });
        }
        max_drift = max_drift.max(drift);

        if (k + 1) % stride == 0 || k + 1 == n_steps {
            let state = DensityState::new(rho).map_err(|e| match e {
                Error::StateInvariant { detail } => Error::StateInvariant {
                    detail: format!("at t = {t1}: {detail}"),
                },
                other => other,
            })?;
            max_herm = max_herm.max(rho.hermiticity_defect());
            samples.push((t1, state));
        }
    }

    Ok(StepperOutput {
        samples,
        stride,
        max_trace_drift: max_drift,
        max_hermiticity_defect: max_herm,
    })
}

fn integrate_rk4<F>(
    h_at: &F,
    rho0: &DensityState,
    tau: f64,
    config: &IntegratorConfig,
    retention: Retention,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Matrix3,
{
    config.validate()?;
    if !(tau > 0.0) {
        return Err(Error::NonPositiveTau { tau });
    }
    let n_steps = step_count(h_at, tau, config);
    let out = run_steps(
        rho0,
        tau,
        n_steps,
        config.trace_drift_tol,
        retention,
        |t0, t1, rho| {
            let h = t1 - t0;
            let h_start = h_at(t0);
            let h_mid = h_at(0.5 * (t0 + t1));
            let h_end = h_at(t1);
            let k1 = liouville_rhs(&h_start, rho);
            let k2 = liouville_rhs(&h_mid, &(*rho + k1 * (0.5 * h)));
            let k3 = liouville_rhs(&h_mid, &(*rho + k2 * (0.5 * h)));
            let k4 = liouville_rhs(&h_end, &(*rho + k3 * h));
            *rho + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
        },
    )?;
    Ok(Trajectory::assemble(
        out.samples,
        out.stride,
        n_steps,
        tau,
        out.max_trace_drift,
        out.max_hermiticity_defect,
    ))
}

/// Evolves `rho0` under `h_at` for duration `tau` with fourth-order
/// Runge-Kutta, retaining around a thousand evenly spaced samples. The final
/// sample lands on `tau` exactly.
pub fn evolve<F>(
    h_at: F,
    rho0: &DensityState,
    tau: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Matrix3,
{
    integrate_rk4(&h_at, rho0, tau, config, Retention::Full)
}

/// Same integration as [`evolve`] but retaining only the initial and final
/// states. Sweep engines evaluating many grid cells use this.
pub fn evolve_endpoints<F>(
    h_at: F,
    rho0: &DensityState,
    tau: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Matrix3,
{
    integrate_rk4(&h_at, rho0, tau, config, Retention::Endpoints)
}

/// Independent check integrator: piecewise-constant propagation
/// `rho <- U rho U^dagger` with `U = exp(-i H(t_mid) dt)` computed by exact
/// eigendecomposition each step. Exactly trace and positivity preserving up
/// to the eigensolver tolerance.
pub fn evolve_propagator_oracle<F>(
    h_at: F,
    rho0: &DensityState,
    tau: f64,
    n_steps: usize,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Matrix3,
{
    if n_steps == 0 {
        return Err(Error::Config("propagator needs at least one step".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::NonPositiveTau { tau });
    }
    let mut eigh_failure = None;
    let out = run_steps(
        rho0,
        tau,
        n_steps,
        STATE_TRACE_TOL,
        Retention::Full,
        |t0, t1, rho| {
            let mid = 0.5 * (t0 + t1);
            match unitary_exp(&h_at(mid), t1 - t0) {
                Ok(u) => rho.conjugated_by(&u),
                Err(e) => {
                    eigh_failure.get_or_insert(e);
                    *rho
                }
            }
        },
    );
    if let Some(e) = eigh_failure {
        return Err(e);
    }
    let out = out?;
    Ok(Trajectory::assemble(
        out.samples,
        out.stride,
        n_steps,
        tau,
        out.max_trace_drift,
        out.max_hermiticity_defect,
    ))
}

/// Runs the same physical evolution in both frames and returns the pair
/// `(lab, interaction)`. Both trajectories use one common step count and one
/// common retention stride, so their sample times coincide exactly; level
/// populations must then agree sample by sample.
pub fn evolve_lab_frame_equivalence(
    spectrum: &BatterySpectrum,
    drive: &LabFrameDrive,
    rho0: &DensityState,
    config: &IntegratorConfig,
) -> Result<(Trajectory, Trajectory)> {
    config.validate()?;
    drive.validate(spectrum)?;
    let schedule = drive.schedule;
    let tau = schedule.tau;
    let drive = *drive;
    let spectrum_copy = *spectrum;
    let lab_at = move |t: f64| {
        build_lab_hamiltonian(&spectrum_copy, &drive, t).expect("t inside the drive window")
    };
    let int_at = interaction_hamiltonian_fn(schedule);

    let scale = match config.norm_scale {
        Some(s) => s,
        None => scan_norm_scale(&lab_at, tau).max(scan_norm_scale(&int_at, tau)),
    };
    let shared = IntegratorConfig {
        norm_scale: Some(scale),
        ..*config
    };
    let lab = integrate_rk4(
        &lab_at,
        rho0,
        tau,
        &IntegratorConfig {
            picture: Picture::Lab,
            ..shared
        },
        Retention::Full,
    )?;
    let interaction = integrate_rk4(
        &int_at,
        rho0,
        tau,
        &IntegratorConfig {
            picture: Picture::Interaction,
            ..shared
        },
        Retention::Full,
    )?;
    Ok((lab, interaction))
}

/// Wraps a schedule as the Hamiltonian closure the integrators consume.
pub fn interaction_hamiltonian_fn(
    schedule: PulseSchedule,
) -> impl Fn(f64) -> Matrix3 + Send + Sync {
    move |t| build_interaction_hamiltonian(&schedule, t).expect("t inside the pulse window")
}
