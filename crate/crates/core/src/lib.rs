//! Simulation of a three-level battery charged by a closed-contour pulse
//! protocol.
//!
//! The battery is a ladder of levels `eps1 < eps2 < eps3` driven by three
//! pulsed couplings: the usual two-pulse ladder pair plus a direct 1-3 pulse
//! that closes the loop. The relative phase `phi` of the loop controls how
//! fast energy can be pushed into the battery. This crate integrates the
//! closed-system dynamics of the density matrix, reads off stored energy,
//! ergotropy, and average charging power, and sweeps those figures over
//! protocol duration and phase.
//!
//! Everything is expressed in units of the peak pulse amplitude: energies in
//! `hbar * Omega0`, durations as `Omega0 * tau`, powers in
//! `hbar * Omega0^2`.
//!
//! Sweeps run in parallel with the default `parallel` feature and fall back
//! to plain iteration without it; both produce identical results.

pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod metrics;
pub mod pulse;
pub mod spectral;
pub mod sweeps;

pub use num_complex::Complex64;

pub use dynamics::{
    evolve, evolve_endpoints, evolve_lab_frame_equivalence, evolve_propagator_oracle,
    interaction_hamiltonian_fn, DensityState, IntegratorConfig, Picture, Trajectory,
};
pub use error::{Error, Result};
pub use hamiltonian::{
    build_interaction_hamiltonian, build_lab_hamiltonian, to_interaction_picture, BatterySpectrum,
    LabFrameDrive, SwitchWindow,
};
pub use linalg::{eigh, unitary_exp, Eigh, Matrix3};
pub use metrics::{average_power, energy, ergotropy, populations, ChargingReport};
pub use pulse::{eval_pulses, PulseSchedule, PulseShape};
pub use spectral::{
    adiabatic_curve, adiabatic_ergotropy, eigensystem_at, eigensystem_numeric,
    eigensystem_phi_half, is_non_adiabatic, min_gap, omega1_sq, omega_sq, phi_half_hamiltonian,
    AdiabaticCurve, EigenSystem,
};
pub use sweeps::{
    baseline_ratio, contour, geomspace, linspace, max_power_over_tau, sweep_phi, sweep_tau,
    with_max_threads, ContourResult, MaxPowerResult, PhiRow, PhiSweepResult, ScheduleFamily,
    SearchSettings, TauRow, TauSweepResult,
};
