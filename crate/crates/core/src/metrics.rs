//! Stored energy, ergotropy, and average charging power of a battery state.

use crate::dynamics::DensityState;
use crate::error::{Error, Result};
use crate::hamiltonian::BatterySpectrum;

/// Level occupations `(P1, P2, P3)`, the real diagonal of the state.
pub fn populations(state: &DensityState) -> [f64; 3] {
    let m = state.matrix();
    [m[(0, 0)].re, m[(1, 1)].re, m[(2, 2)].re]
}

/// Mean bare energy `sum_i eps_i P_i`. Identical in the lab and interaction
/// pictures since the picture change leaves the diagonal untouched.
pub fn energy(state: &DensityState, spectrum: &BatterySpectrum) -> f64 {
    let p = populations(state);
    let e = spectrum.eps();
    p[0] * e[0] + p[1] * e[1] + p[2] * e[2]
}

/// Extractable work relative to the ground level. For diagonal-cost storage
/// this is the mean energy above `eps1`.
pub fn ergotropy(state: &DensityState, spectrum: &BatterySpectrum) -> f64 {
    energy(state, spectrum) - spectrum.eps1()
}

/// Average charging power `C(tau) / tau`.
pub fn average_power(ergotropy: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::NonPositiveTau { tau });
    }
    Ok(ergotropy / tau)
}

/// Summary of one charging run, read off the final state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargingReport {
    pub tau: f64,
    pub final_energy: f64,
    pub ergotropy: f64,
    pub avg_power: f64,
    pub populations_final: [f64; 3],
}

impl ChargingReport {
    pub fn from_final_state(
        state: &DensityState,
        spectrum: &BatterySpectrum,
        tau: f64,
    ) -> Result<Self> {
        let final_energy = energy(state, spectrum);
        let ergotropy = final_energy - spectrum.eps1();
        let avg_power = average_power(ergotropy, tau)?;
        Ok(Self {
            tau,
            final_energy,
            ergotropy,
            avg_power,
            populations_final: populations(state),
        })
    }
}
