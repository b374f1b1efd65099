//! Drive pulse shapes and the schedule that groups the three field amplitudes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Amplitude envelope evaluated against normalized time `s = t / tau` in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    /// Identically zero, used to switch the 1-3 field off.
    Zero,
    /// `s`
    LinearRampUp,
    /// `1 - s`
    LinearRampDown,
    /// `sin(pi s)`, peak 1 at midpoint.
    SinPi,
    /// `(1 - cos(2 pi s))^n`, peak `2^n` at midpoint; `n >= 1`.
    OneMinusCosPow(u32),
}

impl PulseShape {
    /// Shape value at normalized time `s`.
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            PulseShape::Zero => 0.0,
            PulseShape::LinearRampUp => s,
            PulseShape::LinearRampDown => 1.0 - s,
            PulseShape::SinPi => (PI * s).sin(),
            PulseShape::OneMinusCosPow(n) => (1.0 - (2.0 * PI * s).cos()).powi(n as i32),
        }
    }

    /// Largest value the shape takes on [0, 1].
    pub fn peak(&self) -> f64 {
        match *self {
            PulseShape::Zero => 0.0,
            PulseShape::LinearRampUp | PulseShape::LinearRampDown | PulseShape::SinPi => 1.0,
            PulseShape::OneMinusCosPow(n) => 2.0f64.powi(n as i32),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PulseShape::OneMinusCosPow(0) => Err(Error::InvalidShapeExponent),
            _ => Ok(()),
        }
    }
}

/// The three drive amplitudes with their common scale, duration and global phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    pub shape12: PulseShape,
    pub shape23: PulseShape,
    pub shape13: PulseShape,
    /// Amplitude scale. Internal units set this to 1 and measure time in
    /// `1/omega0`, energy in `hbar omega0`.
    pub omega0: f64,
    /// Protocol duration, in units of `1/omega0`.
    pub tau: f64,
    /// Global drive phase, radians.
    pub phi: f64,
}

impl PulseSchedule {
    pub fn new(
        shape12: PulseShape,
        shape23: PulseShape,
        shape13: PulseShape,
        omega0: f64,
        tau: f64,
        phi: f64,
    ) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::NonPositiveTau { tau });
        }
        if !(omega0 > 0.0) {
            return Err(Error::NonPositiveOmega0 { omega0 });
        }
        for shape in [&shape12, &shape23, &shape13] {
            shape.validate()?;
        }
        Ok(Self {
            shape12,
            shape23,
            shape13,
            omega0,
            tau,
            phi,
        })
    }

    /// Counterintuitively ordered ramps with a third field closing the loop:
    /// `omega12` ramps up, `omega23` ramps down, `omega13` takes `shape13`.
    pub fn closed_loop(shape13: PulseShape, tau: f64, phi: f64) -> Result<Self> {
        Self::new(
            PulseShape::LinearRampUp,
            PulseShape::LinearRampDown,
            shape13,
            1.0,
            tau,
            phi,
        )
    }

    /// The two-field ramp protocol with the 1-3 transition undriven.
    pub fn open_loop(tau: f64) -> Result<Self> {
        Self::closed_loop(PulseShape::Zero, tau, 0.0)
    }
}

/// The three instantaneous amplitudes `(omega12, omega23, omega13)` at time `t`.
pub fn eval_pulses(schedule: &PulseSchedule, t: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=schedule.tau).contains(&t) {
        return Err(Error::PulseDomain {
            t,
            tau: schedule.tau,
        });
    }
    let s = t / schedule.tau;
    Ok((
        schedule.omega0 * schedule.shape12.eval(s),
        schedule.omega0 * schedule.shape23.eval(s),
        schedule.omega0 * schedule.shape13.eval(s),
    ))
}
