use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time {t} lies outside the pulse domain [0, {tau}]")]
    PulseDomain { t: f64, tau: f64 },

    #[error("protocol duration must be positive, got tau = {tau}")]
    NonPositiveTau { tau: f64 },

    #[error("pulse exponent must be a positive integer")]
    InvalidShapeExponent,

    #[error("drive amplitude scale must be positive, got omega0 = {omega0}")]
    NonPositiveOmega0 { omega0: f64 },

    #[error("battery levels must be strictly increasing, got ({eps1}, {eps2}, {eps3})")]
    SpectrumOrder { eps1: f64, eps2: f64, eps3: f64 },

    #[error("carrier for {transition} is off resonance: {carrier} != level splitting {splitting}")]
    DriveResonance {
        transition: &'static str,
        carrier: f64,
        splitting: f64,
    },

    #[error("field phases combine to {combination}, which differs from the schedule phase {phi}")]
    DrivePhaseSplit { combination: f64, phi: f64 },

    #[error("not a valid density matrix: {detail}")]
    StateInvariant { detail: String },

    #[error("integration diverged at t = {t}: trace drift {drift:e} exceeds tolerance {tol:e}")]
    IntegrationDiverged { t: f64, drift: f64, tol: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNonConvergence { sweeps: usize, off_norm: f64 },

    #[error(
        "closed-form eigenvectors are singular here (omega1 = 0 while omega12 = {omega12}); \
         use the numeric eigensolver"
    )]
    FormulaSingular { omega12: f64 },

    #[error("adiabatic ergotropy formula holds only at phi = pi/2, got phi = {phi}")]
    PhaseContract { phi: f64 },

    #[error("power search hit a non-finite value at tau = {tau}")]
    NonFinitePower { tau: f64 },

    #[error("at {at}: {source}")]
    Cell {
        at: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid search input: {0}")]
    Search(String),

    #[error("invalid integrator settings: {0}")]
    Config(String),

    #[error("baseline ratio needs a closed-loop shape; shape13 = Zero is the baseline itself")]
    BaselineShape,
}

pub type Result<T> = std::result::Result<T, Error>;
