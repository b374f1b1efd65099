//! The JSON run configuration: a single flat document where every key is
//! optional and unknown keys are rejected.

use std::f64::consts::{FRAC_PI_2, TAU as TWO_PI};

use serde::{Deserialize, Serialize};

use qbat_core::{
    linspace, BatterySpectrum, IntegratorConfig, PulseSchedule, PulseShape, ScheduleFamily,
    SearchSettings,
};

use crate::error::CliError;

/// Pulse shape selector as spelled in config files and on the command line.
///
/// `sin` and `one_minus_cos_pow` are the loop-closing drives; the exponent of
/// the latter comes from the separate `n` key. The ramps are the default
/// two-field protocol and are not offered on the `--shape13` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ShapeName {
    Zero,
    #[value(skip)]
    LinearRampUp,
    #[value(skip)]
    LinearRampDown,
    Sin,
    OneMinusCosPow,
}

impl ShapeName {
    fn to_shape(self, n: u32) -> PulseShape {
        match self {
            ShapeName::Zero => PulseShape::Zero,
            ShapeName::LinearRampUp => PulseShape::LinearRampUp,
            ShapeName::LinearRampDown => PulseShape::LinearRampDown,
            ShapeName::Sin => PulseShape::SinPi,
            ShapeName::OneMinusCosPow => PulseShape::OneMinusCosPow(n),
        }
    }
}

/// Duration grid for `sweep-tau` and `contour`, in units of `1/omega0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TauGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for TauGrid {
    fn default() -> Self {
        Self {
            min: 0.1,
            max: 50.0,
            points: 500,
        }
    }
}

/// Phase grid for `sweep-phi` and `contour`; always spans `[0, 2pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiGrid {
    pub points: usize,
}

impl Default for PhiGrid {
    fn default() -> Self {
        Self { points: 201 }
    }
}

/// Settings for the best-power duration search used by `sweep-phi` and
/// `ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub coarse_points: usize,
    pub tolerance: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        let s = SearchSettings::default();
        Self {
            tau_min: s.tau_min,
            tau_max: s.tau_max,
            coarse_points: s.coarse_points,
            tolerance: s.tolerance,
        }
    }
}

impl SearchSpec {
    pub fn settings(&self) -> SearchSettings {
        SearchSettings {
            tau_min: self.tau_min,
            tau_max: self.tau_max,
            coarse_points: self.coarse_points,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    /// Upper bound on `||H|| * dt` per integration step.
    pub max_step_scaled: f64,
    /// Allowed deviation of the state trace from one before a run is declared
    /// diverged.
    pub trace_drift_tol: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let c = IntegratorConfig::default();
        Self {
            max_step_scaled: c.max_step_scaled,
            trace_drift_tol: c.trace_drift_tol,
        }
    }
}

/// One run configuration shared by every subcommand. Energies are in
/// `hbar omega0`, durations in `1/omega0`, phases in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Bare level energies, strictly increasing.
    pub eps: [f64; 3],
    pub shape12: ShapeName,
    pub shape23: ShapeName,
    pub shape13: ShapeName,
    /// Exponent for the `one_minus_cos_pow` shape.
    pub n: u32,
    /// Global drive phase.
    pub phi: f64,
    /// Duration for single `simulate` runs.
    pub tau: f64,
    pub tau_grid: TauGrid,
    pub phi_grid: PhiGrid,
    pub search: SearchSpec,
    pub integrator: IntegratorSpec,
    /// Output file; the `--out` flag wins, and without either the subcommand
    /// name plus `.csv` is used.
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eps: [0.0, 1.0, 1.95],
            shape12: ShapeName::LinearRampUp,
            shape23: ShapeName::LinearRampDown,
            shape13: ShapeName::Zero,
            n: 1,
            phi: FRAC_PI_2,
            tau: 50.0,
            tau_grid: TauGrid::default(),
            phi_grid: PhiGrid::default(),
            search: SearchSpec::default(),
            integrator: IntegratorSpec::default(),
            out: None,
        }
    }
}

/// Parses a config document. An empty or whitespace-only document means all
/// defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = if text.trim().is_empty() {
        RunConfig::default()
    } else {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
    };
    config.check()?;
    Ok(config)
}

impl RunConfig {
    /// Range checks beyond what deserialization enforces, each error naming
    /// the offending key.
    pub fn check(&self) -> Result<(), CliError> {
        self.spectrum()?;
        self.family()?;
        if !(self.tau > 0.0) {
            return Err(CliError::Config(format!(
                "tau: must be positive, got {}",
                self.tau
            )));
        }
        if !(self.tau_grid.min > 0.0 && self.tau_grid.min < self.tau_grid.max) {
            return Err(CliError::Config(format!(
                "tau_grid: need 0 < min < max, got [{}, {}]",
                self.tau_grid.min, self.tau_grid.max
            )));
        }
        if self.tau_grid.points < 2 {
            return Err(CliError::Config(format!(
                "tau_grid.points: need at least 2, got {}",
                self.tau_grid.points
            )));
        }
        if self.phi_grid.points < 2 {
            return Err(CliError::Config(format!(
                "phi_grid.points: need at least 2, got {}",
                self.phi_grid.points
            )));
        }
        self.search
            .settings()
            .validate()
            .map_err(|e| CliError::Config(format!("search: {e}")))?;
        if !(self.integrator.max_step_scaled > 0.0) {
            return Err(CliError::Config(format!(
                "integrator.max_step_scaled: must be positive, got {}",
                self.integrator.max_step_scaled
            )));
        }
        if !(self.integrator.trace_drift_tol > 0.0) {
            return Err(CliError::Config(format!(
                "integrator.trace_drift_tol: must be positive, got {}",
                self.integrator.trace_drift_tol
            )));
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Result<BatterySpectrum, CliError> {
        BatterySpectrum::new(self.eps[0], self.eps[1], self.eps[2])
            .map_err(|e| CliError::Config(format!("eps: {e}")))
    }

    pub fn shape(&self, name: ShapeName) -> PulseShape {
        name.to_shape(self.n)
    }

    pub fn family(&self) -> Result<ScheduleFamily, CliError> {
        ScheduleFamily::new(
            self.shape(self.shape12),
            self.shape(self.shape23),
            self.shape(self.shape13),
            1.0,
            self.phi,
        )
        .map_err(|e| CliError::Config(format!("shapes: {e}")))
    }

    pub fn schedule(&self) -> Result<PulseSchedule, CliError> {
        self.family()?
            .at_tau(self.tau)
            .map_err(|e| CliError::Config(format!("tau: {e}")))
    }

    pub fn tau_grid_values(&self) -> Vec<f64> {
        linspace(self.tau_grid.min, self.tau_grid.max, self.tau_grid.points)
    }

    pub fn phi_grid_values(&self) -> Vec<f64> {
        linspace(0.0, TWO_PI, self.phi_grid.points)
    }

    pub fn search_settings(&self) -> SearchSettings {
        self.search.settings()
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            max_step_scaled: self.integrator.max_step_scaled,
            trace_drift_tol: self.integrator.trace_drift_tol,
            ..IntegratorConfig::default()
        }
    }
}
