//! Argument parsing and the six subcommands.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use qbat_core::{
    contour, energy, ergotropy, evolve, interaction_hamiltonian_fn, populations, sweep_phi,
    sweep_tau, with_max_threads, DensityState,
};

use crate::config::{parse_config, RunConfig, ShapeName};
use crate::error::CliError;
use crate::output::{fmt_value, Csv};

#[derive(Debug, Parser)]
#[command(
    name = "qbat",
    version,
    about = "Closed-loop three-level battery charging simulator"
)]
pub struct Cli {
    /// JSON configuration file; flags below override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output CSV path; defaults to `<subcommand>.csv` in the working
    /// directory.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Shape of the loop-closing 1-3 drive.
    #[arg(long, global = true, value_enum, value_name = "SHAPE")]
    pub shape13: Option<ShapeName>,

    /// Exponent for the one_minus_cos_pow shape.
    #[arg(long, global = true, value_name = "INT")]
    pub n: Option<u32>,

    /// Global drive phase, radians.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub phi: Option<f64>,

    /// Protocol duration, in units of 1/omega0.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tau: Option<f64>,

    /// Overrides the point count of the sweep grids.
    #[arg(long, global = true, value_name = "INT")]
    pub grid_points: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Integrate one charging run and write the sampled trajectory.
    Simulate,
    /// Ergotropy and average power over a duration grid.
    SweepTau,
    /// Best average power over duration for each phase on a [0, 2pi] grid.
    SweepPhi,
    /// Stored energy and power on the full phase-by-duration grid.
    Contour,
    /// Peak-power ratio of the closed-loop protocol to the two-field
    /// baseline, printed to stdout.
    Ratio,
    /// Run the built-in consistency checks; exits nonzero on any failure.
    Validate,
}

impl Command {
    fn default_out(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate.csv",
            Command::SweepTau => "sweep_tau.csv",
            Command::SweepPhi => "sweep_phi.csv",
            Command::Contour => "contour.csv",
            Command::Ratio | Command::Validate => "",
        }
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => parse_config(&read_file(path)?)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut config, cli);
    config.check()?;
    let threads = thread_cap()?;
    with_max_threads(threads, || dispatch(cli, &config))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) {
    if let Some(shape) = cli.shape13 {
        config.shape13 = shape;
    }
    if let Some(n) = cli.n {
        config.n = n;
    }
    if let Some(phi) = cli.phi {
        config.phi = phi;
    }
    if let Some(tau) = cli.tau {
        config.tau = tau;
    }
    if let Some(points) = cli.grid_points {
        config.tau_grid.points = points;
        config.phi_grid.points = points;
    }
}

/// Parallelism cap from the environment: unset means the default thread pool,
/// an integer n >= 1 caps the pool at n threads.
fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("QBAT_THREADS") {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Env(format!(
                "QBAT_THREADS: expected a positive integer, got {raw:?}"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Env(format!("QBAT_THREADS: {e}"))),
    }
}

fn out_path(cli: &Cli, config: &RunConfig, command: Command) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(command.default_out()))
}

fn dispatch(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate => cmd_simulate(cli, config),
        Command::SweepTau => cmd_sweep_tau(cli, config),
        Command::SweepPhi => cmd_sweep_phi(cli, config),
        Command::Contour => cmd_contour(cli, config),
        Command::Ratio => cmd_ratio(config),
        Command::Validate => cmd_validate(config),
    }
}

fn cmd_simulate(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let spectrum = config.spectrum()?;
    let schedule = config.schedule()?;
    let trajectory = evolve(
        interaction_hamiltonian_fn(schedule),
        &DensityState::ground(),
        schedule.tau,
        &config.integrator_config(),
    )?;
    let mut csv = Csv::new("omega0_t,P1,P2,P3,energy_hbar_omega0,ergotropy_hbar_omega0");
    for (t, state) in trajectory.samples() {
        let p = populations(state);
        csv.row(&[
            *t,
            p[0],
            p[1],
            p[2],
            energy(state, &spectrum),
            ergotropy(state, &spectrum),
        ]);
    }
    csv.write_atomic(&out_path(cli, config, Command::Simulate))
}

fn cmd_sweep_tau(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let spectrum = config.spectrum()?;
    let family = config.family()?;
    let grid = config.tau_grid_values();
    let result = sweep_tau(&family, &spectrum, &grid, &config.integrator_config())?;
    let mut csv = Csv::new("omega0_tau,ergotropy_hbar_omega0,power_hbar_omega0_sq");
    for row in &result.rows {
        csv.row(&[row.omega0_tau, row.ergotropy, row.power]);
    }
    csv.write_atomic(&out_path(cli, config, Command::SweepTau))
}

fn cmd_sweep_phi(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let spectrum = config.spectrum()?;
    let family = config.family()?;
    let grid = config.phi_grid_values();
    let result = sweep_phi(
        &family,
        &spectrum,
        &grid,
        &config.search_settings(),
        &config.integrator_config(),
    )?;
    let mut csv = Csv::new("phi_rad,p_max_hbar_omega0_sq,omega0_tau_star,c_at_max_hbar_omega0");
    for row in &result.rows {
        csv.row(&[row.phi, row.p_max, row.tau_star, row.c_at_max]);
    }
    csv.write_atomic(&out_path(cli, config, Command::SweepPhi))
}

fn cmd_contour(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let spectrum = config.spectrum()?;
    let family = config.family()?;
    let phi_grid = config.phi_grid_values();
    let tau_grid = config.tau_grid_values();
    let result = contour(
        &family,
        &spectrum,
        &phi_grid,
        &tau_grid,
        &config.integrator_config(),
    )?;
    let mut csv = Csv::new("phi_rad,omega0_tau,energy_hbar_omega0,power_hbar_omega0_sq");
    for (i, phi) in result.phi_grid.iter().enumerate() {
        for (j, tau) in result.tau_grid.iter().enumerate() {
            csv.row(&[*phi, *tau, result.energy[i][j], result.power[i][j]]);
        }
    }
    csv.write_atomic(&out_path(cli, config, Command::Contour))
}

fn cmd_ratio(config: &RunConfig) -> Result<(), CliError> {
    let spectrum = config.spectrum()?;
    let shape13 = config.shape(config.shape13);
    let value = qbat_core::baseline_ratio(
        shape13,
        &spectrum,
        &config.search_settings(),
        &config.integrator_config(),
    )?;
    println!("{}", fmt_value(value));
    Ok(())
}

fn cmd_validate(config: &RunConfig) -> Result<(), CliError> {
    let mut failed = 0usize;
    let mut total = 0usize;
    for (name, outcome) in validation_checks(config) {
        total += 1;
        match outcome {
            Ok(()) => println!("ok: {name}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL: {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        println!("validate: {total}/{total} checks passed");
        Ok(())
    } else {
        Err(CliError::Validation { failed, total })
    }
}

type CheckResult = Result<(), String>;

fn validation_checks(config: &RunConfig) -> Vec<(&'static str, CheckResult)> {
    vec![
        ("config round-trip", check_round_trip(config)),
        ("eigensystem residuals", check_eigensystem()),
        ("population weight normalization", check_weights()),
        (
            "stationary-state charging values",
            check_stationary_values(),
        ),
        ("spectral gap bounds", check_gaps()),
        ("trajectory conservation laws", check_trajectory_audit()),
        ("frame equivalence", check_frame_equivalence()),
        ("power identity and determinism", check_sweep_identities()),
        ("duration search refinement", check_search_refinement()),
    ]
}

fn check_round_trip(config: &RunConfig) -> CheckResult {
    let text = serde_json::to_string(config).map_err(|e| e.to_string())?;
    let back = parse_config(&text).map_err(|e| e.to_string())?;
    if back == *config {
        Ok(())
    } else {
        Err("reparsed config differs from the original".into())
    }
}

/// Deterministic amplitude triples used by the closed-form checks.
fn amplitude_triples() -> Vec<(f64, f64, f64)> {
    let values = [0.2, 0.7, 1.4, 2.3];
    let mut triples = Vec::new();
    for &a in &values {
        for &b in &values {
            for &c in &values {
                triples.push((a, b, c));
            }
        }
    }
    triples
}

fn check_eigensystem() -> CheckResult {
    use qbat_core::{eigensystem_phi_half, phi_half_hamiltonian};

    let mut worst = 0.0f64;
    for (o12, o23, o13) in amplitude_triples() {
        let es = eigensystem_phi_half(o12, o23, o13).map_err(|e| e.to_string())?;
        let h = phi_half_hamiltonian(o12, o23, o13);
        for k in 0..3 {
            let v = es.states[k];
            let hv = h.mul_vec(&v);
            for i in 0..3 {
                worst = worst.max((hv[i] - v[i] * es.energies[k]).norm());
            }
        }
    }
    if worst < 1e-10 {
        Ok(())
    } else {
        Err(format!("worst eigenvalue residual {worst:.3e}"))
    }
}

fn check_weights() -> CheckResult {
    use qbat_core::omega_sq;

    for (o12, o23, o13) in amplitude_triples() {
        let sum = o23 * o23 + o13 * o13 + o12 * o12;
        let ratio = sum / omega_sq(o12, o23, o13);
        if ratio != 1.0 {
            return Err(format!("weight sum {ratio} at ({o12}, {o23}, {o13})"));
        }
    }
    Ok(())
}

fn check_stationary_values() -> CheckResult {
    use qbat_core::{adiabatic_ergotropy, BatterySpectrum, PulseSchedule, PulseShape};
    use std::f64::consts::FRAC_PI_2;

    let spectrum = BatterySpectrum::default();
    let schedule =
        PulseSchedule::closed_loop(PulseShape::SinPi, 1.0, FRAC_PI_2).map_err(|e| e.to_string())?;
    let start = adiabatic_ergotropy(&schedule, &spectrum, 0.0).map_err(|e| e.to_string())?;
    let mid = adiabatic_ergotropy(&schedule, &spectrum, 0.5).map_err(|e| e.to_string())?;
    let end = adiabatic_ergotropy(&schedule, &spectrum, 1.0).map_err(|e| e.to_string())?;
    if start.abs() > 1e-12 {
        return Err(format!("nonzero value {start:.3e} at t = 0"));
    }
    if (mid - 119.0 / 120.0).abs() > 1e-12 {
        return Err(format!("midpoint value {mid} is not 119/120"));
    }
    if (end - spectrum.c_max()).abs() > 1e-12 {
        return Err(format!("endpoint value {end} is not the capacity"));
    }
    Ok(())
}

fn check_gaps() -> CheckResult {
    use qbat_core::{min_gap, PulseSchedule, PulseShape};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    let open =
        PulseSchedule::closed_loop(PulseShape::Zero, 1.0, FRAC_PI_2).map_err(|e| e.to_string())?;
    let gap = min_gap(&open);
    if (gap - FRAC_1_SQRT_2).abs() > 1e-9 {
        return Err(format!("two-field gap {gap} is not 1/sqrt(2)"));
    }
    let sin =
        PulseSchedule::closed_loop(PulseShape::SinPi, 1.0, FRAC_PI_2).map_err(|e| e.to_string())?;
    let gap = min_gap(&sin);
    if (gap - 0.956028594609).abs() > 1e-6 {
        return Err(format!("sin gap {gap} moved off its pinned value"));
    }
    Ok(())
}

fn check_trajectory_audit() -> CheckResult {
    use qbat_core::{IntegratorConfig, PulseSchedule, PulseShape};
    use std::f64::consts::FRAC_PI_2;

    let schedule = PulseSchedule::closed_loop(PulseShape::SinPi, 10.0, FRAC_PI_2)
        .map_err(|e| e.to_string())?;
    let trajectory = evolve(
        interaction_hamiltonian_fn(schedule),
        &DensityState::ground(),
        schedule.tau,
        &IntegratorConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    if trajectory.max_trace_drift > 1e-8 {
        return Err(format!("trace drift {:.3e}", trajectory.max_trace_drift));
    }
    if trajectory.max_hermiticity_defect > 1e-10 {
        return Err(format!(
            "hermiticity defect {:.3e}",
            trajectory.max_hermiticity_defect
        ));
    }
    let purity_drift = trajectory
        .samples()
        .iter()
        .map(|(_, state)| (state.purity() - 1.0).abs())
        .fold(0.0f64, f64::max);
    if purity_drift > 1e-6 {
        return Err(format!("purity drift {purity_drift:.3e}"));
    }
    Ok(())
}

fn check_frame_equivalence() -> CheckResult {
    use qbat_core::{
        evolve_lab_frame_equivalence, BatterySpectrum, IntegratorConfig, LabFrameDrive,
        PulseSchedule, PulseShape,
    };
    use std::f64::consts::FRAC_PI_2;

    let spectrum = BatterySpectrum::default();
    let schedule = PulseSchedule::closed_loop(PulseShape::SinPi, 10.0, FRAC_PI_2)
        .map_err(|e| e.to_string())?;
    let drive = LabFrameDrive::resonant(schedule, &spectrum);
    let (lab, interaction) = evolve_lab_frame_equivalence(
        &spectrum,
        &drive,
        &DensityState::ground(),
        &IntegratorConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for ((t_lab, s_lab), (t_int, s_int)) in lab.samples().iter().zip(interaction.samples().iter()) {
        if t_lab != t_int {
            return Err(format!("sample times diverge at {t_lab} vs {t_int}"));
        }
        let (p_lab, p_int) = (populations(s_lab), populations(s_int));
        for k in 0..3 {
            worst = worst.max((p_lab[k] - p_int[k]).abs());
        }
    }
    if worst < 1e-6 {
        Ok(())
    } else {
        Err(format!("worst population gap {worst:.3e}"))
    }
}

fn check_sweep_identities() -> CheckResult {
    use qbat_core::{geomspace, BatterySpectrum, IntegratorConfig, PulseShape, ScheduleFamily};
    use std::f64::consts::{FRAC_PI_2, TAU as TWO_PI};

    let spectrum = BatterySpectrum::default();
    let family =
        ScheduleFamily::closed_loop(PulseShape::SinPi, FRAC_PI_2).map_err(|e| e.to_string())?;
    let grid = geomspace(0.5, 4.0, 8);
    let config = IntegratorConfig::default();
    let first = sweep_tau(&family, &spectrum, &grid, &config).map_err(|e| e.to_string())?;
    for row in &first.rows {
        if (row.power * row.omega0_tau - row.ergotropy).abs() > 1e-10 {
            return Err(format!(
                "P * tau differs from C at tau = {}",
                row.omega0_tau
            ));
        }
    }
    let second = sweep_tau(&family, &spectrum, &grid, &config).map_err(|e| e.to_string())?;
    if first != second {
        return Err("repeated sweep is not bit-identical".into());
    }
    let shifted = sweep_tau(
        &family.with_phi(FRAC_PI_2 + TWO_PI),
        &spectrum,
        &grid,
        &config,
    )
    .map_err(|e| e.to_string())?;
    if first != shifted {
        return Err("full-turn phase shift changed the sweep".into());
    }
    Ok(())
}

fn check_search_refinement() -> CheckResult {
    use qbat_core::{
        geomspace, max_power_over_tau, BatterySpectrum, IntegratorConfig, PulseShape,
        ScheduleFamily, SearchSettings,
    };
    use std::f64::consts::FRAC_PI_2;

    let spectrum = BatterySpectrum::default();
    let family =
        ScheduleFamily::closed_loop(PulseShape::SinPi, FRAC_PI_2).map_err(|e| e.to_string())?;
    let search = SearchSettings {
        tau_min: 0.5,
        tau_max: 4.0,
        coarse_points: 8,
        tolerance: 1e-3,
    };
    let config = IntegratorConfig::default();
    let best =
        max_power_over_tau(&family, &spectrum, &search, &config).map_err(|e| e.to_string())?;
    let coarse = sweep_tau(
        &family,
        &spectrum,
        &geomspace(search.tau_min, search.tau_max, search.coarse_points),
        &config,
    )
    .map_err(|e| e.to_string())?;
    let coarse_best = coarse.rows.iter().map(|r| r.power).fold(f64::MIN, f64::max);
    if best.p_max + 1e-12 < coarse_best {
        return Err(format!(
            "refined power {} fell below the coarse best {}",
            best.p_max, coarse_best
        ));
    }
    if !(search.tau_min..=search.tau_max).contains(&best.tau_star) {
        return Err(format!("tau* = {} escaped the search range", best.tau_star));
    }
    Ok(())
}
