//! Grid sweeps and power optimization over protocol duration and drive phase.
//!
//! Cell evaluations are independent and run on the rayon pool when the
//! `parallel` feature is on (the default); results are always assembled in
//! grid order, so parallel and serial builds produce identical output.

use std::f64::consts::{FRAC_PI_2, TAU as TWO_PI};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::dynamics::{
    evolve_endpoints, interaction_hamiltonian_fn, DensityState, IntegratorConfig,
};
use crate::error::{Error, Result};
use crate::hamiltonian::BatterySpectrum;
use crate::metrics::{average_power, ergotropy};
use crate::pulse::{PulseSchedule, PulseShape};
use crate::spectral::omega_sq;

const NORM_SCAN_INTERVALS: usize = 4096;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// A charging protocol with every knob fixed except the duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleFamily {
    pub shape12: PulseShape,
    pub shape23: PulseShape,
    pub shape13: PulseShape,
    pub omega0: f64,
    pub phi: f64,
}

impl ScheduleFamily {
    pub fn new(
        shape12: PulseShape,
        shape23: PulseShape,
        shape13: PulseShape,
        omega0: f64,
        phi: f64,
    ) -> Result<Self> {
        PulseSchedule::new(shape12, shape23, shape13, omega0, 1.0, phi)?;
        Ok(Self {
            shape12,
            shape23,
            shape13,
            omega0,
            phi,
        })
    }

    /// The counterintuitive-ordering pair plus a direct 1-3 coupling.
    pub fn closed_loop(shape13: PulseShape, phi: f64) -> Result<Self> {
        Self::new(
            PulseShape::LinearRampUp,
            PulseShape::LinearRampDown,
            shape13,
            1.0,
            phi,
        )
    }

    /// The two-pulse reference protocol with no 1-3 coupling.
    pub fn open_loop() -> Self {
        Self::closed_loop(PulseShape::Zero, 0.0).expect("reference family is valid")
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self { phi, ..*self }
    }

    pub fn at_tau(&self, tau: f64) -> Result<PulseSchedule> {
        PulseSchedule::new(
            self.shape12,
            self.shape23,
            self.shape13,
            self.omega0,
            tau,
            self.phi,
        )
    }

    /// Duration-independent bound on the Frobenius norm of the drive
    /// Hamiltonian, `sqrt(2) * max_s Omega(s)`, from a dense scan of the
    /// normalized shapes. Sharing one bound across a sweep keeps every cell's
    /// step count proportional to its tau, which makes columns of different
    /// sweeps bitwise comparable.
    pub fn norm_scale(&self) -> f64 {
        let mut peak_sq = 0.0f64;
        for k in 0..=NORM_SCAN_INTERVALS {
            let s = k as f64 / NORM_SCAN_INTERVALS as f64;
            let w = omega_sq(
                self.shape12.eval(s),
                self.shape23.eval(s),
                self.shape13.eval(s),
            );
            peak_sq = peak_sq.max(w);
        }
        std::f64::consts::SQRT_2 * self.omega0 * peak_sq.sqrt()
    }
}

/// Settings for the duration search in [`max_power_over_tau`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub tau_min: f64,
    pub tau_max: f64,
    pub coarse_points: usize,
    pub tolerance: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            tau_min: 0.1,
            tau_max: 50.0,
            coarse_points: 128,
            tolerance: 1e-4,
        }
    }
}

impl SearchSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_min > 0.0 && self.tau_min < self.tau_max && self.tau_max <= 200.0) {
            return Err(Error::Search(format!(
                "duration range must satisfy 0 < tau_min < tau_max <= 200, got [{}, {}]",
                self.tau_min, self.tau_max
            )));
        }
        if self.coarse_points < 8 {
            return Err(Error::Search(format!(
                "coarse grid needs at least 8 points, got {}",
                self.coarse_points
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Search(format!(
                "search tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// One duration sample: ergotropy at the end of the run and its average power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauRow {
    pub omega0_tau: f64,
    pub ergotropy: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSweepResult {
    pub rows: Vec<TauRow>,
}

/// Outcome of the duration search: the best duration found, the power there,
/// and the ergotropy it corresponds to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPowerResult {
    pub tau_star: f64,
    pub p_max: f64,
    pub c_at_max: f64,
}

/// One phase sample of [`sweep_phi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiRow {
    pub phi: f64,
    pub p_max: f64,
    pub tau_star: f64,
    pub c_at_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSweepResult {
    pub rows: Vec<PhiRow>,
}

/// Stored energy and power on a phase-by-duration grid; `energy[i][j]` pairs
/// `phi_grid[i]` with `tau_grid[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourResult {
    pub phi_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub energy: Vec<Vec<f64>>,
    pub power: Vec<Vec<f64>>,
}

/// `n` evenly spaced points from `a` to `b`, both endpoints exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least 2 points");
    (0..n)
        .map(|k| {
            if k == n - 1 {
                b
            } else {
                a + (b - a) * (k as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// `n` geometrically spaced points from `a` to `b` (`0 < a < b`), both
/// endpoints exact.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "geomspace needs at least 2 points");
    assert!(a > 0.0 && b > a, "geomspace needs 0 < a < b");
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|k| match k {
            0 => a,
            _ if k == n - 1 => b,
            _ => (la + (lb - la) * (k as f64 / (n - 1) as f64)).exp(),
        })
        .collect()
}

/// Runs `f` on a rayon pool capped at `threads` workers; `None` uses the
/// default pool. Serial builds ignore the cap.
#[cfg(feature = "parallel")]
pub fn with_max_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("scoped thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_max_threads<R, F>(_threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    f()
}

#[cfg(feature = "parallel")]
fn try_map<T, U, F>(items: Vec<T>, f: F) -> Result<Vec<U>>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U> + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn try_map<T, U, F>(items: Vec<T>, f: F) -> Result<Vec<U>>
where
    F: Fn(T) -> Result<U>,
{
    items.into_iter().map(f).collect()
}

fn in_cell(at: String, e: Error) -> Error {
    Error::Cell {
        at,
        source: Box::new(e),
    }
}

fn charge_at(
    schedule: PulseSchedule,
    spectrum: &BatterySpectrum,
    config: &IntegratorConfig,
) -> Result<(f64, f64)> {
    let tau = schedule.tau;
    let trajectory = evolve_endpoints(
        interaction_hamiltonian_fn(schedule),
        &DensityState::ground(),
        tau,
        config,
    )?;
    let c = ergotropy(trajectory.final_state(), spectrum);
    let p = average_power(c, tau)?;
    Ok((c, p))
}

fn cell_config(family: &ScheduleFamily, config: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig {
        norm_scale: Some(config.norm_scale.unwrap_or_else(|| family.norm_scale())),
        ..*config
    }
}

fn check_grid(name: &str, grid: &[f64], positive: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Search(format!("{name} grid is empty")));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Search(format!(
                "{name} grid must be strictly ascending, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if !grid.iter().all(|x| x.is_finite()) {
        return Err(Error::Search(format!("{name} grid has non-finite entries")));
    }
    if positive && grid[0] <= 0.0 {
        return Err(Error::Search(format!(
            "{name} grid must be positive, got {}",
            grid[0]
        )));
    }
    Ok(())
}

/// Evaluates ergotropy and average power at every duration in `tau_grid`.
pub fn sweep_tau(
    family: &ScheduleFamily,
    spectrum: &BatterySpectrum,
    tau_grid: &[f64],
    config: &IntegratorConfig,
) -> Result<TauSweepResult> {
    check_grid("tau", tau_grid, true)?;
    let cfg = cell_config(family, config);
    let rows = try_map(tau_grid.to_vec(), |tau| {
        let schedule = family.at_tau(tau)?;
        let (c, p) =
            charge_at(schedule, spectrum, &cfg).map_err(|e| in_cell(format!("tau = {tau}"), e))?;
        Ok(TauRow {
            omega0_tau: family.omega0 * tau,
            ergotropy: c,
            power: p,
        })
    })?;
    Ok(TauSweepResult { rows })
}

struct Probe {
    tau: f64,
    c: f64,
    p: f64,
}

fn probe_at(
    family: &ScheduleFamily,
    spectrum: &BatterySpectrum,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<Probe> {
    let schedule = family.at_tau(tau)?;
    let (c, p) =
        charge_at(schedule, spectrum, cfg).map_err(|e| in_cell(format!("tau = {tau}"), e))?;
    if !p.is_finite() {
        return Err(Error::NonFinitePower { tau });
    }
    Ok(Probe { tau, c, p })
}

fn better(candidate: &Probe, incumbent: &Probe) -> bool {
    candidate.p > incumbent.p || (candidate.p == incumbent.p && candidate.tau < incumbent.tau)
}

fn max_power_with_config(
    family: &ScheduleFamily,
    spectrum: &BatterySpectrum,
    search: &SearchSettings,
    cfg: &IntegratorConfig,
) -> Result<MaxPowerResult> {
    search.validate()?;
    let grid = geomspace(search.tau_min, search.tau_max, search.coarse_points);
    let coarse = try_map(grid.clone(), |tau| probe_at(family, spectrum, tau, cfg))?;

    let mut best_i = 0;
    for (i, probe) in coarse.iter().enumerate() {
        if probe.p > coarse[best_i].p {
            best_i = i;
        }
    }
    let mut best = Probe {
        tau: coarse[best_i].tau,
        c: coarse[best_i].c,
        p: coarse[best_i].p,
    };

    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(grid.len() - 1)];
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut p1 = probe_at(family, spectrum, x1, cfg)?;
    let mut p2 = probe_at(family, spectrum, x2, cfg)?;
    if better(&p1, &best) {
        best = Probe { ..p1 };
    }
    if better(&p2, &best) {
        best = Probe { ..p2 };
    }
    while b - a > search.tolerance {
        if p1.p < p2.p {
            a = x1;
            x1 = x2;
            p1 = p2;
            x2 = a + INV_PHI * (b - a);
            p2 = probe_at(family, spectrum, x2, cfg)?;
            if better(&p2, &best) {
                best = Probe { ..p2 };
            }
        } else {
            b = x2;
            x2 = x1;
            p2 = p1;
            x1 = b - INV_PHI * (b - a);
            p1 = probe_at(family, spectrum, x1, cfg)?;
            if better(&p1, &best) {
                best = Probe { ..p1 };
            }
        }
    }

    Ok(MaxPowerResult {
        tau_star: best.tau,
        p_max: best.p,
        c_at_max: best.c,
    })
}

/// Finds the duration maximizing average power: a geometric coarse scan over
/// `[tau_min, tau_max]` followed by a golden-section refinement around the
/// best grid point. The result is never worse than the best coarse sample,
/// and exact ties resolve toward the shorter duration.
pub fn max_power_over_tau(
    family: &ScheduleFamily,
    spectrum: &BatterySpectrum,
    search: &SearchSettings,
    config: &IntegratorConfig,
) -> Result<MaxPowerResult> {
    let cfg = cell_config(family, config);
    max_power_with_config(family, spectrum, search, &cfg)
}

/// Runs the duration search at every phase in `phi_grid`, which must span
/// `[0, 2pi]`.
pub fn sweep_phi(
    family: &ScheduleFamily,
    spectrum: &BatterySpectrum,
    phi_grid: &[f64],
    search: &SearchSettings,
    config: &IntegratorConfig,
) -> Result<PhiSweepResult> {
    check_grid("phi", phi_grid, false)?;
    if phi_grid[0] > 1e-9 || *phi_grid.last().unwrap() < TWO_PI - 1e-9 {
        return Err(Error::Search(format!(
            "phi grid must cover [0, 2pi], got [{}, {}]",
            phi_grid[0],
            phi_grid.last().unwrap()
        )));
    }
    search.validate()?;
    let cfg = cell_config(family, config);
    let rows = try_map(phi_grid.to_vec(), |phi| {
        let result = max_power_with_config(&family.with_phi(phi), spectrum, search, &cfg)
            .map_err(|e| in_cell(format!("phi = {phi}"), e))?;
        Ok(PhiRow {
            phi,
            p_max: result.p_max,
            tau_star: result.tau_star,
            c_at_max: result.c_at_max,
        })
    })?;
    Ok(PhiSweepResult { rows })
}

/// Stored energy and power over the full phase-by-duration grid.
pub fn contour(
    family: &ScheduleFamily,
    spectrum: &BatterySpectrum,
    phi_grid: &[f64],
    tau_grid: &[f64],
    config: &IntegratorConfig,
) -> Result<ContourResult> {
    check_grid("phi", phi_grid, false)?;
    check_grid("tau", tau_grid, true)?;
    let cfg = cell_config(family, config);
    let cells: Vec<(f64, f64)> = phi_grid
        .iter()
        .flat_map(|&phi| tau_grid.iter().map(move |&tau| (phi, tau)))
        .collect();
    let flat = try_map(cells, |(phi, tau)| {
        let schedule = family.with_phi(phi).at_tau(tau)?;
        let (c, p) = charge_at(schedule, spectrum, &cfg)
            .map_err(|e| in_cell(format!("phi = {phi}, tau = {tau}"), e))?;
        Ok((c + spectrum.eps1(), p))
    })?;
    let nt = tau_grid.len();
    let energy = flat
        .chunks(nt)
        .map(|row| row.iter().map(|cell| cell.0).collect())
        .collect();
    let power = flat
        .chunks(nt)
        .map(|row| row.iter().map(|cell| cell.1).collect())
        .collect();
    Ok(ContourResult {
        phi_grid: phi_grid.to_vec(),
        tau_grid: tau_grid.to_vec(),
        energy,
        power,
    })
}

/// Peak-power gain of a closed-loop protocol at phase pi/2 over the
/// open-loop reference, both sides searched with the same settings.
pub fn baseline_ratio(
    shape13: PulseShape,
    spectrum: &BatterySpectrum,
    search: &SearchSettings,
    config: &IntegratorConfig,
) -> Result<f64> {
    if shape13 == PulseShape::Zero {
        return Err(Error::BaselineShape);
    }
    let closed = ScheduleFamily::closed_loop(shape13, FRAC_PI_2)?;
    let open = ScheduleFamily::open_loop();
    let boosted = max_power_over_tau(&closed, spectrum, search, config)?;
    let reference = max_power_over_tau(&open, spectrum, search, config)?;
    Ok(boosted.p_max / reference.p_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quick_search() -> SearchSettings {
        SearchSettings {
            tau_min: 0.5,
            tau_max: 6.0,
            coarse_points: 16,
            tolerance: 1e-3,
        }
    }

    fn config() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn settings_validation() {
        assert!(SearchSettings::default().validate().is_ok());
        for bad in [
            SearchSettings {
                tau_min: 0.0,
                ..SearchSettings::default()
            },
            SearchSettings {
                tau_max: 201.0,
                ..SearchSettings::default()
            },
            SearchSettings {
                tau_min: 5.0,
                tau_max: 2.0,
                ..SearchSettings::default()
            },
            SearchSettings {
                coarse_points: 7,
                ..SearchSettings::default()
            },
            SearchSettings {
                tolerance: 0.0,
                ..SearchSettings::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Search(_))));
        }
    }

    #[test]
    fn tau_sweep_power_matches_ergotropy() {
        let family = ScheduleFamily::closed_loop(PulseShape::SinPi, FRAC_PI_2).unwrap();
        let spectrum = BatterySpectrum::default();
        let grid = [0.5, 1.0, 2.0, 4.0];
        let sweep = sweep_tau(&family, &spectrum, &grid, &config()).unwrap();
        assert_eq!(sweep.rows.len(), 4);
        for (tau, row) in grid.iter().zip(&sweep.rows) {
            assert_eq!(row.omega0_tau, *tau);
            assert!((row.power * tau - row.ergotropy).abs() < 1e-10);
            assert!(row.ergotropy >= -1e-12 && row.ergotropy <= 1.95 + 1e-9);
        }
    }

    #[test]
    fn tau_sweep_rejects_bad_grids() {
        let family = ScheduleFamily::open_loop();
        let spectrum = BatterySpectrum::default();
        for grid in [vec![], vec![1.0, 1.0], vec![2.0, 1.0], vec![-1.0, 1.0]] {
            assert!(sweep_tau(&family, &spectrum, &grid, &config()).is_err());
        }
    }

    #[test]
    fn refinement_never_loses_to_coarse_scan() {
        let family = ScheduleFamily::closed_loop(PulseShape::SinPi, FRAC_PI_2).unwrap();
        let spectrum = BatterySpectrum::default();
        let search = quick_search();
        let found = max_power_over_tau(&family, &spectrum, &search, &config()).unwrap();
        let coarse_grid = geomspace(search.tau_min, search.tau_max, search.coarse_points);
        let coarse = sweep_tau(&family, &spectrum, &coarse_grid, &config()).unwrap();
        let coarse_best = coarse.rows.iter().map(|r| r.power).fold(f64::MIN, f64::max);
        assert!(found.p_max >= coarse_best);
        assert!((found.p_max * found.tau_star - found.c_at_max).abs() < 1e-10);
        assert!(found.tau_star >= search.tau_min && found.tau_star <= search.tau_max);
    }

    #[test]
    fn search_is_deterministic() {
        let family = ScheduleFamily::closed_loop(PulseShape::OneMinusCosPow(1), FRAC_PI_2).unwrap();
        let spectrum = BatterySpectrum::default();
        let a = max_power_over_tau(&family, &spectrum, &quick_search(), &config()).unwrap();
        let b = max_power_over_tau(&family, &spectrum, &quick_search(), &config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_turn_phase_shift_changes_nothing() {
        let spectrum = BatterySpectrum::default();
        let base = ScheduleFamily::closed_loop(PulseShape::SinPi, 0.3).unwrap();
        let shifted = base.with_phi(0.3 + TWO_PI);
        let a = max_power_over_tau(&base, &spectrum, &quick_search(), &config()).unwrap();
        let b = max_power_over_tau(&shifted, &spectrum, &quick_search(), &config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phi_sweep_requires_full_cover() {
        let family = ScheduleFamily::closed_loop(PulseShape::SinPi, 0.0).unwrap();
        let spectrum = BatterySpectrum::default();
        let partial = linspace(0.0, 3.0, 5);
        assert!(matches!(
            sweep_phi(&family, &spectrum, &partial, &quick_search(), &config()),
            Err(Error::Search(_))
        ));
    }

    #[test]
    fn contour_shape_and_identities() {
        let family = ScheduleFamily::closed_loop(PulseShape::SinPi, 0.0).unwrap();
        let spectrum = BatterySpectrum::default();
        let phi_grid = linspace(0.0, TWO_PI, 5);
        let tau_grid = [1.0, 2.0];
        let result = contour(&family, &spectrum, &phi_grid, &tau_grid, &config()).unwrap();
        assert_eq!(result.energy.len(), 5);
        assert_eq!(result.energy[0].len(), 2);
        for i in 0..5 {
            for (j, &tau) in tau_grid.iter().enumerate() {
                let c = result.energy[i][j] - spectrum.eps1();
                assert!((result.power[i][j] * tau - c).abs() < 1e-10);
            }
        }
        for j in 0..2 {
            assert!((result.energy[0][j] - result.energy[4][j]).abs() < 1e-8);
        }
    }

    #[test]
    fn baseline_shape_is_rejected() {
        let spectrum = BatterySpectrum::default();
        assert_eq!(
            baseline_ratio(PulseShape::Zero, &spectrum, &quick_search(), &config()),
            Err(Error::BaselineShape)
        );
    }

    #[test]
    fn scoped_thread_cap_matches_default_pool() {
        let family = ScheduleFamily::closed_loop(PulseShape::SinPi, FRAC_PI_2).unwrap();
        let spectrum = BatterySpectrum::default();
        let grid = [0.5, 1.0, 2.0];
        let pooled = sweep_tau(&family, &spectrum, &grid, &config()).unwrap();
        let capped =
            with_max_threads(Some(1), || sweep_tau(&family, &spectrum, &grid, &config())).unwrap();
        assert_eq!(pooled, capped);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn linspace_hits_endpoints(a in -50.0f64..50.0, span in 0.1f64..100.0, n in 2usize..300) {
            let b = a + span;
            let grid = linspace(a, b, n);
            prop_assert_eq!(grid.len(), n);
            prop_assert_eq!(grid[0], a);
            prop_assert_eq!(*grid.last().unwrap(), b);
            for w in grid.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
        }

        #[test]
        fn geomspace_hits_endpoints(a in 1e-3f64..10.0, factor in 1.1f64..1e3, n in 2usize..300) {
            let b = a * factor;
            let grid = geomspace(a, b, n);
            prop_assert_eq!(grid.len(), n);
            prop_assert_eq!(grid[0], a);
            prop_assert_eq!(*grid.last().unwrap(), b);
            for w in grid.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
        }
    }
}
