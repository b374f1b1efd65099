//! Closed-form eigensystem of the phase-pi/2 Hamiltonian, the dark-state
//! ergotropy along a schedule, and adiabaticity diagnostics.

use std::f64::consts::{FRAC_PI_2, TAU as TWO_PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::BatterySpectrum;
use crate::linalg::{eigh, Matrix3};
use crate::pulse::{eval_pulses, PulseSchedule};

/// `omega23^2 + omega13^2 + omega12^2`, the squared gap between the zero mode
/// and the split modes.
///
/// The terms are summed in exactly this order. The dark-state population
/// weights use the same three squares, so summing them in this order and
/// dividing by this function is exactly 1.0 in floating point, not merely
/// close to it.
pub fn omega_sq(o12: f64, o23: f64, o13: f64) -> f64 {
    o23 * o23 + o13 * o13 + o12 * o12
}

/// `omega13^2 + omega23^2`, the auxiliary amplitude of the split eigenvectors.
pub fn omega1_sq(o23: f64, o13: f64) -> f64 {
    o13 * o13 + o23 * o23
}

/// Instantaneous eigensystem at global phase pi/2: energies
/// `(-Omega, 0, +Omega)` and their states, index 1 being the dark state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub energies: [f64; 3],
    /// `states[k]` is the eigenvector for `energies[k]`.
    pub states: [[Complex64; 3]; 3],
}

impl EigenSystem {
    /// The zero-energy state that carries the population transfer.
    pub fn dark_state(&self) -> [Complex64; 3] {
        self.states[1]
    }
}

/// Closed-form eigensystem for amplitudes `(omega12, omega23, omega13)` at
/// global phase pi/2.
///
/// Fails where the formulas hit 0/0: `omega1 = 0`, which on the default
/// schedule family happens at `t = tau`. Callers then fall back to
/// [`eigensystem_numeric`].
pub fn eigensystem_phi_half(o12: f64, o23: f64, o13: f64) -> Result<EigenSystem> {
    let w = omega_sq(o12, o23, o13);
    let w1 = omega1_sq(o23, o13);
    if w1 == 0.0 {
        return Err(Error::FormulaSingular { omega12: o12 });
    }
    let om = w.sqrt();
    let om1 = w1.sqrt();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    let dark = [
        Complex64::new(o23 / om, 0.0),
        Complex64::new(0.0, o13 / om),
        Complex64::new(-o12 / om, 0.0),
    ];
    let r = o12 * o23 / (om * om1);
    let q = o13 / om1;
    let p = o12 * o13 / (om * om1);
    let s = o23 / om1;
    let z = om1 / om;
    let minus = [
        Complex64::new(r, -q) * inv_sqrt2,
        -Complex64::new(s, -p) * inv_sqrt2,
        Complex64::new(z, 0.0) * inv_sqrt2,
    ];
    let plus = [
        Complex64::new(r, q) * inv_sqrt2,
        Complex64::new(s, p) * inv_sqrt2,
        Complex64::new(z, 0.0) * inv_sqrt2,
    ];
    Ok(EigenSystem {
        energies: [-om, 0.0, om],
        states: [minus, dark, plus],
    })
}

/// The phase-pi/2 Hamiltonian for bare amplitudes, used by the numeric
/// fallback and by residual checks.
pub fn phi_half_hamiltonian(o12: f64, o23: f64, o13: f64) -> Matrix3 {
    let z = Complex64::ZERO;
    Matrix3::new([
        [z, Complex64::new(o12, 0.0), Complex64::new(0.0, o13)],
        [Complex64::new(o12, 0.0), z, Complex64::new(o23, 0.0)],
        [Complex64::new(0.0, -o13), Complex64::new(o23, 0.0), z],
    ])
}

fn fix_phase(v: &mut [Complex64; 3]) {
    let mut imax = 0;
    for i in 1..3 {
        if v[i].norm() > v[imax].norm() {
            imax = i;
        }
    }
    let lead = v[imax];
    if lead.norm() > 0.0 {
        let rot = lead.conj() / lead.norm();
        for e in v.iter_mut() {
            *e *= rot;
        }
    }
}

fn overlap(a: &[Complex64; 3], b: &[Complex64; 3]) -> f64 {
    let mut s = Complex64::ZERO;
    for i in 0..3 {
        s += a[i].conj() * b[i];
    }
    s.norm()
}

/// Numeric eigensystem by Jacobi rotations. Eigenvector phases follow a fixed
/// rule (largest-magnitude component made real positive) so results are
/// deterministic; when `prev` is given the three states are reordered to
/// maximize overlap with it, which keeps labels continuous across points
/// where the closed forms are singular.
pub fn eigensystem_numeric(h: &Matrix3, prev: Option<&EigenSystem>) -> Result<EigenSystem> {
    let es = eigh(h)?;
    let mut states = [[Complex64::ZERO; 3]; 3];
    for (k, state) in states.iter_mut().enumerate() {
        *state = es.vector(k);
        fix_phase(state);
    }
    let mut energies = es.values;

    if let Some(prev) = prev {
        let mut order = [0usize, 1, 2];
        let mut best = f64::NEG_INFINITY;
        for candidate in [
            [0usize, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let score: f64 = (0..3)
                .map(|k| overlap(&prev.states[k], &states[candidate[k]]))
                .sum();
            if score > best {
                best = score;
                order = candidate;
            }
        }
        states = [states[order[0]], states[order[1]], states[order[2]]];
        energies = [energies[order[0]], energies[order[1]], energies[order[2]]];
    }

    Ok(EigenSystem { energies, states })
}

fn require_phase_pi_half(phi: f64) -> Result<()> {
    if (phi.rem_euclid(TWO_PI) - FRAC_PI_2).abs() > 1e-12 {
        return Err(Error::PhaseContract { phi });
    }
    Ok(())
}

/// Eigensystem at time `t` along a phase-pi/2 schedule: the closed forms where
/// they hold, the numeric fallback with continuity matching at their singular
/// points.
pub fn eigensystem_at(
    schedule: &PulseSchedule,
    t: f64,
    prev: Option<&EigenSystem>,
) -> Result<EigenSystem> {
    require_phase_pi_half(schedule.phi)?;
    let (o12, o23, o13) = eval_pulses(schedule, t)?;
    match eigensystem_phi_half(o12, o23, o13) {
        Ok(es) => Ok(es),
        Err(Error::FormulaSingular { .. }) => {
            eigensystem_numeric(&phi_half_hamiltonian(o12, o23, o13), prev)
        }
        Err(e) => Err(e),
    }
}

/// Ergotropy of the instantaneous dark state at time `t`.
///
/// Only defined at global phase pi/2, where the dark state has the closed
/// form behind this weighting; any other phase is a contract violation.
pub fn adiabatic_ergotropy(
    schedule: &PulseSchedule,
    spectrum: &BatterySpectrum,
    t: f64,
) -> Result<f64> {
    require_phase_pi_half(schedule.phi)?;
    let (o12, o23, o13) = eval_pulses(schedule, t)?;
    let w = omega_sq(o12, o23, o13);
    if w == 0.0 {
        return Err(Error::FormulaSingular { omega12: o12 });
    }
    let [e1, e2, e3] = spectrum.eps();
    Ok((o23 * o23 * e1 + o13 * o13 * e2 + o12 * o12 * e3) / w - e1)
}

/// Dark-state ergotropy sampled on `points` evenly spaced times across the
/// schedule.
#[derive(Debug, Clone)]
pub struct AdiabaticCurve {
    pub samples: Vec<(f64, f64)>,
}

pub fn adiabatic_curve(
    schedule: &PulseSchedule,
    spectrum: &BatterySpectrum,
    points: usize,
) -> Result<AdiabaticCurve> {
    if points < 2 {
        return Err(Error::Search(format!(
            "adiabatic curve needs at least 2 points, got {points}"
        )));
    }
    let n = points - 1;
    let mut samples = Vec::with_capacity(points);
    for k in 0..=n {
        let t = if k == n {
            schedule.tau
        } else {
            schedule.tau * (k as f64 / n as f64)
        };
        samples.push((t, adiabatic_ergotropy(schedule, spectrum, t)?));
    }
    Ok(AdiabaticCurve { samples })
}

const GAP_SCAN_INTERVALS: usize = 4096;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Smallest instantaneous gap `Omega(t)` over the schedule: a dense-grid scan
/// polished by a golden-section descent around the best grid point.
pub fn min_gap(schedule: &PulseSchedule) -> f64 {
    let gap_at = |t: f64| {
        let (o12, o23, o13) = eval_pulses(schedule, t).expect("t inside the pulse window");
        omega_sq(o12, o23, o13).sqrt()
    };
    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..=GAP_SCAN_INTERVALS {
        let t = if k == GAP_SCAN_INTERVALS {
            schedule.tau
        } else {
            schedule.tau * (k as f64 / GAP_SCAN_INTERVALS as f64)
        };
        let g = gap_at(t);
        if g < best {
            best = g;
            best_k = k;
        }
    }
    let grid_t =
        |k: usize| schedule.tau * (k.min(GAP_SCAN_INTERVALS) as f64 / GAP_SCAN_INTERVALS as f64);
    let mut a = grid_t(best_k.saturating_sub(1));
    let mut b = grid_t(best_k + 1);
    while b - a > 1e-12 * schedule.tau {
        let x1 = b - INV_PHI * (b - a);
        let x2 = a + INV_PHI * (b - a);
        if gap_at(x1) < gap_at(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.min(gap_at(0.5 * (a + b)))
}

/// Advisory flag: protocols shorter than `omega0 tau = 10` are fast enough
/// that dark-state following cannot be assumed.
pub fn is_non_adiabatic(schedule: &PulseSchedule) -> bool {
    schedule.omega0 * schedule.tau < 10.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::PulseShape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(h: &Matrix3, es: &EigenSystem) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..3 {
            let v = es.states[k];
            let hv = h.mul_vec(&v);
            for i in 0..3 {
                worst = worst.max((hv[i] - v[i] * es.energies[k]).norm());
            }
        }
        worst
    }

    fn gram_defect(es: &EigenSystem) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                let mut s = Complex64::ZERO;
                for i in 0..3 {
                    s += es.states[a][i].conj() * es.states[b][i];
                }
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        worst
    }

    #[test]
    fn start_of_protocol_dark_state_is_ground() {
        let es = eigensystem_phi_half(0.0, 1.0, 0.0).unwrap();
        assert_eq!(es.energies[1], 0.0);
        assert!((es.energies[2] - 1.0).abs() < 1e-15);
        assert!((es.energies[0] + 1.0).abs() < 1e-15);
        let dark = es.dark_state();
        assert!((dark[0] - Complex64::ONE).norm() < 1e-15);
        assert!(dark[1].norm() < 1e-15 && dark[2].norm() < 1e-15);
    }

    #[test]
    fn end_of_protocol_dark_state_approaches_top_level() {
        let es = eigensystem_phi_half(1.0, 1e-9, 0.0).unwrap();
        let dark = es.dark_state();
        assert!((dark[2].norm() - 1.0).abs() < 1e-12);
        assert!(dark[0].norm() < 1e-8);
    }

    #[test]
    fn closed_forms_are_exact_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let o12 = rng.gen_range(0.01..4.0);
            let o23 = rng.gen_range(0.01..4.0);
            let o13 = rng.gen_range(0.01..4.0);
            let es = eigensystem_phi_half(o12, o23, o13).unwrap();
            let h = phi_half_hamiltonian(o12, o23, o13);
            assert!(residual(&h, &es) < 1e-10);
            assert!(gram_defect(&es) < 1e-10);
            let w = omega_sq(o12, o23, o13);
            assert!((es.energies[2] - w.sqrt()).abs() < 1e-12);
            assert_eq!(es.energies[0], -es.energies[2]);
        }
    }

    #[test]
    fn formula_singularity_reported() {
        assert_eq!(
            eigensystem_phi_half(1.0, 0.0, 0.0),
            Err(Error::FormulaSingular { omega12: 1.0 })
        );
    }

    #[test]
    fn numeric_fallback_tracks_through_singular_endpoint() {
        let schedule = PulseSchedule::closed_loop(PulseShape::Zero, 1.0, FRAC_PI_2).unwrap();
        let mut prev: Option<EigenSystem> = None;
        let mut last_dark = None;
        for k in 0..=100 {
            let t = schedule.tau * k as f64 / 100.0;
            let es = eigensystem_at(&schedule, t, prev.as_ref()).unwrap();
            assert!(es.energies[0] <= es.energies[1] && es.energies[1] <= es.energies[2]);
            if let Some(last) = &last_dark {
                assert!(overlap(last, &es.dark_state()) > 0.99, "jump at t = {t}");
            }
            last_dark = Some(es.dark_state());
            prev = Some(es);
        }
        let end = eigensystem_at(&schedule, 1.0, prev.as_ref()).unwrap();
        assert!((end.dark_state()[2].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn adiabatic_ergotropy_examples() {
        let spectrum = BatterySpectrum::default();
        let schedule = PulseSchedule::closed_loop(PulseShape::SinPi, 2.0, FRAC_PI_2).unwrap();
        assert!(
            adiabatic_ergotropy(&schedule, &spectrum, 0.0)
                .unwrap()
                .abs()
                < 1e-15
        );
        let mid = adiabatic_ergotropy(&schedule, &spectrum, 1.0).unwrap();
        assert!((mid - 119.0 / 120.0).abs() < 1e-12);
        let end = adiabatic_ergotropy(&schedule, &spectrum, 2.0).unwrap();
        assert!((end - 1.95).abs() < 1e-12);

        let open = PulseSchedule::closed_loop(PulseShape::Zero, 2.0, FRAC_PI_2).unwrap();
        assert_eq!(adiabatic_ergotropy(&open, &spectrum, 2.0).unwrap(), 1.95);
    }

    #[test]
    fn adiabatic_ergotropy_rejects_other_phases() {
        let spectrum = BatterySpectrum::default();
        let schedule = PulseSchedule::closed_loop(PulseShape::SinPi, 2.0, 0.3).unwrap();
        assert_eq!(
            adiabatic_ergotropy(&schedule, &spectrum, 1.0),
            Err(Error::PhaseContract { phi: 0.3 })
        );
        let shifted =
            PulseSchedule::closed_loop(PulseShape::SinPi, 2.0, FRAC_PI_2 + TWO_PI).unwrap();
        assert!(adiabatic_ergotropy(&shifted, &spectrum, 1.0).is_ok());
    }

    #[test]
    fn adiabatic_curve_boundary_values() {
        let spectrum = BatterySpectrum::default();
        let schedule = PulseSchedule::closed_loop(PulseShape::Zero, 3.0, FRAC_PI_2).unwrap();
        let curve = adiabatic_curve(&schedule, &spectrum, 101).unwrap();
        assert_eq!(curve.samples.len(), 101);
        assert!(curve.samples[0].1.abs() < 1e-15);
        assert_eq!(curve.samples.last().unwrap().0, 3.0);
        assert!((curve.samples.last().unwrap().1 - 1.95).abs() < 1e-12);
    }

    #[test]
    fn weight_normalization_is_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let o12 = rng.gen_range(0.0..4.0);
            let o23 = rng.gen_range(0.01..4.0);
            let o13 = rng.gen_range(0.0..4.0);
            let numerator = o23 * o23 + o13 * o13 + o12 * o12;
            assert_eq!(numerator / omega_sq(o12, o23, o13), 1.0);
        }
    }

    #[test]
    fn min_gap_known_values() {
        let open = PulseSchedule::open_loop(2.0).unwrap();
        assert!((min_gap(&open) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);

        let sin = PulseSchedule::closed_loop(PulseShape::SinPi, 5.0, FRAC_PI_2).unwrap();
        assert!((min_gap(&sin) - 0.956028594609).abs() < 1e-9);

        for shape13 in [
            PulseShape::Zero,
            PulseShape::SinPi,
            PulseShape::OneMinusCosPow(2),
        ] {
            let schedule = PulseSchedule::closed_loop(shape13, 1.0, FRAC_PI_2).unwrap();
            let gap = min_gap(&schedule);
            assert!(gap > 0.0);
            assert!(gap <= schedule.omega0 + 1e-12);
        }
    }

    #[test]
    fn adiabaticity_advisory_threshold() {
        let fast = PulseSchedule::open_loop(9.9).unwrap();
        let slow = PulseSchedule::open_loop(10.0).unwrap();
        assert!(is_non_adiabatic(&fast));
        assert!(!is_non_adiabatic(&slow));
    }
}
