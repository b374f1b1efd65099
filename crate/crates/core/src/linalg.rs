//! Complex 3x3 matrices and a cyclic Jacobi eigensolver for the Hermitian case.
//!
//! The whole crate works with exactly three levels, so the matrix type is a
//! fixed-size value type with no heap allocation. Everything an evolution step
//! needs (products, commutators, adjoints, norms) is provided here, together
//! with [`eigh`] and the exact unitary step [`unitary_exp`] built from it.

use std::ops::{Add, Index, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex 3x3 matrix.
///
/// Entries are stored row-major; `m[(i, j)]` reads row `i`, column `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix3 {
    pub entries: [[Complex64; 3]; 3],
}

impl Matrix3 {
    pub const fn new(entries: [[Complex64; 3]; 3]) -> Self {
        Self { entries }
    }

    pub fn zeros() -> Self {
        Self::new([[Complex64::ZERO; 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.entries[i][i] = Complex64::ONE;
        }
        m
    }

    /// Real diagonal matrix, e.g. a bare Hamiltonian from its level energies.
    pub fn from_diagonal(d: [f64; 3]) -> Self {
        let mut m = Self::zeros();
        for (i, &value) in d.iter().enumerate() {
            m.entries[i][i] = Complex64::new(value, 0.0);
        }
        m
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64; 3]) -> [Complex64; 3] {
        let mut out = [Complex64::ZERO; 3];
        for (row, out_i) in self.entries.iter().zip(out.iter_mut()) {
            for (m_ij, v_j) in row.iter().zip(v.iter()) {
                *out_i += m_ij * v_j;
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.entries[i][j] = self.entries[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1] + self.entries[2][2]
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for row in &self.entries {
            for e in row {
                m = m.max(e.norm());
            }
        }
        m
    }

    /// Largest magnitude of `M - M^dagger` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.entries[i][j] - self.entries[j][i].conj()).norm());
            }
        }
        d
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0f64;
        for row in &self.entries {
            for e in row {
                s += e.norm_sqr();
            }
        }
        s.sqrt()
    }

    /// `U * self * U^dagger`.
    pub fn conjugated_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = *self;
        for row in &mut out.entries {
            for e in row {
                *e *= factor;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix3 {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i][j]
    }
}

impl Add for Matrix3 {
    type Output = Matrix3;

    fn add(self, rhs: Self) -> Matrix3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.entries[i][j] += rhs.entries[i][j];
            }
        }
        out
    }
}

impl Sub for Matrix3 {
    type Output = Matrix3;

    fn sub(self, rhs: Self) -> Matrix3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.entries[i][j] -= rhs.entries[i][j];
            }
        }
        out
    }
}

impl Neg for Matrix3 {
    type Output = Matrix3;

    fn neg(self) -> Matrix3 {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for Matrix3 {
    type Output = Matrix3;

    fn mul(self, rhs: Self) -> Matrix3 {
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for k in 0..3 {
                let a = self.entries[i][k];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..3 {
                    out.entries[i][j] += a * rhs.entries[k][j];
                }
            }
        }
        out
    }
}

impl Mul<f64> for Matrix3 {
    type Output = Matrix3;

    fn mul(self, rhs: f64) -> Matrix3 {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Mul<Complex64> for Matrix3 {
    type Output = Matrix3;

    fn mul(self, rhs: Complex64) -> Matrix3 {
        self.scale(rhs)
    }
}

/// Eigendecomposition of a Hermitian matrix: `values` ascending, eigenvector
/// `k` in column `k` of `vectors`.
#[derive(Debug, Clone, Copy)]
pub struct Eigh {
    pub values: [f64; 3],
    pub vectors: Matrix3,
}

impl Eigh {
    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> [Complex64; 3] {
        [
            self.vectors.entries[0][k],
            self.vectors.entries[1][k],
            self.vectors.entries[2][k],
        ]
    }
}

const JACOBI_MAX_SWEEPS: usize = 40;

fn off_diagonal_norm(a: &Matrix3) -> f64 {
    let mut s = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                s += a.entries[i][j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One two-sided Jacobi rotation on the (p, q) plane, applied in place to `a`
/// (as `U^dagger a U`) while accumulating `v <- v U`.
fn rotate(a: &mut Matrix3, v: &mut Matrix3, p: usize, q: usize, c: f64, s: f64, ph: Complex64) {
    let sph = ph * s;
    let sphc = ph.conj() * s;
    for i in 0..3 {
        let ap = a.entries[i][p];
        let aq = a.entries[i][q];
        a.entries[i][p] = ap * c + aq * sphc;
        a.entries[i][q] = aq * c - ap * sph;
        let vp = v.entries[i][p];
        let vq = v.entries[i][q];
        v.entries[i][p] = vp * c + vq * sphc;
        v.entries[i][q] = vq * c - vp * sph;
    }
    for j in 0..3 {
        let ap = a.entries[p][j];
        let aq = a.entries[q][j];
        a.entries[p][j] = ap * c + aq * sph;
        a.entries[q][j] = aq * c - ap * sphc;
    }
}

/// Eigendecomposition of a Hermitian 3x3 matrix by cyclic complex Jacobi
/// rotations, iterated until the off-diagonal norm falls below `1e-12`
/// (relative to the matrix scale). The input is symmetrized first so that
/// tiny Hermiticity defects cannot poison the diagonal.
pub fn eigh(m: &Matrix3) -> Result<Eigh> {
    let mut a = (*m + m.adjoint()) * 0.5;
    let mut v = Matrix3::identity();
    let tol = 1e-12 * a.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > tol {
        sweeps += 1;
        if sweeps > JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNonConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                off_norm: off_diagonal_norm(&a),
            });
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let alpha = a.entries[p][q];
            let g = alpha.norm();
            if g <= tol / 3.0 {
                continue;
            }
            let h = (a.entries[p][p].re - a.entries[q][q].re) / (2.0 * g);
            let sign = if h < 0.0 { -1.0 } else { 1.0 };
            let t = sign / (h.abs() + (1.0 + h * h).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            rotate(&mut a, &mut v, p, q, c, s, alpha / g);
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a.entries[i][i].re.total_cmp(&a.entries[j][j].re));
    let mut values = [0.0f64; 3];
    let mut vectors = Matrix3::zeros();
    for (k, &src) in order.iter().enumerate() {
        values[k] = a.entries[src][src].re;
        for i in 0..3 {
            vectors.entries[i][k] = v.entries[i][src];
        }
    }
    Ok(Eigh { values, vectors })
}

/// Exact unitary `exp(-i H dt)` for Hermitian `H`, via [`eigh`].
pub fn unitary_exp(h: &Matrix3, dt: f64) -> Result<Matrix3> {
    let es = eigh(h)?;
    let mut phased = es.vectors;
    for k in 0..3 {
        let f = Complex64::from_polar(1.0, -es.values[k] * dt);
        for i in 0..3 {
            phased.entries[i][k] *= f;
        }
    }
    Ok(phased * es.vectors.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut impl Rng) -> Matrix3 {
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            m.entries[i][i] = c(rng.gen_range(-4.0..4.0), 0.0);
            for j in (i + 1)..3 {
                let e = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                m.entries[i][j] = e;
                m.entries[j][i] = e.conj();
            }
        }
        m
    }

    fn residual(m: &Matrix3, es: &Eigh) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..3 {
            let v = es.vector(k);
            let mv = m.mul_vec(&v);
            for i in 0..3 {
                worst = worst.max((mv[i] - v[i] * es.values[k]).norm());
            }
        }
        worst
    }

    #[test]
    fn basic_algebra() {
        let a = Matrix3::from_diagonal([1.0, 2.0, 3.0]);
        let b = Matrix3::identity();
        assert_eq!((a * b).entries, a.entries);
        assert_eq!(a.trace(), c(6.0, 0.0));
        assert_eq!(a.commutator(&b), Matrix3::zeros());
        assert!((a.frobenius_norm() - 14.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.max_abs(), 3.0);
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let mut m = Matrix3::zeros();
        m.entries[0][1] = c(1.0, 2.0);
        let adj = m.adjoint();
        assert_eq!(adj.entries[1][0], c(1.0, -2.0));
        assert_eq!(adj.entries[0][1], Complex64::ZERO);
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let mut m = Matrix3::zeros();
        m.entries[0][1] = c(1.0, 0.0);
        m.entries[1][0] = c(1.0, 1e-3);
        assert!((m.hermiticity_defect() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn eigh_diagonal_matrix() {
        let m = Matrix3::from_diagonal([3.0, -1.0, 0.5]);
        let es = eigh(&m).unwrap();
        assert_eq!(es.values, [-1.0, 0.5, 3.0]);
        assert!(residual(&m, &es) < 1e-12);
    }

    #[test]
    fn eigh_two_level_coupling() {
        let mut m = Matrix3::zeros();
        m.entries[0][1] = c(1.0, 0.0);
        m.entries[1][0] = c(1.0, 0.0);
        let es = eigh(&m).unwrap();
        for (got, want) in es.values.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(residual(&m, &es) < 1e-12);
    }

    #[test]
    fn eigh_random_hermitian_residual_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = random_hermitian(&mut rng);
            let es = eigh(&m).unwrap();
            assert!(residual(&m, &es) < 1e-10);
            let gram = es.vectors.adjoint() * es.vectors;
            assert!((gram - Matrix3::identity()).max_abs() < 1e-12);
            assert!(es.values[0] <= es.values[1] && es.values[1] <= es.values[2]);
        }
    }

    #[test]
    fn unitary_exp_is_unitary_and_matches_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let m = random_hermitian(&mut rng);
            let dt = rng.gen_range(0.001..0.3);
            let u = unitary_exp(&m, dt).unwrap();
            assert!((u.adjoint() * u - Matrix3::identity()).max_abs() < 1e-12);
        }
        let h = Matrix3::from_diagonal([0.0, 2.0, 0.0]);
        let u = unitary_exp(&h, 0.25).unwrap();
        assert!((u.entries[1][1] - Complex64::from_polar(1.0, -0.5)).norm() < 1e-14);
        assert!((u.entries[0][0] - Complex64::ONE).norm() < 1e-14);
    }
}
