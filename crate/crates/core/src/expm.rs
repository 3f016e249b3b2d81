//! Matrix exponentials of Hermitian generators.
//!
//! Two independent routes: [`unitary_from_spectrum`] forms
//! `exp(−i H τ)` from an eigendecomposition, [`expm_multiply`] applies
//! `exp(s·A)` to a vector through a scaled Taylor series truncated at
//! machine precision. The propagators use whichever is cheaper for the
//! shape of the problem; tests hold them against each other.

use num_complex::Complex;

use crate::eigen::hermitian_eigen;
use crate::error::Result;
use crate::matrix::{ComplexMatrix, CsrMatrix, KroneckerSum};
use crate::scalar::{czero, Real};

/// Anything that can multiply a vector.
pub trait LinearOperator<T: Real> {
    fn dim(&self) -> usize;
    fn one_norm(&self) -> T;
    fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]);
}

impl<T: Real> LinearOperator<T> for ComplexMatrix<T> {
    fn dim(&self) -> usize {
        ComplexMatrix::dim(self)
    }
    fn one_norm(&self) -> T {
        ComplexMatrix::one_norm(self)
    }
    fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).fold(czero(), |acc, (&a, &b)| acc + a * b);
        }
    }
}

impl<T: Real> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        CsrMatrix::dim(self)
    }
    fn one_norm(&self) -> T {
        CsrMatrix::one_norm(self)
    }
    fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        CsrMatrix::apply_into(self, x, out)
    }
}

impl<T: Real> LinearOperator<T> for KroneckerSum<T> {
    fn dim(&self) -> usize {
        KroneckerSum::dim(self)
    }
    fn one_norm(&self) -> T {
        KroneckerSum::one_norm(self)
    }
    fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        KroneckerSum::apply_into(self, x, out)
    }
}

/// `exp(−i H τ)` for Hermitian `H`.
pub fn unitary_from_spectrum<T: Real>(h: &ComplexMatrix<T>, tau: T) -> Result<ComplexMatrix<T>> {
    let eig = hermitian_eigen(h)?;
    let n = h.dim();
    let phases: Vec<Complex<T>> = eig.values.iter().map(|&e| Complex::from_polar(T::one(), -e * tau)).collect();
    let mut u = ComplexMatrix::zeros(n);
    for (k, v) in eig.vectors.iter().enumerate() {
        let ph = phases[k];
        for i in 0..n {
            let a = v[i] * ph;
            for j in 0..n {
                u[(i, j)] = u[(i, j)] + a * v[j].conj();
            }
        }
    }
    Ok(u)
}

/// Compute `exp(scale · A) v` without forming the exponential.
///
/// The interval is split into `s` substeps so that `|scale|·‖A‖₁/s ≤ 1`;
/// each substep sums the Taylor series until two consecutive terms fall
/// below `ε·‖acc‖∞`.
pub fn expm_multiply<T: Real, A: LinearOperator<T>>(a: &A, scale: Complex<T>, v: &[Complex<T>]) -> Vec<Complex<T>> {
    assert_eq!(a.dim(), v.len(), "dimension mismatch");
    let norm = scale.norm() * a.one_norm();
    let substeps = norm.ceil().to_usize().unwrap_or(1).max(1);
    let sub = scale / T::from_usize(substeps).unwrap();
    let eps = T::epsilon();
    let inf_norm = |x: &[Complex<T>]| x.iter().fold(T::zero(), |m, z| m.max(z.norm()));

    let mut acc = v.to_vec();
    let mut term = vec![czero(); v.len()];
    let mut next = vec![czero(); v.len()];
    for _ in 0..substeps {
        term.copy_from_slice(&acc);
        let mut prev_small = false;
        for k in 1..=64usize {
            a.apply_into(&term, &mut next);
            let factor = sub / T::from_usize(k).unwrap();
            for z in next.iter_mut() {
                *z = *z * factor;
            }
            for (x, &t) in acc.iter_mut().zip(&next) {
                *x = *x + t;
            }
            std::mem::swap(&mut term, &mut next);
            let small = inf_norm(&term) <= eps * inf_norm(&acc);
            if small && prev_small {
                break;
            }
            prev_small = small;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ci, cre};

    fn test_hamiltonian() -> ComplexMatrix<f64> {
        ComplexMatrix::from_fn(6, |i, j| {
            if i == j {
                cre(i as f64 * 0.7 - 1.0)
            } else if i + 1 == j {
                Complex::new(0.3, 0.2 * j as f64)
            } else if j + 1 == i {
                Complex::new(0.3, -0.2 * i as f64)
            } else {
                czero()
            }
        })
    }

    #[test]
    fn routes_agree() {
        let h = test_hamiltonian();
        let tau = 0.83;
        let u = unitary_from_spectrum(&h, tau).unwrap();
        let v: Vec<_> = (0..6).map(|i| Complex::new(1.0 / (1.0 + i as f64), 0.1 * i as f64)).collect();
        let dense = u.apply(&v);
        let action = expm_multiply(&h, -ci::<f64>() * tau, &v);
        let sparse = expm_multiply(&CsrMatrix::from_dense(&h), -ci::<f64>() * tau, &v);
        for ((a, b), c) in dense.iter().zip(&action).zip(&sparse) {
            assert!((a - b).norm() < 1e-13, "{a} vs {b}");
            assert_eq!(b, c);
        }
    }

    #[test]
    fn kronecker_sum_matches_dense_joint_exponential() {
        let a = test_hamiltonian();
        let b = ComplexMatrix::from_fn(3, |i, j| {
            if i == j {
                cre(0.3 * i as f64)
            } else {
                Complex::new(0.1, 0.05 * (i as f64 - j as f64))
            }
        });
        let joint = &a.tensor(&ComplexMatrix::identity(3)).unwrap() + &ComplexMatrix::identity(6).tensor(&b).unwrap();
        let v: Vec<_> = (0..18).map(|i| Complex::new((i as f64).cos(), (0.3 * i as f64).sin())).collect();
        let dense = unitary_from_spectrum(&joint, 1.7).unwrap().apply(&v);
        let ks = KroneckerSum::new(CsrMatrix::from_dense(&a), CsrMatrix::from_dense(&b));
        let fast = expm_multiply(&ks, -ci::<f64>() * 1.7, &v);
        for (x, y) in dense.iter().zip(&fast) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_unitary_is_unitary() {
        let u = unitary_from_spectrum(&test_hamiltonian(), 5.0).unwrap();
        let prod = u.adjoint().matmul(&u);
        assert!((&prod - &ComplexMatrix::identity(6)).max_abs() < 1e-13);
    }

    #[test]
    fn scalar_generator_matches_closed_form() {
        // exp(−i·2·τ) on a multiple of the identity
        let h = ComplexMatrix::identity(3).scale_real(2.0);
        let v = vec![cre(1.0), cre(0.0), cre(0.0)];
        let out = expm_multiply(&h, -ci::<f64>() * 10.0, &v);
        let expected = Complex::from_polar(1.0, -20.0);
        assert!((out[0] - expected).norm() < 1e-13);
    }
}
