//! Hermitian eigendecomposition.
//!
//! Complex Householder reduction to a Hermitian tridiagonal form, a diagonal
//! phase transform that makes the tridiagonal real, then the implicit QL
//! iteration with Wilkinson shifts. Eigenvalues come back ascending.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::{cone, czero, real, Real};

/// Eigenpairs of a Hermitian matrix, ascending in energy.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// `vectors[k]` is the normalized eigenvector for `values[k]`.
    pub vectors: Vec<Vec<Complex<T>>>,
}

/// Full eigendecomposition.
pub fn hermitian_eigen<T: Real>(h: &ComplexMatrix<T>) -> Result<HermitianEigen<T>> {
    hermitian_eigen_lowest(h, h.dim())
}

/// All eigenvalues, eigenvectors only for the `k` lowest.
pub fn hermitian_eigen_lowest<T: Real>(h: &ComplexMatrix<T>, k: usize) -> Result<HermitianEigen<T>> {
    let n = h.dim();
    let k = k.min(n);
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: vec![],
        });
    }
    let (diag, sub, q) = tridiagonalize(h);
    let (values, z) = tql2(diag, sub)?;

    let vectors = (0..k)
        .map(|col| {
            (0..n)
                .map(|i| {
                    let qi = q.row(i);
                    let mut acc = czero();
                    for (m, &qim) in qi.iter().enumerate() {
                        acc = acc + qim * z[m * n + col];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(HermitianEigen { values, vectors })
}

/// Returns the real diagonal, the real non-negative subdiagonal and the
/// unitary `Q` with `Q† H Q` equal to that real tridiagonal matrix.
fn tridiagonalize<T: Real>(h: &ComplexMatrix<T>) -> (Vec<T>, Vec<T>, ComplexMatrix<T>) {
    let n = h.dim();
    let two: T = real(2.0);
    // Work on the Hermitian part so round-off asymmetry in the input is ignored.
    let mut a = ComplexMatrix::from_fn(n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * real::<T>(0.5));
    let mut q = ComplexMatrix::<T>::identity(n);
    let mut u = vec![czero::<T>(); n];
    let mut p = vec![czero::<T>(); n];

    for k in 0..n.saturating_sub(2) {
        let xnorm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > T::zero() { x0 / x0.norm() } else { cone() };
        let alpha = -phase * xnorm;

        u.iter_mut().for_each(|z| *z = czero());
        for i in k + 1..n {
            u[i] = a[(i, k)];
        }
        u[k + 1] = u[k + 1] - alpha;
        let unorm = (k + 1..n).map(|i| u[i].norm_sqr()).sum::<T>().sqrt();
        if unorm == T::zero() {
            continue;
        }
        for z in u[k + 1..].iter_mut() {
            *z = *z / unorm;
        }

        // A ← (I − 2uu†) A (I − 2uu†) as a rank-2 update on the trailing block.
        for i in k..n {
            let row = a.row(i);
            p[i] = (k + 1..n).fold(czero(), |acc, j| acc + row[j] * u[j]);
        }
        let kappa = (k + 1..n).fold(czero::<T>(), |acc, i| acc + u[i].conj() * p[i]).re;
        for i in k..n {
            p[i] = p[i] - u[i] * kappa;
        }
        for i in k..n {
            for j in k..n {
                let upd = (u[i] * p[j].conj() + p[i] * u[j].conj()) * two;
                a[(i, j)] = a[(i, j)] - upd;
            }
        }
        // Q ← Q (I − 2uu†)
        for i in 0..n {
            let row = q.row(i);
            let qu = (k + 1..n).fold(czero(), |acc, j| acc + row[j] * u[j]) * two;
            for j in k + 1..n {
                let v = q[(i, j)] - qu * u[j].conj();
                q[(i, j)] = v;
            }
        }
    }

    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut sub = vec![T::zero(); n];
    let mut d = cone::<T>();
    let mut phases = vec![cone::<T>(); n];
    for i in 0..n - 1 {
        let e = a[(i + 1, i)];
        let mag = e.norm();
        if mag > T::zero() {
            d = d * (e / mag);
        }
        phases[i + 1] = d;
        sub[i] = mag;
    }
    for i in 0..n {
        for (j, ph) in phases.iter().enumerate() {
            q[(i, j)] = q[(i, j)] * ph;
        }
    }
    (diag, sub, q)
}

/// Symmetric tridiagonal QL with implicit shifts (EISPACK `tql2`).
///
/// `e[i]` couples `i` and `i + 1`; `e[n-1]` is ignored. Returns ascending
/// eigenvalues and the row-major orthogonal eigenvector matrix (columns).
fn tql2<T: Real>(mut d: Vec<T>, mut e: Vec<T>) -> Result<(Vec<T>, Vec<T>)> {
    let n = d.len();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    e[n - 1] = T::zero();

    let eps = T::epsilon();
    let two: T = real(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence);
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let row = k * n;
                        let hk = v[row + i + 1];
                        v[row + i + 1] = s * v[row + i] + c * hk;
                        v[row + i] = c * v[row + i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut sorted = vec![T::zero(); n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            sorted[k * n + new_col] = v[k * n + old_col];
        }
    }
    Ok((values, sorted))
}
