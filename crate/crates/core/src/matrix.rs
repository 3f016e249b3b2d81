//! Dense square complex matrices.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{czero, Real};

/// Largest dimension [`ComplexMatrix::tensor`] will build before refusing.
/// Two cells at `n_fock = 30` are 3600-dimensional.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![czero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Build from row-major entries. Fails unless `data.len()` is a square.
    pub fn from_row_major(data: Vec<Complex<T>>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::invalid("entries", format!("{} entries do not form a square matrix", data.len())));
        }
        Ok(Self { dim, data })
    }

    /// Diagonal matrix with the given real entries.
    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: Complex<T>, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + s * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = vec![czero(); n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// `self · v`.
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.dim, v.len(), "dimension mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).fold(czero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> T {
        (0..self.dim)
            .map(|j| (0..self.dim).fold(T::zero(), |s, i| s + self[(i, j)].norm()))
            .fold(T::zero(), T::max)
    }

    /// Largest `|A_ij − conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Kronecker product with `self` as the slowest-varying factor.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_cap(other, DEFAULT_DIM_CAP)
    }

    pub fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        let dim = self.dim.checked_mul(other.dim).ok_or(Error::DimensionOverflow { dim: usize::MAX, cap })?;
        if dim > cap {
            return Err(Error::DimensionOverflow { dim, cap });
        }
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        Ok(out)
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

/// Compressed-row view of a square matrix; only used internally to speed
/// up matrix-vector products on the (very sparse) Rabi Hamiltonian.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T: Real> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex<T>>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn from_dense(m: &ComplexMatrix<T>) -> Self {
        let n = m.dim();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for (j, &z) in m.row(i).iter().enumerate() {
                if z.re != T::zero() || z.im != T::zero() {
                    cols.push(j);
                    vals.push(z);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim: n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn one_norm(&self) -> T {
        let mut col_sums = vec![T::zero(); self.dim];
        for (&j, v) in self.cols.iter().zip(&self.vals) {
            col_sums[j] = col_sums[j] + v.norm();
        }
        col_sums.into_iter().fold(T::zero(), T::max)
    }

    pub fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = czero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc = acc + self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }
}

/// `A ⊗ I + I ⊗ B` applied without forming the product space matrix.
/// Vectors are indexed `i·dim(B) + j`.
#[derive(Clone, Debug)]
pub struct KroneckerSum<T: Real> {
    a: CsrMatrix<T>,
    b: CsrMatrix<T>,
}

impl<T: Real> KroneckerSum<T> {
    pub fn new(a: CsrMatrix<T>, b: CsrMatrix<T>) -> Self {
        Self { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.dim * self.b.dim
    }

    /// Upper bound `‖A‖₁ + ‖B‖₁`.
    pub fn one_norm(&self) -> T {
        self.a.one_norm() + self.b.one_norm()
    }

    pub fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        let nb = self.b.dim;
        for i in 0..self.a.dim {
            for j in 0..nb {
                let mut acc = czero();
                for k in self.a.row_ptr[i]..self.a.row_ptr[i + 1] {
                    acc = acc + self.a.vals[k] * x[self.a.cols[k] * nb + j];
                }
                for k in self.b.row_ptr[j]..self.b.row_ptr[j + 1] {
                    acc = acc + self.b.vals[k] * x[i * nb + self.b.cols[k]];
                }
                out[i * nb + j] = acc;
            }
        }
    }
}

/// `⟨a|b⟩ = Σ conj(a_i) b_i`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}
