//! Truncated qubit ⊗ resonator Hilbert space.
//!
//! Basis ordering: inside a cell the index is `q·n_fock + n` with
//! `q = 0 ≡ |g⟩`, `q = 1 ≡ |e⟩` and `n` the photon number. Two cells are
//! laid out cell-major (cell 1 slowest). Every serialization in the crate
//! uses this ordering.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::{inner, norm, ComplexMatrix};
use crate::scalar::{ci, cone, cre, czero, real, tol, Real};

/// Truncation and cell count of the simulated space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertDims {
    n_fock: usize,
    n_qubits: usize,
}

impl HilbertDims {
    pub fn new(n_fock: usize, n_qubits: usize) -> Result<Self> {
        if n_fock < 2 {
            return Err(Error::invalid("n_fock", format!("must be at least 2, got {n_fock}")));
        }
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::invalid("n_qubits", format!("must be 1 or 2, got {n_qubits}")));
        }
        Ok(Self { n_fock, n_qubits })
    }

    pub fn single(n_fock: usize) -> Result<Self> {
        Self::new(n_fock, 1)
    }

    pub fn two_cell(n_fock: usize) -> Result<Self> {
        Self::new(n_fock, 2)
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Dimension of one qubit ⊗ resonator cell, `2·n_fock`.
    pub fn cell_dim(&self) -> usize {
        2 * self.n_fock
    }

    /// `(2·n_fock)^n_qubits`.
    pub fn total_dim(&self) -> usize {
        self.cell_dim().pow(self.n_qubits as u32)
    }

    /// Index of `|q, n⟩` inside one cell.
    pub fn index(&self, qubit: Qubit, n: usize) -> usize {
        debug_assert!(n < self.n_fock);
        qubit.index() * self.n_fock + n
    }

    /// The single-cell dimensions with the same truncation.
    pub fn cell(&self) -> Self {
        Self {
            n_fock: self.n_fock,
            n_qubits: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    Ground,
    Excited,
}

impl Qubit {
    pub fn index(self) -> usize {
        match self {
            Qubit::Ground => 0,
            Qubit::Excited => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Normalized pure state on the space described by `dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    dims: HilbertDims,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Wrap amplitudes that are already normalized (within `1e-9`).
    pub fn new(dims: HilbertDims, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != dims.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: dims.total_dim(),
                found: amplitudes.len(),
            });
        }
        let n = norm(&amplitudes);
        if (n - T::one()).abs() > tol(1e-9) {
            return Err(Error::invalid("amplitudes", format!("state norm is {n}, expected 1")));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Normalize arbitrary non-zero amplitudes.
    pub fn normalized(dims: HilbertDims, mut amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != dims.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: dims.total_dim(),
                found: amplitudes.len(),
            });
        }
        let n = norm(&amplitudes);
        if n == T::zero() || !n.is_finite() {
            return Err(Error::invalid("amplitudes", "cannot normalize a zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|z| *z = *z / n);
        Ok(Self { dims, amplitudes })
    }

    pub(crate) fn from_raw(dims: HilbertDims, amplitudes: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(amplitudes.len(), dims.total_dim());
        Self { dims, amplitudes }
    }

    /// Single-cell basis state `|q, n⟩`.
    pub fn basis(dims: HilbertDims, qubit: Qubit, n: usize) -> Result<Self> {
        if dims.n_qubits() != 1 {
            return Err(Error::invalid("dims", "basis() builds single-cell states"));
        }
        if n >= dims.n_fock() {
            return Err(Error::invalid("n", format!("photon number {n} outside truncation {}", dims.n_fock())));
        }
        let mut amps = vec![czero(); dims.total_dim()];
        amps[dims.index(qubit, n)] = cone();
        Ok(Self { dims, amplitudes: amps })
    }

    /// `(g·|g⟩ + e·|e⟩) ⊗ |fock⟩` on a single cell.
    pub fn product(dims: HilbertDims, qubit: [Complex<T>; 2], fock: &FockState<T>) -> Result<Self> {
        if fock.amplitudes.len() != dims.n_fock() {
            return Err(Error::DimensionMismatch {
                expected: dims.n_fock(),
                found: fock.amplitudes.len(),
            });
        }
        let cell = dims.cell();
        let mut amps = Vec::with_capacity(cell.total_dim());
        for q in qubit {
            amps.extend(fock.amplitudes.iter().map(|&c| q * c));
        }
        Self::normalized(cell, amps)
    }

    /// Joint state of two cells, `self` being cell 1.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.dims.n_qubits() != 1 || other.dims != self.dims {
            return Err(Error::invalid("dims", "tensor() joins two single cells with equal truncation"));
        }
        let dims = HilbertDims::two_cell(self.dims.n_fock())?;
        let mut amps = Vec::with_capacity(dims.total_dim());
        for &a in &self.amplitudes {
            amps.extend(other.amplitudes.iter().map(|&b| a * b));
        }
        Ok(Self { dims, amplitudes: amps })
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm(&self) -> T {
        norm(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    /// `⟨self|op|self⟩`.
    pub fn expectation(&self, op: &ComplexMatrix<T>) -> Complex<T> {
        inner(&self.amplitudes, &op.apply(&self.amplitudes))
    }

    /// `op|self⟩`, not renormalized.
    pub fn apply(&self, op: &ComplexMatrix<T>) -> Vec<Complex<T>> {
        op.apply(&self.amplitudes)
    }

    /// Multiply by a global phase.
    pub fn phased(&self, phase: Complex<T>) -> Self {
        Self {
            dims: self.dims,
            amplitudes: self.amplitudes.iter().map(|&z| z * phase).collect(),
        }
    }
}

/// Resonator-only state, length `n_fock`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState<T: Real> {
    pub amplitudes: Vec<Complex<T>>,
    /// `1 − ‖c‖` of the truncated series before renormalization.
    pub truncation_loss: T,
}

/// Single-cell annihilation operator `I_qubit ⊗ a`.
pub fn annihilation_op<T: Real>(dims: HilbertDims) -> ComplexMatrix<T> {
    let nf = dims.n_fock();
    let mut fock = ComplexMatrix::zeros(nf);
    for n in 1..nf {
        fock[(n - 1, n)] = cre(real::<T>(n as f64).sqrt());
    }
    ComplexMatrix::identity(2).tensor(&fock).expect("single cell fits the dimension cap")
}

/// Single-cell `I_qubit ⊗ a†a`, diagonal `0, 1, …, n_fock − 1`.
pub fn number_op<T: Real>(dims: HilbertDims) -> ComplexMatrix<T> {
    let nf = dims.n_fock();
    let diag: Vec<T> = (0..dims.cell_dim()).map(|i| real((i % nf) as f64)).collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// Single-cell `a + a†`.
pub fn quadrature_op<T: Real>(dims: HilbertDims) -> ComplexMatrix<T> {
    let a = annihilation_op::<T>(dims);
    &a + &a.adjoint()
}

/// Pauli matrix on the qubit of one cell, tensored with the Fock identity.
///
/// Convention `σz|e⟩ = +|e⟩`, `σz|g⟩ = −|g⟩`; in the `(g, e)` ordering
/// `σy = [[0, i], [−i, 0]]` so that `σx σy = i σz`.
pub fn pauli_op<T: Real>(axis: Axis, dims: HilbertDims) -> ComplexMatrix<T> {
    let (o, l) = (czero::<T>(), cone::<T>());
    let entries = match axis {
        Axis::X => vec![o, l, l, o],
        Axis::Y => vec![o, ci(), -ci::<T>(), o],
        Axis::Z => vec![-l, o, o, l],
    };
    let q = ComplexMatrix::from_row_major(entries).expect("2x2");
    q.tensor(&ComplexMatrix::identity(dims.n_fock())).expect("single cell fits the dimension cap")
}

/// Embed a single-cell operator into the two-cell space acting on `cell`
/// (0 = slowest factor).
pub fn embed_in_cell<T: Real>(op: &ComplexMatrix<T>, cell: usize, dims: HilbertDims) -> Result<ComplexMatrix<T>> {
    if dims.n_qubits() != 2 || op.dim() != dims.cell_dim() || cell > 1 {
        return Err(Error::invalid("cell", "embed_in_cell expects a single-cell operator and cell 0 or 1"));
    }
    let id = ComplexMatrix::identity(dims.cell_dim());
    if cell == 0 {
        op.tensor(&id)
    } else {
        id.tensor(op)
    }
}

/// Truncated coherent state `|α⟩`, renormalized.
///
/// Requires `|α|² ≤ n_fock / 4` and a truncation loss below `1e-8`.
pub fn coherent_state<T: Real>(alpha: Complex<T>, n_fock: usize) -> Result<FockState<T>> {
    let mean = alpha.norm_sqr();
    if mean > real::<T>(n_fock as f64 / 4.0) {
        return Err(Error::TruncationInadequate(format!(
            "|alpha|^2 = {mean} exceeds n_fock/4 = {}",
            n_fock as f64 / 4.0
        )));
    }
    let mut amps = Vec::with_capacity(n_fock);
    let mut c = cre((-mean / real(2.0)).exp());
    for n in 0..n_fock {
        if n > 0 {
            c = c * alpha / real::<T>(n as f64).sqrt();
        }
        amps.push(c);
    }
    let nrm = norm(&amps);
    let loss = T::one() - nrm;
    if loss > tol(1e-8) {
        return Err(Error::TruncationInadequate(format!("truncated coherent state loses {loss} of its norm")));
    }
    amps.iter_mut().for_each(|z| *z = *z / nrm);
    Ok(FockState {
        amplitudes: amps,
        truncation_loss: loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::hermitian_eigen;

    fn dims(n: usize) -> HilbertDims {
        HilbertDims::single(n).unwrap()
    }

    #[test]
    fn dims_validation() {
        assert!(HilbertDims::single(1).is_err());
        assert!(HilbertDims::new(3, 3).is_err());
        assert_eq!(HilbertDims::two_cell(15).unwrap().total_dim(), 900);
        let d = dims(4);
        assert_eq!(d.index(Qubit::Excited, 2), 6);
    }

    #[test]
    fn ladder_matrix_elements() {
        let d = dims(3);
        let a = annihilation_op::<f64>(d);
        // Fock block entry (1, 2) in both qubit sectors
        assert!((a[(1, 2)].re - std::f64::consts::SQRT_2).abs() < 1e-8);
        assert!((a[(4, 5)].re - 2f64.sqrt()).abs() < 1e-15);
        let two = StateVector::<f64>::basis(d, Qubit::Ground, 2).unwrap();
        let out = two.apply(&a);
        assert!((out[1].re - 2f64.sqrt()).abs() < 1e-15);
        let vac = StateVector::<f64>::basis(d, Qubit::Excited, 0).unwrap();
        assert!(vac.apply(&a).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn commutator_corner_defect() {
        // Oracle: direct arithmetic on the 4-level Fock block.
        let d = dims(4);
        let a = annihilation_op::<f64>(d);
        let comm = a.commutator(&a.adjoint());
        for q in 0..2 {
            for n in 0..4 {
                for m in 0..4 {
                    let v = comm[(q * 4 + n, q * 4 + m)];
                    let expect = match (n == m, n) {
                        (true, 3) => -3.0,
                        (true, _) => 1.0,
                        _ => 0.0,
                    };
                    assert!((v.re - expect).abs() < 1e-14 && v.im.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn pauli_algebra() {
        let d = dims(3);
        let (x, y, z) = (pauli_op::<f64>(Axis::X, d), pauli_op::<f64>(Axis::Y, d), pauli_op::<f64>(Axis::Z, d));
        let g0 = StateVector::<f64>::basis(d, Qubit::Ground, 0).unwrap();
        let e0 = StateVector::<f64>::basis(d, Qubit::Excited, 0).unwrap();
        assert_eq!(g0.apply(&x), e0.amplitudes().to_vec());
        assert_eq!(z.matmul(&z), ComplexMatrix::identity(6));
        assert_eq!(x.matmul(&y), z.scale(ci()));
        assert_eq!(e0.expectation(&z).re, 1.0);
        assert_eq!(g0.expectation(&z).re, -1.0);
    }

    #[test]
    fn constructors_are_deterministic() {
        let d = dims(7);
        assert_eq!(annihilation_op::<f64>(d), annihilation_op::<f64>(d));
        assert_eq!(pauli_op::<f64>(Axis::Y, d), pauli_op::<f64>(Axis::Y, d));
    }

    #[test]
    fn tensor_associative_on_algebra_operators() {
        let d = dims(3);
        let x = pauli_op::<f64>(Axis::X, d);
        let y = pauli_op::<f64>(Axis::Y, HilbertDims::single(2).unwrap());
        let a = annihilation_op::<f64>(HilbertDims::single(2).unwrap());
        let left = x.tensor(&y).unwrap().tensor(&a).unwrap();
        let right = x.tensor(&y.tensor(&a).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn number_operator_spectrum_is_exact() {
        let d = dims(6);
        let a = annihilation_op::<f64>(d);
        let n = a.adjoint().matmul(&a);
        assert_eq!(n.hermitian_deviation(), 0.0);
        // √n·√n rounds, so a†a only matches the exact diagonal to an ulp
        assert!((&n - &number_op(d)).max_abs() < 1e-14);
        let eig = hermitian_eigen(&n).unwrap();
        for (k, e) in eig.values.iter().enumerate() {
            assert!((e - (k / 2) as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn coherent_state_values() {
        let vac = coherent_state::<f64>(cre(0.0), 5).unwrap();
        assert_eq!(vac.amplitudes[0], cone());
        assert!(vac.amplitudes[1..].iter().all(|z| z.norm() == 0.0));

        let one = coherent_state::<f64>(cre(1.0), 20).unwrap();
        assert!((one.amplitudes[0].re - 0.60653066).abs() < 1e-8);
        assert!(one.truncation_loss < 1e-8);
        assert!((norm(&one.amplitudes) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherent_state_number_expectation() {
        let d = dims(30);
        let n = number_op::<f64>(d);
        for &alpha in &[0.3, 0.6, 1.0, 1.5] {
            let f = coherent_state::<f64>(Complex::new(alpha * 0.6, alpha * 0.8), 30).unwrap();
            let s = StateVector::product(d, [cone(), czero()], &f).unwrap();
            let mean = s.expectation(&n).re;
            assert!((mean - alpha * alpha).abs() < 1e-8, "alpha {alpha}: {mean}");
        }
    }

    #[test]
    fn coherent_overlap_closed_form() {
        for &alpha in &[0.5, 1.0, 1.5] {
            let p = coherent_state::<f64>(cre(alpha), 30).unwrap();
            let m = coherent_state::<f64>(cre(-alpha), 30).unwrap();
            let o = inner(&m.amplitudes, &p.amplitudes).re;
            assert!((o - (-2.0 * alpha * alpha).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn coherent_state_guards_truncation() {
        assert!(matches!(coherent_state::<f64>(cre(2.0), 10), Err(Error::TruncationInadequate(_))));
        // passes the n_fock/4 guard but leaks norm
        assert!(matches!(coherent_state::<f64>(cre(1.0), 4), Err(Error::TruncationInadequate(_))));
    }

    #[test]
    fn state_validation() {
        let d = dims(2);
        assert!(StateVector::<f64>::new(d, vec![cre(1.0); 4]).is_err());
        assert!(StateVector::<f64>::new(d, vec![cre(1.0); 3]).is_err());
        let s = StateVector::<f64>::normalized(d, vec![cre(1.0); 4]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }
}
