//! Instantaneous spectrum of the Rabi model and its cat-state approximants.
//!
//! Eigenvectors leave [`eigendecompose`] with their largest-magnitude
//! amplitude real and positive. Along a sweep, [`align_gauge`] re-phases and
//! re-orders each new spectrum against the previous one so that
//! `⟨previous_k|current_k⟩ ≥ 0` (parallel transport). Relative phases such as
//! the storage phase `θ` are only meaningful in that gauge.

use num_complex::Complex;

use crate::eigen::{hermitian_eigen, hermitian_eigen_lowest, HermitianEigen};
use crate::error::{Error, Result};
use crate::fock::{coherent_state, number_op, HilbertDims, StateVector};
use crate::matrix::{inner, ComplexMatrix};
use crate::rabi::{parity_op, ModelParams};
use crate::scalar::{cre, czero, real, tol, Real};

/// Eigenvalue of the parity operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i8 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }
}

/// The `k` lowest eigenpairs of a single-cell Hamiltonian.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    pub energies: Vec<T>,
    pub states: Vec<StateVector<T>>,
    pub parities: Vec<Parity>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn dims(&self) -> Option<HilbertDims> {
        self.states.first().map(|s| s.dims())
    }
}

/// Relative tolerance (in units of `‖H‖`) under which eigenvalues are
/// treated as one degenerate cluster and re-diagonalized against parity.
const CLUSTER_TOL: f64 = 1e-9;

/// Lowest `k` eigenpairs of a Hermitian single-cell matrix, ascending, with
/// parity labels.
pub fn eigendecompose<T: Real>(h: &ComplexMatrix<T>, k: usize) -> Result<Spectrum<T>> {
    let n = h.dim();
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::invalid("h", format!("dimension {n} is not a single qubit-resonator cell")));
    }
    if !h.is_finite() {
        return Err(Error::invalid("h", "non-finite entries"));
    }
    let scale = h.max_abs().max(T::one());
    let deviation = h.hermitian_deviation();
    if deviation > tol::<T>(1e-12) * scale {
        return Err(Error::NotHermitian {
            deviation: deviation.to_f64().unwrap_or(f64::NAN),
        });
    }
    let dims = HilbertDims::single(n / 2)?;
    let k = k.min(n);

    let mut eig = hermitian_eigen_lowest(h, (k + 6).min(n))?;
    let cluster_tol = tol::<T>(CLUSTER_TOL) * scale;
    // extend to cover a degenerate cluster straddling the cut
    let mut kept = k;
    while kept < n && kept > 0 && eig.values[kept] - eig.values[kept - 1] <= cluster_tol {
        kept += 1;
    }
    if kept > eig.vectors.len() {
        eig = hermitian_eigen(h)?;
    }

    let parity = parity_op::<T>(dims);
    symmetrize_clusters(&mut eig, kept, cluster_tol, &parity)?;

    let mut energies = Vec::with_capacity(k);
    let mut states = Vec::with_capacity(k);
    let mut parities = Vec::with_capacity(k);
    for (idx, (&e, v)) in eig.values.iter().zip(eig.vectors).take(k).enumerate() {
        let state = StateVector::from_raw(dims, fix_phase(v));
        let p = state.expectation(&parity).re;
        if p.abs() <= real(0.999) {
            return Err(Error::ParityUndefined {
                index: idx,
                expectation: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        energies.push(e);
        parities.push(if p > T::zero() { Parity::Even } else { Parity::Odd });
        states.push(state);
    }
    Ok(Spectrum { energies, states, parities })
}

/// Inside each degenerate cluster, rotate the eigenvectors onto parity
/// eigenvectors.
fn symmetrize_clusters<T: Real>(eig: &mut HermitianEigen<T>, kept: usize, cluster_tol: T, parity: &ComplexMatrix<T>) -> Result<()> {
    let mut start = 0;
    while start < kept {
        let mut end = start + 1;
        while end < kept && eig.values[end] - eig.values[end - 1] <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let block: Vec<Vec<Complex<T>>> = eig.vectors[start..end].to_vec();
            let m = end - start;
            let pv: Vec<Vec<Complex<T>>> = block.iter().map(|v| parity.apply(v)).collect();
            let proj = ComplexMatrix::from_fn(m, |i, j| inner(&block[i], &pv[j]));
            let rot = hermitian_eigen(&proj)?;
            for (c, w) in rot.vectors.iter().enumerate() {
                let mut v = vec![czero(); block[0].len()];
                for (b, &coef) in block.iter().zip(w) {
                    for (x, &y) in v.iter_mut().zip(b) {
                        *x = *x + y * coef;
                    }
                }
                eig.vectors[start + c] = v;
            }
        }
        start = end;
    }
    Ok(())
}

/// Make the largest-magnitude amplitude real and positive.
fn fix_phase<T: Real>(mut v: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let max = v.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    if max == T::zero() {
        return v;
    }
    let cut = max * (T::one() - real(1e-9));
    let pivot = v.iter().position(|z| z.norm() >= cut).expect("max exists");
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|z| *z = *z * phase);
    v
}

/// Which member of the parity-protected doublet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    G,
    E,
}

/// Cat-state approximant `(|+⟩|−α⟩ ∓ |−⟩|α⟩)/√2` with `α = Ω/ω_cav`
/// (minus sign for the ground branch), normalized in the truncated space.
pub fn cat_approximant<T: Real>(params: &ModelParams<T>, coupling: T, which: Branch) -> Result<StateVector<T>> {
    if !(coupling / params.omega_cav > T::zero()) {
        return Err(Error::invalid("coupling", format!("cat approximant needs Ω/ω_cav > 0, got {coupling}")));
    }
    cat_state(params, coupling, which)
}

/// As [`cat_approximant`] but also accepts `Ω = 0`, where it reduces to
/// `|g,0⟩` (ground) or `|e,0⟩` (excited).
pub(crate) fn cat_state<T: Real>(params: &ModelParams<T>, coupling: T, which: Branch) -> Result<StateVector<T>> {
    let dims = params.dims();
    let alpha = coupling / params.omega_cav;
    let minus = coherent_state(cre(-alpha), params.n_fock)?;
    let plus = coherent_state(cre(alpha), params.n_fock)?;
    let h = real::<T>(0.5).sqrt();
    let sign = match which {
        Branch::G => -T::one(),
        Branch::E => T::one(),
    };
    // qubit amplitudes in (g, e) order: |+⟩ = (1, 1)/√2, |−⟩ = (−1, 1)/√2
    let nf = dims.n_fock();
    let mut amps = vec![czero(); dims.total_dim()];
    for n in 0..nf {
        let a = minus.amplitudes[n] * h;
        let b = plus.amplitudes[n] * h * sign;
        amps[n] = (a - b) * h;
        amps[nf + n] = (a + b) * h;
    }
    StateVector::normalized(dims, amps)
}

/// `⟨a†a⟩` of a single-cell state.
pub fn mean_photon<T: Real>(state: &StateVector<T>) -> T {
    let n = number_op::<T>(state.dims().cell());
    state.expectation(&n).re.max(T::zero())
}

/// Overlaps within this margin make the level assignment ambiguous.
const AMBIGUITY_MARGIN: f64 = 1e-3;

/// Re-order `current` by maximum overlap with `previous` and re-phase it so
/// that each `⟨previous_k|current_k⟩` is real and non-negative.
pub fn align_gauge<T: Real>(previous: &Spectrum<T>, current: &Spectrum<T>) -> Result<Spectrum<T>> {
    let k = previous.len();
    if current.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: current.len(),
        });
    }
    if let (Some(a), Some(b)) = (previous.dims(), current.dims()) {
        if a != b {
            return Err(Error::DimensionMismatch {
                expected: a.total_dim(),
                found: b.total_dim(),
            });
        }
    }
    let margin: T = real(AMBIGUITY_MARGIN);
    let mut taken = vec![false; k];
    let mut out = Spectrum {
        energies: Vec::with_capacity(k),
        states: Vec::with_capacity(k),
        parities: Vec::with_capacity(k),
    };
    for (i, prev) in previous.states.iter().enumerate() {
        let overlaps: Vec<Complex<T>> = current.states.iter().map(|c| prev.inner(c)).collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| overlaps[b].norm().partial_cmp(&overlaps[a].norm()).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let best_mag = overlaps[best].norm();
        if k > 1 {
            let second_mag = overlaps[order[1]].norm();
            if best_mag - second_mag < margin || taken[best] {
                return Err(Error::AmbiguousGauge {
                    level: i,
                    best: best_mag.to_f64().unwrap_or(f64::NAN),
                    second: second_mag.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        taken[best] = true;
        let phase = if best_mag > T::zero() {
            overlaps[best].conj() / best_mag
        } else {
            Complex::new(T::one(), T::zero())
        };
        out.energies.push(current.energies[best]);
        out.parities.push(current.parities[best]);
        out.states.push(current.states[best].phased(phase));
    }
    Ok(out)
}

/// Sequential parallel-transport tracker along a sweep.
#[derive(Clone, Debug)]
pub struct GaugeChain<T: Real> {
    /// Spectrum at the previous sweep point, if any.
    pub reference: Option<Spectrum<T>>,
    /// Spectrum at the current sweep point, aligned to `reference`.
    pub aligned: Spectrum<T>,
}

impl<T: Real> GaugeChain<T> {
    pub fn start(seed: Spectrum<T>) -> Self {
        Self {
            reference: None,
            aligned: seed,
        }
    }

    pub fn advance(&mut self, next: Spectrum<T>) -> Result<&Spectrum<T>> {
        let aligned = align_gauge(&self.aligned, &next)?;
        self.reference = Some(std::mem::replace(&mut self.aligned, aligned));
        Ok(&self.aligned)
    }
}
