//! Quantum Rabi Hamiltonian, parity operator and coupling ramps.
//!
//! Units: `ħ = 1`, frequencies are angular, times are in `1/ω_cav` when
//! `ω_cav = 1`.

use crate::error::{Error, Result};
use crate::fock::{annihilation_op, number_op, pauli_op, quadrature_op, Axis, HilbertDims};
use crate::matrix::ComplexMatrix;
use crate::scalar::{cre, real, Real};

/// Physical parameters of one memory cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T: Real> {
    pub omega_cav: T,
    pub omega_eg: T,
    /// Coupling reached at the end of a storage sweep.
    pub omega0: T,
    pub n_fock: usize,
}

impl<T: Real> ModelParams<T> {
    pub fn new(omega_cav: T, omega_eg: T, omega0: T, n_fock: usize) -> Result<Self> {
        let p = Self {
            omega_cav,
            omega_eg,
            omega0,
            n_fock,
        };
        p.validate()?;
        Ok(p)
    }

    /// `ω_cav = 1`, `ω_eg = 0.1`, `Ω₀ = 1`.
    pub fn standard(n_fock: usize) -> Self {
        Self {
            omega_cav: T::one(),
            omega_eg: real(0.1),
            omega0: T::one(),
            n_fock,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_cav > T::zero() && self.omega_cav.is_finite()) {
            return Err(Error::invalid("omega_cav", format!("must be positive, got {}", self.omega_cav)));
        }
        if !(self.omega_eg >= T::zero() && self.omega_eg.is_finite()) {
            return Err(Error::invalid("omega_eg", format!("must be non-negative, got {}", self.omega_eg)));
        }
        if !(self.omega0 >= T::zero() && self.omega0.is_finite()) {
            return Err(Error::invalid("omega0", format!("must be non-negative, got {}", self.omega0)));
        }
        HilbertDims::single(self.n_fock)?;
        Ok(())
    }

    pub fn dims(&self) -> HilbertDims {
        HilbertDims::single(self.n_fock).expect("validated params")
    }

    pub fn with_n_fock(&self, n_fock: usize) -> Self {
        Self { n_fock, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleShape {
    Linear,
}

/// Coupling ramp `Ω(t)` over `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSchedule<T: Real> {
    pub omega_start: T,
    pub omega_end: T,
    pub total_time: T,
    pub shape: ScheduleShape,
}

impl<T: Real> CouplingSchedule<T> {
    pub fn linear(omega_start: T, omega_end: T, total_time: T) -> Result<Self> {
        if !(total_time > T::zero() && total_time.is_finite()) {
            return Err(Error::invalid("total_time", format!("must be positive, got {total_time}")));
        }
        if !(omega_start.is_finite() && omega_end.is_finite()) {
            return Err(Error::invalid("omega", "schedule end points must be finite"));
        }
        Ok(Self {
            omega_start,
            omega_end,
            total_time,
            shape: ScheduleShape::Linear,
        })
    }

    /// Storage ramp `0 → Ω₀`.
    pub fn storage(params: &ModelParams<T>, total_time: T) -> Result<Self> {
        Self::linear(T::zero(), params.omega0, total_time)
    }

    /// Retrieval ramp `Ω₀ → 0`.
    pub fn retrieval(params: &ModelParams<T>, total_time: T) -> Result<Self> {
        Self::linear(params.omega0, T::zero(), total_time)
    }

    /// Flux-biased form `Ω(t) = (cos f − Δf·sin f·t/T)·Ω₀`, where `f` is the
    /// reduced external flux and `Δf` its linear sweep amplitude.
    pub fn from_flux(f: T, delta_f: T, omega0: T, total_time: T) -> Result<Self> {
        Self::linear(omega0 * f.cos(), omega0 * (f.cos() - delta_f * f.sin()), total_time)
    }

    /// Same ramp run backwards.
    pub fn reversed(&self) -> Self {
        Self {
            omega_start: self.omega_end,
            omega_end: self.omega_start,
            ..*self
        }
    }

    pub fn coupling_at(&self, t: T) -> Result<T> {
        if !(t >= T::zero() && t <= self.total_time) {
            return Err(Error::TimeOutOfRange {
                t: t.to_f64().unwrap_or(f64::NAN),
                total: self.total_time.to_f64().unwrap_or(f64::NAN),
            });
        }
        let s = t / self.total_time;
        // convex form hits both end points exactly
        Ok(self.omega_start * (T::one() - s) + self.omega_end * s)
    }
}

/// `Ω`-independent and `Ω`-linear parts of the Rabi Hamiltonian. Their
/// supports are disjoint, so `H(Ω) = bare + Ω·coupling` is exact entrywise.
#[derive(Clone, Debug)]
pub struct RabiTerms<T: Real> {
    bare: ComplexMatrix<T>,
    coupling: ComplexMatrix<T>,
}

impl<T: Real> RabiTerms<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        let dims = params.dims();
        let half: T = real(0.5);
        let sz = pauli_op::<T>(Axis::Z, dims);
        let n = number_op::<T>(dims);
        let mut bare = sz.scale_real(params.omega_eg * half);
        bare.add_scaled(cre(params.omega_cav), &n);
        let coupling = pauli_op::<T>(Axis::X, dims).matmul(&quadrature_op(dims));
        Self { bare, coupling }
    }

    pub fn at(&self, omega: T) -> ComplexMatrix<T> {
        let mut h = self.bare.clone();
        for (x, &c) in h.as_mut_slice().iter_mut().zip(self.coupling.as_slice()) {
            if c.re != T::zero() || c.im != T::zero() {
                *x = *x + c * omega;
            }
        }
        h
    }

    /// `σx (a + a†)`.
    pub fn coupling_operator(&self) -> &ComplexMatrix<T> {
        &self.coupling
    }
}

/// `H = (ω_eg/2)σz + ω_cav a†a + Ω σx (a + a†)`.
pub fn build_rabi<T: Real>(params: &ModelParams<T>, coupling: T) -> ComplexMatrix<T> {
    RabiTerms::new(params).at(coupling)
}

/// `P = σz ⊗ exp(iπ a†a)` on one cell.
pub fn parity_op<T: Real>(dims: HilbertDims) -> ComplexMatrix<T> {
    let nf = dims.n_fock();
    let diag: Vec<T> = (0..dims.cell_dim())
        .map(|i| {
            let qubit_sign = if i < nf { -T::one() } else { T::one() };
            let photon_sign = if (i % nf).is_multiple_of(2) { T::one() } else { -T::one() };
            qubit_sign * photon_sign
        })
        .collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// `build_rabi(params, Ω(t))`.
pub fn hamiltonian_at<T: Real>(params: &ModelParams<T>, schedule: &CouplingSchedule<T>, t: T) -> Result<ComplexMatrix<T>> {
    Ok(build_rabi(params, schedule.coupling_at(t)?))
}

/// The annihilation operator of the cell described by `params`.
pub fn cell_annihilation<T: Real>(params: &ModelParams<T>) -> ComplexMatrix<T> {
    annihilation_op(params.dims())
}
