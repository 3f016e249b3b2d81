//! Two-mode photon preparation and entangled storage in two memory cells.
//!
//! The cells evolve under `H₁ ⊗ I + I ⊗ H₂` with no cross coupling. The
//! joint state lives in the full `(2·n_fock)²` space; the Hamiltonian is
//! applied as a Kronecker sum so the product matrix is never formed.

use num_complex::Complex;

use crate::closed::{is_recorded, renormalize, PropagatorConfig, Trajectory};
use crate::eigen::hermitian_eigen;
use crate::error::{Error, Result};
use crate::expm::{expm_multiply, unitary_from_spectrum};
use crate::fock::{HilbertDims, Qubit, StateVector};
use crate::matrix::{ComplexMatrix, CsrMatrix, KroneckerSum};
use crate::rabi::{build_rabi, CouplingSchedule, ModelParams, RabiTerms};
use crate::scalar::{ci, cis, czero, real, tol, wrap_angle, Real};
use crate::spectral::eigendecompose;

/// Joint state of two cells, cell 1 slowest.
pub type TwoCellState<T> = StateVector<T>;

/// State of two bosonic modes `a, b`, indexed `n_a·n_fock + n_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState<T: Real> {
    n_fock: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> TwoModeState<T> {
    pub fn new(n_fock: usize, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if n_fock < 2 {
            return Err(Error::invalid("n_fock", format!("need at least 2 levels, got {n_fock}")));
        }
        if amplitudes.len() != n_fock * n_fock {
            return Err(Error::DimensionMismatch {
                expected: n_fock * n_fock,
                found: amplitudes.len(),
            });
        }
        let n = crate::matrix::norm(&amplitudes);
        if (n - T::one()).abs() > tol(1e-9) {
            return Err(Error::invalid("amplitudes", format!("norm {n} differs from 1")));
        }
        Ok(Self { n_fock, amplitudes })
    }

    /// `|n_a, n_b⟩`.
    pub fn fock(n_fock: usize, n_a: usize, n_b: usize) -> Result<Self> {
        if n_a >= n_fock || n_b >= n_fock {
            return Err(Error::invalid("n", format!("occupation ({n_a}, {n_b}) outside truncation {n_fock}")));
        }
        let mut amps = vec![czero(); n_fock * n_fock];
        amps[n_a * n_fock + n_b] = Complex::new(T::one(), T::zero());
        Self::new(n_fock, amps)
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> Complex<T> {
        self.amplitudes[n_a * self.n_fock + n_b]
    }

    /// Probability of `n_a + n_b = total`.
    pub fn photon_number_weight(&self, total: usize) -> T {
        let n = self.n_fock;
        (0..n)
            .filter(|&na| total >= na && total - na < n)
            .map(|na| self.amplitude(na, total - na).norm_sqr())
            .fold(T::zero(), |a, b| a + b)
    }

    fn max_photon_number(&self) -> usize {
        let n = self.n_fock;
        let floor = real::<T>(1e-300);
        (0..n * n)
            .filter(|&i| self.amplitudes[i].norm_sqr() > floor)
            .map(|i| i / n + i % n)
            .max()
            .unwrap_or(0)
    }
}

/// Mixing unitary `exp[ξ(e^{iφ} a†b − e^{−iφ} a b†)]` with
/// `cos²ξ = transmissivity`.
///
/// With this sign convention `|0,1⟩ → cos ξ|0,1⟩ + e^{iφ} sin ξ|1,0⟩` and,
/// at 50:50 and `φ = 0`, `|1,1⟩ → (|2,0⟩ − |0,2⟩)/√2`.
pub fn beam_splitter<T: Real>(state: &TwoModeState<T>, transmissivity: T, phase: T) -> Result<TwoModeState<T>> {
    if !(T::zero()..=T::one()).contains(&transmissivity) {
        return Err(Error::invalid("transmissivity", format!("must lie in [0, 1], got {transmissivity}")));
    }
    let n = state.n_fock;
    // a†b only stays inside the truncation on blocks with n_a + n_b < n_fock
    let top = state.max_photon_number();
    if top > n - 1 {
        return Err(Error::DimensionOverflow { dim: top, cap: n - 1 });
    }
    let xi = transmissivity.sqrt().acos();
    // generator −iK with K = iξ(e^{iφ} a†b − h.c.)
    let e = cis(phase);
    let mut k = ComplexMatrix::zeros(n * n);
    for na in 0..n - 1 {
        for nb in 1..n {
            // ⟨na+1, nb−1| a†b |na, nb⟩
            let amp = T::from_usize((na + 1) * nb).unwrap().sqrt() * xi;
            let (row, col) = ((na + 1) * n + nb - 1, na * n + nb);
            let z = ci::<T>() * e * amp;
            k[(row, col)] = k[(row, col)] + z;
            k[(col, row)] = k[(col, row)] + z.conj();
        }
    }
    let u = unitary_from_spectrum(&k, T::one())?;
    Ok(TwoModeState {
        n_fock: n,
        amplitudes: u.apply(&state.amplitudes),
    })
}

/// Absorb one photon per mode into the matching cell: `|0⟩ → |g,0⟩`,
/// `|1⟩ → |e,0⟩`. Mode `a` feeds cell 1.
pub fn photons_to_cells<T: Real>(photons: &TwoModeState<T>, cell_fock: usize) -> Result<TwoCellState<T>> {
    let dims = HilbertDims::two_cell(cell_fock)?;
    let cd = dims.cell_dim();
    let level = |occ: usize| if occ == 0 { Qubit::Ground } else { Qubit::Excited };
    let mut amps = vec![czero(); dims.total_dim()];
    let floor = tol::<T>(1e-12);
    for na in 0..photons.n_fock {
        for nb in 0..photons.n_fock {
            let z = photons.amplitude(na, nb);
            if z.norm() <= floor {
                continue;
            }
            if na > 1 || nb > 1 {
                return Err(Error::invalid(
                    "photons",
                    format!("component |{na},{nb}⟩ carries more than one photon per mode"),
                ));
            }
            amps[dims.index(level(na), 0) * cd + dims.index(level(nb), 0)] = z;
        }
    }
    StateVector::normalized(dims, amps)
}

/// `(|g,0; e,0⟩ + |e,0; g,0⟩)/√2`, the state left after both cells absorb
/// the path-entangled photon.
pub fn prepare_two_cell<T: Real>(params: &ModelParams<T>) -> Result<TwoCellState<T>> {
    params.validate()?;
    let dims = HilbertDims::two_cell(params.n_fock)?;
    let cd = dims.cell_dim();
    let h = real::<T>(0.5).sqrt();
    let (g, e) = (dims.index(Qubit::Ground, 0), dims.index(Qubit::Excited, 0));
    let mut amps = vec![czero(); dims.total_dim()];
    amps[g * cd + e] = Complex::new(h, T::zero());
    amps[e * cd + g] = Complex::new(h, T::zero());
    StateVector::new(dims, amps)
}

/// Evolve a two-cell state with both cells driven by the same schedule.
pub fn propagate_two_cell<T: Real>(
    params: &ModelParams<T>,
    schedule: &CouplingSchedule<T>,
    psi0: &TwoCellState<T>,
    cfg: &PropagatorConfig<T>,
) -> Result<Trajectory<T>> {
    let dims = HilbertDims::two_cell(params.n_fock)?;
    if psi0.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims.total_dim(),
            found: psi0.dims().total_dim(),
        });
    }
    let (steps, dt) = cfg.steps_for(schedule)?;
    let terms = RabiTerms::new(params);
    let half: T = real(0.5);
    let minus_i_dt = -ci::<T>() * dt;

    let mut traj = Trajectory {
        times: vec![T::zero()],
        states: vec![psi0.clone()],
        couplings: vec![schedule.coupling_at(T::zero())?],
    };
    let mut psi = psi0.amplitudes().to_vec();
    for step in 0..steps {
        let omega = schedule.coupling_at((T::from_usize(step).unwrap() + half) * dt)?;
        let cell = CsrMatrix::from_dense(&terms.at(omega));
        let h = KroneckerSum::new(cell.clone(), cell);
        psi = expm_multiply(&h, minus_i_dt, &psi);
        let done = step + 1;
        renormalize(&mut psi, done, cfg.norm_tol)?;
        if is_recorded(done, steps, cfg.record_every) {
            let t = if done == steps {
                schedule.total_time
            } else {
                T::from_usize(done).unwrap() * dt
            };
            traj.times.push(t);
            traj.couplings.push(schedule.coupling_at(t)?);
            traj.states.push(StateVector::from_raw(dims, psi.clone()));
        }
    }
    Ok(traj)
}

/// Von Neumann entropy (bits) of the cell-1 reduced state.
pub fn entanglement_entropy<T: Real>(state: &TwoCellState<T>) -> Result<T> {
    let dims = state.dims();
    if dims.n_qubits() != 2 {
        return Err(Error::invalid("state", "entanglement entropy needs a two-cell state"));
    }
    let cd = dims.cell_dim();
    let a = state.amplitudes();
    let reduced = ComplexMatrix::from_fn(cd, |i, j| (0..cd).fold(czero::<T>(), |acc, k| acc + a[i * cd + k] * a[j * cd + k].conj()));
    let floor = real::<T>(1e-300);
    Ok(hermitian_eigen(&reduced)?
        .values
        .into_iter()
        .filter(|&p| p > floor)
        .fold(T::zero(), |s, p| s - p * p.log2()))
}

/// Multiply the `|e⟩` branch of cell 1 by `e^{−iθ₁}` and of cell 2 by `e^{−iθ₂}`.
pub fn apply_cell_phases<T: Real>(state: &TwoCellState<T>, theta1: T, theta2: T) -> TwoCellState<T> {
    let dims = state.dims();
    let (cd, nf) = (dims.cell_dim(), dims.n_fock());
    let (p1, p2) = (cis(-theta1), cis(-theta2));
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let mut z = z;
            if (i / cd) / nf == 1 {
                z = z * p1;
            }
            if (i % cd) / nf == 1 {
                z = z * p2;
            }
            z
        })
        .collect();
    StateVector::from_raw(dims, amps)
}

/// Parity-protected target `(e^{iθ₂}|ψ_G⟩|ψ_E⟩ + e^{iθ₁}|ψ_E⟩|ψ_G⟩)/√2`.
pub fn encoded_target<T: Real>(ground: &StateVector<T>, excited: &StateVector<T>, theta1: T, theta2: T) -> Result<TwoCellState<T>> {
    let ge = ground.tensor(excited)?;
    let eg = excited.tensor(ground)?;
    let (p2, p1) = (cis(theta2), cis(theta1));
    let amps = ge.amplitudes().iter().zip(eg.amplitudes()).map(|(&x, &y)| p2 * x + p1 * y).collect();
    StateVector::normalized(ge.dims(), amps)
}

#[derive(Clone, Debug)]
pub struct TwoCellRun<T: Real> {
    pub trajectory: Trajectory<T>,
    /// `F̄(t) = |⟨Ψ₀|ψ(t)⟩|²`, after the cell phases for a retrieval.
    pub fidelity: Vec<T>,
}

pub fn two_cell_storage<T: Real>(
    state: &TwoCellState<T>,
    params: &ModelParams<T>,
    schedule: &CouplingSchedule<T>,
    cfg: &PropagatorConfig<T>,
) -> Result<TwoCellRun<T>> {
    let trajectory = propagate_two_cell(params, schedule, state, cfg)?;
    let fidelity = trajectory.fidelity_to(state);
    Ok(TwoCellRun { trajectory, fidelity })
}

/// Store the Bell-type input, check it against the encoded target, then
/// retrieve and decode with independently optimized cell phases.
#[derive(Clone, Debug)]
pub struct TwoCellRoundTrip<T: Real> {
    pub storage: TwoCellRun<T>,
    pub retrieval: TwoCellRun<T>,
    /// Best overlap of the stored state with the encoded target.
    pub target_fidelity: T,
    pub target_theta: (T, T),
    pub theta: (T, T),
    pub final_fidelity: T,
    pub final_entropy: T,
}

pub fn two_cell_round_trip<T: Real>(params: &ModelParams<T>, total_time: T, cfg: &PropagatorConfig<T>) -> Result<TwoCellRoundTrip<T>> {
    let input = prepare_two_cell(params)?;
    let store = CouplingSchedule::storage(params, total_time)?;
    let storage = two_cell_storage(&input, params, &store, cfg)?;
    let stored = storage.trajectory.final_state().clone();

    let spec = eigendecompose(&build_rabi(params, params.omega0), 2)?;
    let (psi_g, psi_e) = (&spec.states[0], &spec.states[1]);
    let c_ge = psi_g.tensor(psi_e)?.inner(&stored);
    let c_eg = psi_e.tensor(psi_g)?.inner(&stored);
    let target_theta = (wrap_angle(c_eg.arg()), wrap_angle(c_ge.arg()));
    let target = encoded_target(psi_g, psi_e, target_theta.0, target_theta.1)?;
    let target_fidelity = target.fidelity(&stored);

    let back = store.reversed();
    let raw = propagate_two_cell(params, &back, &stored, cfg)?;
    let end = raw.final_state();
    let dims = end.dims();
    let cd = dims.cell_dim();
    let (g, e) = (dims.index(Qubit::Ground, 0), dims.index(Qubit::Excited, 0));
    let theta = (wrap_angle(end.amplitudes()[e * cd + g].arg()), wrap_angle(end.amplitudes()[g * cd + e].arg()));
    let fidelity = raw
        .states
        .iter()
        .map(|s| input.fidelity(&apply_cell_phases(s, theta.0, theta.1)))
        .collect::<Vec<_>>();
    let final_fidelity = *fidelity.last().expect("non-empty");
    let final_entropy = entanglement_entropy(end)?;
    Ok(TwoCellRoundTrip {
        storage,
        retrieval: TwoCellRun { trajectory: raw, fidelity },
        target_fidelity,
        target_theta,
        theta,
        final_fidelity,
        final_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rabi::parity_op;
    use crate::scalar::cre;

    fn two_mode(n: usize, na: usize, nb: usize) -> TwoModeState<f64> {
        TwoModeState::fock(n, na, nb).unwrap()
    }

    #[test]
    fn balanced_splitter_on_single_photon() {
        let out = beam_splitter(&two_mode(4, 0, 1), 0.5, 0.0).unwrap();
        let h = 0.5f64.sqrt();
        assert!((out.amplitude(0, 1) - cre(h)).norm() < 1e-12);
        assert!((out.amplitude(1, 0) - cre(h)).norm() < 1e-12);
    }

    #[test]
    fn full_transmission_is_identity() {
        let amps: Vec<_> = (0..25)
            .map(|i| if i / 5 + i % 5 <= 4 { Complex::new(1.0 + i as f64, 0.5) } else { czero() })
            .collect();
        let nrm = crate::matrix::norm(&amps);
        let s = TwoModeState::new(5, amps.iter().map(|z| z / nrm).collect()).unwrap();
        let out = beam_splitter(&s, 1.0, 0.7).unwrap();
        for (a, b) in s.amplitudes().iter().zip(out.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let out = beam_splitter(&two_mode(5, 1, 1), 0.5, 0.0).unwrap();
        assert!(out.amplitude(1, 1).norm() < 1e-10);
        assert!((out.amplitude(2, 0).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((out.amplitude(0, 2).norm_sqr() - 0.5).abs() < 1e-12);
        // sign convention of the mixing generator
        assert!((out.amplitude(2, 0) + out.amplitude(0, 2)).norm() < 1e-12);
    }

    #[test]
    fn photon_number_is_conserved_blockwise() {
        let n = 6;
        for (na, nb) in [(0, 3), (2, 2), (4, 1), (1, 0)] {
            for &(t, phi) in &[(0.5, 0.0), (0.3, 1.1), (0.9, -2.0)] {
                let out = beam_splitter(&two_mode(n, na, nb), t, phi).unwrap();
                assert!((out.photon_number_weight(na + nb) - 1.0).abs() < 1e-12);
                assert!((crate::matrix::norm(out.amplitudes()) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn splitter_rejects_overflow_and_bad_transmissivity() {
        let s = two_mode(3, 2, 1);
        assert!(matches!(beam_splitter(&s, 0.5, 0.0), Err(Error::DimensionOverflow { .. })));
        assert!(beam_splitter(&two_mode(3, 1, 1), 0.5, 0.0).is_ok());
        assert!(beam_splitter(&two_mode(3, 0, 1), 1.5, 0.0).unwrap_err().is_validation());
    }

    #[test]
    fn prepared_state_matches_mapped_photons() {
        let p = ModelParams::<f64>::standard(5);
        let psi = prepare_two_cell(&p).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        let photons = beam_splitter(&two_mode(3, 0, 1), 0.5, 0.0).unwrap();
        let mapped = photons_to_cells(&photons, 5).unwrap();
        assert!((psi.fidelity(&mapped) - 1.0).abs() < 1e-12);
        let par = parity_op::<f64>(p.dims());
        let joint = par.tensor(&par).unwrap();
        assert!((psi.expectation(&joint).re + 1.0).abs() < 1e-15);
        assert!((entanglement_entropy(&psi).unwrap() - 1.0).abs() < 1e-12);
        assert!(photons_to_cells(&two_mode(3, 2, 0), 5).is_err());
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let p = ModelParams::<f64>::standard(4);
        let psi = prepare_two_cell(&p).unwrap();
        let cd = 8;
        let a = psi.amplitudes();
        let rho = ComplexMatrix::from_fn(cd, |i, j| (0..cd).fold(czero::<f64>(), |acc, k| acc + a[i * cd + k] * a[j * cd + k].conj()));
        for i in 0..cd {
            for j in 0..cd {
                let want = if i == j && (i == 0 || i == 4) { 0.5 } else { 0.0 };
                assert!((rho[(i, j)] - cre(want)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn product_input_stays_product() {
        let p = ModelParams::<f64>::standard(8);
        let g0 = StateVector::basis(p.dims(), Qubit::Ground, 0).unwrap();
        let psi = g0.tensor(&g0).unwrap();
        let s = CouplingSchedule::storage(&p, 30.0).unwrap();
        let traj = propagate_two_cell(&p, &s, &psi, &PropagatorConfig::with_steps(30.0, 600, 100)).unwrap();
        for st in &traj.states {
            assert!(entanglement_entropy(st).unwrap() < 1e-6);
        }
    }

    #[test]
    fn joint_step_matches_single_cell_product() {
        let p = ModelParams::<f64>::standard(6);
        let s = CouplingSchedule::storage(&p, 20.0).unwrap();
        let cfg = PropagatorConfig::with_steps(20.0, 500, 500);
        let a = crate::closed::QubitInput::new(cre(0.6), Complex::new(0.0, 0.8))
            .unwrap()
            .initial_state(p.dims())
            .unwrap();
        let b = crate::closed::QubitInput::<f64>::equal_superposition().initial_state(p.dims()).unwrap();
        let joint = propagate_two_cell(&p, &s, &a.tensor(&b).unwrap(), &cfg).unwrap();
        let fa = crate::closed::propagate(&p, &s, &a, &cfg).unwrap();
        let fb = crate::closed::propagate(&p, &s, &b, &cfg).unwrap();
        let prod = fa.final_state().tensor(fb.final_state()).unwrap();
        for (x, y) in joint.final_state().amplitudes().iter().zip(prod.amplitudes()) {
            assert!((x - y).norm() < 1e-11);
        }
    }

    #[test]
    fn joint_parity_and_entanglement_are_conserved() {
        let p = ModelParams::<f64>::standard(8);
        let psi = prepare_two_cell(&p).unwrap();
        let s = CouplingSchedule::storage(&p, 40.0).unwrap();
        let traj = propagate_two_cell(&p, &s, &psi, &PropagatorConfig::with_steps(40.0, 800, 100)).unwrap();
        let par = parity_op::<f64>(p.dims());
        let joint = par.tensor(&par).unwrap();
        for st in &traj.states {
            assert!((st.expectation(&joint).re + 1.0).abs() < 1e-7);
            assert!((entanglement_entropy(st).unwrap() - 1.0).abs() < 1e-7);
            assert!((st.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_phases_decode_a_rotated_bell_state() {
        let p = ModelParams::<f64>::standard(4);
        let psi = prepare_two_cell(&p).unwrap();
        let rotated = apply_cell_phases(&psi, -0.4, -1.9);
        assert!(psi.fidelity(&rotated) < 0.9);
        let back = apply_cell_phases(&rotated, 0.4, 1.9);
        assert!((psi.fidelity(&back) - 1.0).abs() < 1e-14);
    }
}
