//! Pure-state dynamics: adiabatic storage/retrieval sweeps, the relative
//! phase landscape and the evolution-time scan.
//!
//! Each step applies `exp(−i H(t + dt/2) dt)` to the state, the midpoint
//! Hamiltonian being exponentiated exactly (to round-off). The scheme is
//! unitary by construction and second order in `dt`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::expm_multiply;
use crate::fock::{HilbertDims, Qubit, StateVector};
use crate::matrix::{norm, CsrMatrix};
use crate::rabi::{build_rabi, CouplingSchedule, ModelParams, RabiTerms};
use crate::scalar::{ci, cis, czero, real, tol, wrap_angle, Real};
use crate::spectral::{eigendecompose, GaugeChain, Spectrum};

/// Default number of steps per sweep.
pub const DEFAULT_STEPS: usize = 2000;
/// Coarsest admissible sweep resolution, `dt ≤ T / MIN_STEPS`.
pub const MIN_STEPS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Piecewise-constant exponential of the midpoint Hamiltonian.
    MidpointExponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig<T: Real> {
    pub dt: T,
    pub method: Method,
    /// Largest per-step norm drift that is silently renormalized.
    pub norm_tol: T,
    pub record_every: usize,
}

impl<T: Real> PropagatorConfig<T> {
    pub fn new(dt: T, record_every: usize) -> Self {
        Self {
            dt,
            method: Method::MidpointExponential,
            norm_tol: tol(1e-9),
            record_every,
        }
    }

    /// `dt = total_time / steps`.
    pub fn with_steps(total_time: T, steps: usize, record_every: usize) -> Self {
        Self::new(total_time / T::from_usize(steps.max(1)).unwrap(), record_every)
    }

    /// `dt = T/2000`, recording every 10 steps.
    pub fn for_duration(total_time: T) -> Self {
        Self::with_steps(total_time, DEFAULT_STEPS, 10)
    }

    /// Validate against a sweep and return `(steps, dt)` with `steps·dt = T`.
    pub fn steps_for(&self, schedule: &CouplingSchedule<T>) -> Result<(usize, T)> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be at least 1"));
        }
        let total = schedule.total_time;
        let floor = total / T::from_usize(MIN_STEPS).unwrap();
        if self.dt > floor * (T::one() + real(1e-12)) {
            return Err(Error::invalid("dt", format!("{} is coarser than T/{MIN_STEPS} = {floor}", self.dt)));
        }
        let steps = (total / self.dt - real(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
        Ok((steps, total / T::from_usize(steps).unwrap()))
    }
}

/// Recorded samples of a pure-state evolution.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<StateVector<T>>,
    pub couplings: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &StateVector<T> {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// `|⟨reference|ψ(t_i)⟩|²` for every sample.
    pub fn fidelity_to(&self, reference: &StateVector<T>) -> Vec<T> {
        self.states.iter().map(|s| reference.fidelity(s)).collect()
    }
}

/// Whether step `step` of `steps` is recorded.
pub(crate) fn is_recorded(step: usize, steps: usize, every: usize) -> bool {
    step.is_multiple_of(every) || step == steps
}

/// Evolve `psi0` along `schedule`.
pub fn propagate<T: Real>(params: &ModelParams<T>, schedule: &CouplingSchedule<T>, psi0: &StateVector<T>, cfg: &PropagatorConfig<T>) -> Result<Trajectory<T>> {
    if psi0.dims() != params.dims() {
        return Err(Error::DimensionMismatch {
            expected: params.dims().total_dim(),
            found: psi0.dims().total_dim(),
        });
    }
    let (steps, dt) = cfg.steps_for(schedule)?;
    let terms = RabiTerms::new(params);
    let dims = psi0.dims();
    let half: T = real(0.5);
    let minus_i_dt = -ci::<T>() * dt;

    let mut traj = Trajectory {
        times: vec![T::zero()],
        states: vec![psi0.clone()],
        couplings: vec![schedule.coupling_at(T::zero())?],
    };
    let mut psi = psi0.amplitudes().to_vec();
    for step in 0..steps {
        let t_mid = (T::from_usize(step).unwrap() + half) * dt;
        let h = CsrMatrix::from_dense(&terms.at(schedule.coupling_at(t_mid)?));
        psi = expm_multiply(&h, minus_i_dt, &psi);
        renormalize(&mut psi, step + 1, cfg.norm_tol)?;
        let done = step + 1;
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

pub(crate) fn renormalize<T: Real>(psi: &mut [Complex<T>], step: usize, norm_tol: T) -> Result<()> {
    let n = norm(psi);
    let drift = (n - T::one()).abs();
    if !(drift <= norm_tol) {
        return Err(Error::NormDrift {
            step,
            drift: drift.to_f64().unwrap_or(f64::NAN),
            tolerance: norm_tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    psi.iter_mut().for_each(|z| *z = *z / n);
    Ok(())
}

/// Input qubit `α_F|0_F⟩ + β_F|1_F⟩`, written into the cell as
/// `ψ_s = α_F|g,0⟩ + β_F|e,0⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitInput<T: Real> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
}

impl<T: Real> QubitInput<T> {
    pub fn new(alpha: Complex<T>, beta: Complex<T>) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - T::one()).abs() > tol(1e-9) {
            return Err(Error::invalid("alpha_f/beta_f", format!("|alpha|^2 + |beta|^2 = {n}, expected 1")));
        }
        Ok(Self { alpha, beta })
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub fn equal_superposition() -> Self {
        let h = real::<T>(0.5).sqrt();
        Self {
            alpha: Complex::new(h, T::zero()),
            beta: Complex::new(h, T::zero()),
        }
    }

    pub fn initial_state(&self, dims: HilbertDims) -> Result<StateVector<T>> {
        let mut amps = vec![czero(); dims.cell_dim()];
        amps[dims.index(Qubit::Ground, 0)] = self.alpha;
        amps[dims.index(Qubit::Excited, 0)] = self.beta;
        StateVector::new(dims.cell(), amps)
    }

    /// Logical target `α|G⟩ + β e^{iθ}|E⟩` for a given doublet.
    pub fn target(&self, ground: &StateVector<T>, excited: &StateVector<T>, theta: T) -> Result<StateVector<T>> {
        let b = self.beta * cis(theta);
        let amps = ground
            .amplitudes()
            .iter()
            .zip(excited.amplitudes())
            .map(|(&g, &e)| self.alpha * g + b * e)
            .collect();
        StateVector::normalized(ground.dims(), amps)
    }
}

/// Fidelity curve of a storage or retrieval sweep.
#[derive(Clone, Debug)]
pub struct SweepRun<T: Real> {
    pub trajectory: Trajectory<T>,
    /// `F_s(t) = |⟨ψ_s|ψ(t)⟩|²`.
    pub fidelity: Vec<T>,
}

/// Storage sweep from `ψ_s`; fidelity is measured against the fixed `ψ_s`.
pub fn storage_run<T: Real>(params: &ModelParams<T>, input: &QubitInput<T>, schedule: &CouplingSchedule<T>, cfg: &PropagatorConfig<T>) -> Result<SweepRun<T>> {
    let psi_s = input.initial_state(params.dims())?;
    let trajectory = propagate(params, schedule, &psi_s, cfg)?;
    let fidelity = trajectory.fidelity_to(&psi_s);
    Ok(SweepRun { trajectory, fidelity })
}

/// Multiply every `|e⟩` amplitude of a single-cell state by `e^{−iθ}`.
pub fn apply_phase_correction<T: Real>(state: &StateVector<T>, theta: T) -> StateVector<T> {
    let dims = state.dims();
    let nf = dims.n_fock();
    let phase = cis(-theta);
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, &z)| if (i / nf) % 2 == 1 { z * phase } else { z })
        .collect();
    StateVector::from_raw(dims, amps)
}

/// The correction angle that maximizes `|⟨ψ_s|Z(θ)ψ⟩|²` for a decoded
/// single-cell state, in `[0, 2π)`. Zero when either input amplitude is.
pub fn optimal_theta<T: Real>(state: &StateVector<T>, input: &QubitInput<T>) -> T {
    let dims = state.dims();
    let g = input.alpha.conj() * state.amplitudes()[dims.index(Qubit::Ground, 0)];
    let e = input.beta.conj() * state.amplitudes()[dims.index(Qubit::Excited, 0)];
    if g.norm() == T::zero() || e.norm() == T::zero() {
        return T::zero();
    }
    wrap_angle(e.arg() - g.arg())
}

/// Retrieval sweep from `stored`. Every recorded state is compared to
/// `ψ_s` after the phase correction `e^{−iθ}` on the excited branch.
pub fn retrieval_run<T: Real>(
    params: &ModelParams<T>,
    input: &QubitInput<T>,
    stored: &StateVector<T>,
    schedule: &CouplingSchedule<T>,
    cfg: &PropagatorConfig<T>,
    theta_correction: T,
) -> Result<SweepRun<T>> {
    let psi_s = input.initial_state(params.dims())?;
    let trajectory = propagate(params, schedule, stored, cfg)?;
    let fidelity = trajectory
        .states
        .iter()
        .map(|s| psi_s.fidelity(&apply_phase_correction(s, theta_correction)))
        .collect();
    Ok(SweepRun { trajectory, fidelity })
}

/// How the decode-side phase is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaHandling<T: Real> {
    Optimize,
    Fixed(T),
}

/// Result of storing and then retrieving one qubit.
#[derive(Clone, Debug)]
pub struct RoundTrip<T: Real> {
    pub storage: SweepRun<T>,
    pub retrieval: SweepRun<T>,
    pub theta: T,
    pub final_fidelity: T,
}

/// Store with `0 → Ω₀` over `T`, retrieve with `Ω₀ → 0` over `T`.
pub fn round_trip<T: Real>(
    params: &ModelParams<T>,
    input: &QubitInput<T>,
    total_time: T,
    cfg: &PropagatorConfig<T>,
    theta: ThetaHandling<T>,
) -> Result<RoundTrip<T>> {
    let store = CouplingSchedule::storage(params, total_time)?;
    let storage = storage_run(params, input, &store, cfg)?;
    let stored = storage.trajectory.final_state().clone();
    let back = store.reversed();
    let theta = match theta {
        ThetaHandling::Fixed(t) => t,
        ThetaHandling::Optimize => {
            let raw = retrieval_run(params, input, &stored, &back, cfg, T::zero())?;
            optimal_theta(raw.trajectory.final_state(), input)
        }
    };
    let retrieval = retrieval_run(params, input, &stored, &back, cfg, theta)?;
    let final_fidelity = *retrieval.fidelity.last().expect("non-empty");
    Ok(RoundTrip {
        storage,
        retrieval,
        theta,
        final_fidelity,
    })
}

/// Fidelity over `θ ∈ [0, 2π)` against the gauge-fixed instantaneous
/// doublet, one row per recorded sweep sample.
#[derive(Clone, Debug)]
pub struct PhaseLandscape<T: Real> {
    pub times: Vec<T>,
    pub coupling_grid: Vec<T>,
    pub theta_grid: Vec<T>,
    /// `fidelity[i][j]` at sample `i`, angle `theta_grid[j]`.
    pub fidelity: Vec<Vec<T>>,
    /// Grid angle attaining each row maximum (first one on ties).
    pub theta_opt: Vec<T>,
}

impl<T: Real> PhaseLandscape<T> {
    pub fn max_fidelity(&self) -> Vec<T> {
        self.fidelity.iter().map(|row| row.iter().copied().fold(T::zero(), T::max)).collect()
    }
}

/// Track the lowest `k` instantaneous eigenstates along the sampled
/// couplings in the parallel-transport gauge.
pub fn track_spectra<T: Real>(params: &ModelParams<T>, couplings: &[T], k: usize) -> Result<Vec<Spectrum<T>>> {
    let raw: Vec<Spectrum<T>> = couplings
        .par_iter()
        .map(|&om| eigendecompose(&build_rabi(params, om), k))
        .collect::<Result<_>>()?;
    let mut iter = raw.into_iter();
    let first = match iter.next() {
        Some(s) => s,
        None => return Ok(vec![]),
    };
    let mut chain = GaugeChain::start(first);
    let mut out = vec![chain.aligned.clone()];
    for s in iter {
        out.push(chain.advance(s)?.clone());
    }
    Ok(out)
}

pub fn phase_landscape<T: Real>(
    params: &ModelParams<T>,
    input: &QubitInput<T>,
    schedule: &CouplingSchedule<T>,
    cfg: &PropagatorConfig<T>,
    theta_points: usize,
) -> Result<PhaseLandscape<T>> {
    if theta_points < 32 {
        return Err(Error::invalid("theta_points", format!("need at least 32 angles, got {theta_points}")));
    }
    let run = storage_run(params, input, schedule, cfg)?;
    let traj = run.trajectory;
    let spectra = track_spectra(params, &traj.couplings, 2)?;
    let two_pi = T::PI() + T::PI();
    let theta_grid: Vec<T> = (0..theta_points)
        .map(|j| two_pi * T::from_usize(j).unwrap() / T::from_usize(theta_points).unwrap())
        .collect();

    let mut fidelity = Vec::with_capacity(traj.len());
    let mut theta_opt = Vec::with_capacity(traj.len());
    for (state, spec) in traj.states.iter().zip(&spectra) {
        let cg = input.alpha.conj() * spec.states[0].inner(state);
        let ce = input.beta.conj() * spec.states[1].inner(state);
        let row: Vec<T> = theta_grid.iter().map(|&th| (cg + ce * cis(-th)).norm_sqr()).collect();
        let mut best = 0;
        for (j, &f) in row.iter().enumerate() {
            if f > row[best] {
                best = j;
            }
        }
        theta_opt.push(theta_grid[best]);
        fidelity.push(row);
    }
    Ok(PhaseLandscape {
        times: traj.times,
        coupling_grid: traj.couplings,
        theta_grid,
        fidelity,
        theta_opt,
    })
}

/// One row of the evolution-time scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeScanRow<T: Real> {
    pub total_time: T,
    pub theta: T,
    pub fidelity: T,
}

/// Round-trip fidelity with per-`T` optimized `θ` over a grid of sweep
/// durations. Returns the best `T` and the full table in grid order.
pub fn optimal_evolution_time<T: Real>(
    params: &ModelParams<T>,
    input: &QubitInput<T>,
    t_grid: &[T],
    steps: usize,
    record_every: usize,
) -> Result<(T, Vec<TimeScanRow<T>>)> {
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid", "empty grid"));
    }
    let table: Vec<TimeScanRow<T>> = t_grid
        .par_iter()
        .map(|&total_time| {
            let cfg = PropagatorConfig::with_steps(total_time, steps, record_every);
            let rt = round_trip(params, input, total_time, &cfg, ThetaHandling::Optimize)?;
            Ok(TimeScanRow {
                total_time,
                theta: rt.theta,
                fidelity: rt.final_fidelity,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.fidelity > table[best].fidelity {
            best = i;
        }
    }
    Ok((table[best].total_time, table))
}

/// Seconds for a dimensionless duration `T` (in units of `1/ω_cav`) when the
/// cavity runs at the ordinary frequency `f_cav` in Hz, i.e. `ω_cav = 2π·f_cav`.
pub fn physical_time(t_dimensionless: f64, omega_cav_hz: f64) -> Result<f64> {
    if !(t_dimensionless > 0.0) {
        return Err(Error::invalid("T", "must be positive"));
    }
    if !(omega_cav_hz > 0.0) {
        return Err(Error::invalid("f_cav", "must be positive"));
    }
    Ok(t_dimensionless / (2.0 * std::f64::consts::PI * omega_cav_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expm::unitary_from_spectrum;
    use crate::fock::{pauli_op, Axis};
    use crate::rabi::parity_op;
    use crate::scalar::cre;

    fn defaults(n: usize) -> ModelParams<f64> {
        ModelParams::standard(n)
    }

    #[test]
    fn config_validation() {
        let s = CouplingSchedule::linear(0.0, 1.0, 100.0).unwrap();
        assert!(PropagatorConfig::new(0.0, 1).steps_for(&s).is_err());
        assert!(PropagatorConfig::new(0.21, 1).steps_for(&s).is_err());
        assert!(PropagatorConfig::new(0.2, 0).steps_for(&s).is_err());
        assert_eq!(PropagatorConfig::new(0.2, 1).steps_for(&s).unwrap().0, 500);
        assert_eq!(PropagatorConfig::for_duration(100.0).steps_for(&s).unwrap().0, 2000);
    }

    #[test]
    fn stationary_eigenstate() {
        let p = defaults(20);
        let s = CouplingSchedule::linear(0.7, 0.7, 50.0).unwrap();
        let spec = eigendecompose(&build_rabi(&p, 0.7), 1).unwrap();
        let traj = propagate(&p, &s, &spec.states[0], &PropagatorConfig::for_duration(50.0)).unwrap();
        assert!((spec.states[0].inner(traj.final_state()).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decoupled_phase_evolution() {
        let p = defaults(6);
        let s = CouplingSchedule::linear(0.0, 0.0, 20.0).unwrap();
        let e0 = StateVector::basis(p.dims(), Qubit::Excited, 0).unwrap();
        let traj = propagate(&p, &s, &e0, &PropagatorConfig::for_duration(20.0)).unwrap();
        for (t, st) in traj.times.iter().zip(&traj.states) {
            let expected = Complex::from_polar(1.0, -0.05 * t);
            assert!((st.amplitudes()[6] - expected).norm() < 1e-12);
            assert!((e0.fidelity(st) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_matches_dense_oracle() {
        // one step of the propagator against the spectral exponential
        let p = defaults(10);
        let s = CouplingSchedule::linear(0.2, 0.8, 1.0).unwrap();
        let psi0 = QubitInput::equal_superposition().initial_state(p.dims()).unwrap();
        let cfg = PropagatorConfig::with_steps(1.0, 500, 500);
        let traj = propagate(&p, &s, &psi0, &cfg).unwrap();
        let mut psi = psi0.amplitudes().to_vec();
        for k in 0..500 {
            let om = s.coupling_at((k as f64 + 0.5) / 500.0).unwrap();
            psi = unitary_from_spectrum(&build_rabi(&p, om), 1.0 / 500.0).unwrap().apply(&psi);
        }
        for (a, b) in traj.final_state().amplitudes().iter().zip(&psi) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn resonant_jaynes_cummings_half_period() {
        // oracle: dense propagation at dt/10 to locate the first |g,1⟩ maximum
        let p = ModelParams::new(1.0, 1.0, 0.01, 4).unwrap();
        let horizon = 200.0;
        let s = CouplingSchedule::linear(0.01, 0.01, horizon).unwrap();
        let e0 = StateVector::basis(p.dims(), Qubit::Excited, 0).unwrap();
        let traj = propagate(&p, &s, &e0, &PropagatorConfig::with_steps(horizon, 4000, 1)).unwrap();
        let g1 = StateVector::basis(p.dims(), Qubit::Ground, 1).unwrap();
        let pops: Vec<f64> = traj.states.iter().map(|st| g1.fidelity(st)).collect();
        let (imax, pmax) = pops.iter().enumerate().fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let t_star = traj.times[imax];
        let expected = std::f64::consts::PI / (2.0 * 0.01);
        assert!(pmax > 0.95);
        assert!((t_star - expected).abs() / expected < 0.02, "transfer peak at {t_star}, expected {expected}");

        let u = unitary_from_spectrum(&build_rabi(&p, 0.01), 0.005).unwrap();
        let mut psi = e0.amplitudes().to_vec();
        let mut best = (0.0, 0.0);
        for k in 1..=40000 {
            psi = u.apply(&psi);
            let pop = psi[1].norm_sqr();
            if pop > best.1 {
                best = (k as f64 * 0.005, pop);
            }
        }
        assert!((best.0 - t_star).abs() < 0.1);
    }

    #[test]
    fn unitarity_and_parity_conservation() {
        let p = defaults(25);
        let s = CouplingSchedule::storage(&p, 105.0).unwrap();
        let psi0 = QubitInput::new(cre(0.6), Complex::new(0.0, 0.8)).unwrap().initial_state(p.dims()).unwrap();
        let traj = propagate(&p, &s, &psi0, &PropagatorConfig::for_duration(105.0)).unwrap();
        let par = parity_op::<f64>(p.dims());
        let p0 = psi0.expectation(&par).re;
        for st in &traj.states {
            assert!((st.norm() - 1.0).abs() < 1e-9);
            assert!((st.expectation(&par).re - p0).abs() < 1e-7);
        }
    }

    #[test]
    fn linearity() {
        let p = defaults(15);
        let s = CouplingSchedule::storage(&p, 30.0).unwrap();
        let cfg = PropagatorConfig::with_steps(30.0, 600, 600);
        let a = StateVector::basis(p.dims(), Qubit::Ground, 0).unwrap();
        let b = StateVector::basis(p.dims(), Qubit::Excited, 1).unwrap();
        let (ca, cb) = (Complex::new(0.6, 0.0), Complex::new(0.0, 0.8));
        let mix = StateVector::new(p.dims(), a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| ca * x + cb * y).collect()).unwrap();
        let fa = propagate(&p, &s, &a, &cfg).unwrap();
        let fb = propagate(&p, &s, &b, &cfg).unwrap();
        let fm = propagate(&p, &s, &mix, &cfg).unwrap();
        for ((x, y), z) in fa
            .final_state()
            .amplitudes()
            .iter()
            .zip(fb.final_state().amplitudes())
            .zip(fm.final_state().amplitudes())
        {
            assert!((ca * x + cb * y - z).norm() < 1e-9);
        }
    }

    #[test]
    fn second_order_convergence() {
        let p = defaults(12);
        let total = 10.0;
        let s = CouplingSchedule::linear(0.0, 1.0, total).unwrap();
        let psi0 = QubitInput::equal_superposition().initial_state(p.dims()).unwrap();
        let run = |steps: usize| {
            propagate(&p, &s, &psi0, &PropagatorConfig::with_steps(total, steps, steps))
                .unwrap()
                .final_state()
                .clone()
        };
        let reference = run(4000);
        let err = |st: &StateVector<f64>| norm(&st.amplitudes().iter().zip(reference.amplitudes()).map(|(a, b)| a - b).collect::<Vec<_>>());
        let e1 = err(&run(500));
        let e2 = err(&run(1000));
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.5, "error ratio {ratio}");
    }

    #[test]
    fn storage_ground_follows_adiabatically() {
        let p = defaults(30);
        let input = QubitInput::new(cre(1.0), cre(0.0)).unwrap();
        let s = CouplingSchedule::storage(&p, 105.0).unwrap();
        let run = storage_run(&p, &input, &s, &PropagatorConfig::for_duration(105.0)).unwrap();
        assert!((run.fidelity[0] - 1.0).abs() < 1e-15);
        let ground = eigendecompose(&build_rabi(&p, 1.0), 1).unwrap();
        assert!(ground.states[0].fidelity(run.trajectory.final_state()) >= 0.999);
    }

    #[test]
    fn slower_sweeps_follow_better() {
        let p = defaults(20);
        let input = QubitInput::new(cre(1.0), cre(0.0)).unwrap();
        let ground = eigendecompose(&build_rabi(&p, 1.0), 1).unwrap();
        let overlaps: Vec<f64> = [5.0, 20.0, 300.0]
            .iter()
            .map(|&t| {
                let s = CouplingSchedule::storage(&p, t).unwrap();
                let r = storage_run(&p, &input, &s, &PropagatorConfig::for_duration(t)).unwrap();
                ground.states[0].fidelity(r.trajectory.final_state())
            })
            .collect();
        assert!(overlaps[0] < overlaps[1] && overlaps[1] < overlaps[2], "{overlaps:?}");
        assert!(1.0 - overlaps[2] < 1e-3);
    }

    #[test]
    fn round_trip_and_phase_sensitivity() {
        let p = defaults(30);
        let input = QubitInput::equal_superposition();
        let cfg = PropagatorConfig::for_duration(105.0);
        let rt = round_trip(&p, &input, 105.0, &cfg, ThetaHandling::Optimize).unwrap();
        assert!(rt.final_fidelity >= 0.99, "{}", rt.final_fidelity);
        let store = CouplingSchedule::storage(&p, 105.0).unwrap();
        let stored = rt.storage.trajectory.final_state();
        let off = retrieval_run(&p, &input, stored, &store.reversed(), &cfg, rt.theta + std::f64::consts::PI).unwrap();
        let f_off = *off.fidelity.last().unwrap();
        assert!(f_off < rt.final_fidelity);
        assert!(f_off < 0.01, "{f_off}");
    }

    #[test]
    fn single_branch_retrieval_is_phase_blind() {
        let p = defaults(30);
        let input = QubitInput::new(cre(1.0), cre(0.0)).unwrap();
        let ground = eigendecompose(&build_rabi(&p, 1.0), 1).unwrap();
        let cfg = PropagatorConfig::for_duration(105.0);
        let back = CouplingSchedule::retrieval(&p, 105.0).unwrap();
        for &theta in &[0.0, 1.0, 2.5] {
            let r = retrieval_run(&p, &input, &ground.states[0], &back, &cfg, theta).unwrap();
            assert!(*r.fidelity.last().unwrap() >= 0.999);
        }
    }

    #[test]
    fn optimal_theta_recovers_applied_phase() {
        let p = defaults(5);
        let input = QubitInput::<f64>::equal_superposition();
        let s = input.initial_state(p.dims()).unwrap();
        let rotated = apply_phase_correction(&s, -1.234);
        let theta = optimal_theta(&rotated, &input);
        assert!((theta - 1.234).abs() < 1e-12);
        let fixed = apply_phase_correction(&rotated, theta);
        assert!((s.fidelity(&fixed) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn landscape_starts_at_theta_zero() {
        let p = defaults(20);
        let input = QubitInput::equal_superposition();
        let s = CouplingSchedule::storage(&p, 40.0).unwrap();
        let land = phase_landscape(&p, &input, &s, &PropagatorConfig::for_duration(40.0), 64).unwrap();
        assert_eq!(land.theta_opt[0], 0.0);
        assert!((land.fidelity[0][0] - 1.0).abs() < 1e-14);
        for (row, &opt) in land.fidelity.iter().zip(&land.theta_opt) {
            let j = land.theta_grid.iter().position(|&t| t == opt).unwrap();
            assert!(row.iter().all(|&f| f <= row[j] && (0.0..=1.0 + 1e-12).contains(&f)));
        }
        assert!(phase_landscape(&p, &input, &s, &PropagatorConfig::for_duration(40.0), 16).is_err());
    }

    #[test]
    fn physical_time_conversion() {
        assert!((physical_time(2.0 * std::f64::consts::PI, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let t = physical_time(105.0, 5e9).unwrap();
        assert!((t - 3.342e-9).abs() < 1e-12);
        assert!((physical_time(210.0, 5e9).unwrap() - 2.0 * t).abs() < 1e-24);
        assert!(physical_time(-1.0, 5e9).is_err());
    }

    #[test]
    fn x_coupling_mixes_parity_sectors_only_through_sigma_x() {
        // sanity: σx anticommutes with the parity operator
        let p = defaults(6);
        let par = parity_op::<f64>(p.dims());
        let sx = pauli_op::<f64>(Axis::X, p.dims());
        let anti = &par.matmul(&sx) + &sx.matmul(&par);
        assert_eq!(anti.max_abs(), 0.0);
    }
}
