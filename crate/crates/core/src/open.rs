//! Mixed-state dynamics under a dressed-basis Lindblad equation.
//!
//! Jump operators connect instantaneous eigenstates of the full Rabi
//! Hamiltonian, downward in energy only (zero temperature). Between refreshes
//! the dressed basis is frozen. Each step conjugates by the midpoint unitary
//! and then applies a Kraus map that is trace preserving by construction.

use num_complex::Complex;

use crate::closed::{is_recorded, PropagatorConfig, QubitInput};
use crate::eigen::{hermitian_eigen, hermitian_eigen_lowest};
use crate::error::{Error, Result};
use crate::expm::unitary_from_spectrum;
use crate::fock::{pauli_op, quadrature_op, Axis, HilbertDims, Qubit, StateVector};
use crate::matrix::{inner, ComplexMatrix};
use crate::rabi::{CouplingSchedule, ModelParams, RabiTerms};
use crate::scalar::{cis, real, tol, wrap_angle, Real};

/// Rates below this are dropped from the jump list.
pub const RATE_FLOOR: f64 = 1e-14;

/// Dissipation strengths for the four channels `σx, σy, σz, a + a†`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseRates<T: Real> {
    pub gamma_x: T,
    pub gamma_y: T,
    pub gamma_z: T,
    pub gamma_r: T,
}

impl<T: Real> NoiseRates<T> {
    pub fn new(gamma_x: T, gamma_y: T, gamma_z: T, gamma_r: T) -> Result<Self> {
        let r = Self {
            gamma_x,
            gamma_y,
            gamma_z,
            gamma_r,
        };
        for (name, g) in [("gamma_x", gamma_x), ("gamma_y", gamma_y), ("gamma_z", gamma_z), ("gamma_r", gamma_r)] {
            if !(g >= T::zero() && g.is_finite()) {
                return Err(Error::invalid(name, format!("must be a non-negative rate, got {g}")));
            }
        }
        Ok(r)
    }

    pub fn zero() -> Self {
        Self {
            gamma_x: T::zero(),
            gamma_y: T::zero(),
            gamma_z: T::zero(),
            gamma_r: T::zero(),
        }
    }

    /// `Γx = Γy = Γz = 1e-3·ω_eg`, `Γr = 1e-4·ω_eg`.
    pub fn reference(omega_eg: T) -> Self {
        let q = omega_eg * real(1e-3);
        Self {
            gamma_x: q,
            gamma_y: q,
            gamma_z: q,
            gamma_r: omega_eg * real(1e-4),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.channels().iter().all(|&(_, g)| g == T::zero())
    }

    fn channels(&self) -> [(Channel, T); 4] {
        [
            (Channel::SigmaX, self.gamma_x),
            (Channel::SigmaY, self.gamma_y),
            (Channel::SigmaZ, self.gamma_z),
            (Channel::Resonator, self.gamma_r),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    SigmaX,
    SigmaY,
    SigmaZ,
    /// Field quadrature `a + a†`.
    Resonator,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::SigmaX, Channel::SigmaY, Channel::SigmaZ, Channel::Resonator];

    pub fn operator<T: Real>(self, dims: HilbertDims) -> ComplexMatrix<T> {
        match self {
            Channel::SigmaX => pauli_op(Axis::X, dims),
            Channel::SigmaY => pauli_op(Axis::Y, dims),
            Channel::SigmaZ => pauli_op(Axis::Z, dims),
            Channel::Resonator => quadrature_op(dims),
        }
    }
}

/// Spectral density of the bath, applied as a factor on each transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateModel<T: Real> {
    /// Transition-independent rates.
    Flat,
    /// Rates scale as `Δ / reference`, so a transition of energy `reference`
    /// sees the bare rate.
    Ohmic { reference: T },
}

impl<T: Real> RateModel<T> {
    pub fn factor(&self, gap: T) -> T {
        match *self {
            RateModel::Flat => T::one(),
            RateModel::Ohmic { reference } => gap / reference,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RateModel::Ohmic { reference } if !(reference > T::zero()) => Err(Error::invalid("rate_model", "ohmic reference gap must be positive")),
            _ => Ok(()),
        }
    }
}

/// One jump `|lower⟩⟨upper|` in the dressed basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump<T: Real> {
    pub lower: usize,
    pub upper: usize,
    pub channel: Channel,
    pub rate: T,
}

/// Jump operators of the instantaneous Hamiltonian, restricted to its
/// `k` lowest levels.
#[derive(Clone, Debug)]
pub struct Dissipators<T: Real> {
    pub energies: Vec<T>,
    /// Dressed eigenvectors, ascending in energy.
    pub basis: Vec<Vec<Complex<T>>>,
    pub jumps: Vec<Jump<T>>,
}

impl<T: Real> Dissipators<T> {
    pub fn levels(&self) -> usize {
        self.basis.len()
    }

    /// `G[j][k]`, the rate of `k → j` summed over channels.
    pub fn rate_matrix(&self) -> Vec<Vec<T>> {
        let k = self.levels();
        let mut g = vec![vec![T::zero(); k]; k];
        for j in &self.jumps {
            g[j.lower][j.upper] = g[j.lower][j.upper] + j.rate;
        }
        g
    }

    /// Total decay rate out of each level.
    pub fn out_rates(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.levels()];
        for j in &self.jumps {
            out[j.upper] = out[j.upper] + j.rate;
        }
        out
    }

    /// Dense `|lower⟩⟨upper|`.
    pub fn jump_operator(&self, jump: &Jump<T>) -> ComplexMatrix<T> {
        let (l, u) = (&self.basis[jump.lower], &self.basis[jump.upper]);
        ComplexMatrix::from_fn(l.len(), |r, c| l[r] * u[c].conj())
    }
}

/// Build the dressed jump list for a single-cell Hamiltonian.
pub fn dressed_dissipators<T: Real>(h: &ComplexMatrix<T>, rates: &NoiseRates<T>, k_levels: usize, model: RateModel<T>) -> Result<Dissipators<T>> {
    let dim = h.dim();
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::invalid("h", format!("dimension {dim} is not a single qubit-resonator cell")));
    }
    if k_levels == 0 || k_levels > dim {
        return Err(Error::invalid("k_levels", format!("need 1..={dim}, got {k_levels}")));
    }
    model.validate()?;
    let dims = HilbertDims::single(dim / 2)?;
    let eig = hermitian_eigen_lowest(h, k_levels)?;
    let energies = eig.values[..k_levels].to_vec();
    let basis = eig.vectors;
    let floor = real::<T>(RATE_FLOOR);

    let mut jumps = Vec::new();
    for (channel, gamma) in rates.channels() {
        if gamma == T::zero() {
            continue;
        }
        let op = channel.operator::<T>(dims);
        let images: Vec<Vec<Complex<T>>> = basis.iter().map(|v| op.apply(v)).collect();
        for upper in 0..k_levels {
            for lower in 0..upper {
                let gap = energies[upper] - energies[lower];
                if !(gap > T::zero()) {
                    continue;
                }
                let m = inner(&basis[lower], &images[upper]);
                let rate = gamma * m.norm_sqr() * model.factor(gap);
                if rate > floor {
                    jumps.push(Jump { lower, upper, channel, rate });
                }
            }
        }
    }
    Ok(Dissipators { energies, basis, jumps })
}

/// Density matrix on a qubit-resonator space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    dims: HilbertDims,
    entries: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validated: Hermitian within 1e-10, unit trace within 1e-8, spectrum
    /// above −1e-8.
    pub fn new(dims: HilbertDims, entries: ComplexMatrix<T>) -> Result<Self> {
        if entries.dim() != dims.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: dims.total_dim(),
                found: entries.dim(),
            });
        }
        let dev = entries.hermitian_deviation();
        if dev > tol(1e-10) {
            return Err(Error::NotHermitian {
                deviation: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        let tr = entries.trace();
        if (tr.re - T::one()).abs() > tol(1e-8) {
            return Err(Error::invalid("rho", format!("trace {} differs from 1", tr.re)));
        }
        let rho = Self { dims, entries };
        let lo = rho.min_eigenvalue()?;
        if lo < -tol::<T>(1e-8) {
            return Err(Error::invalid("rho", format!("negative eigenvalue {lo}")));
        }
        Ok(rho)
    }

    pub fn pure(state: &StateVector<T>) -> Self {
        let a = state.amplitudes();
        Self {
            dims: state.dims(),
            entries: ComplexMatrix::from_fn(a.len(), |i, j| a[i] * a[j].conj()),
        }
    }

    pub fn maximally_mixed(dims: HilbertDims) -> Self {
        let d = dims.total_dim();
        Self {
            dims,
            entries: ComplexMatrix::identity(d).scale_real(T::one() / T::from_usize(d).unwrap()),
        }
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.entries
    }

    pub fn trace(&self) -> T {
        self.entries.trace().re
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> T {
        self.entries.as_slice().iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        Ok(hermitian_eigen_lowest(&self.entries, 0)?.values[0])
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        Ok(hermitian_eigen(&self.entries)?.values)
    }

    /// `Re ⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, psi: &StateVector<T>) -> T {
        inner(psi.amplitudes(), &self.entries.apply(psi.amplitudes())).re
    }

    /// Population of the `(q, n)` basis state.
    pub fn population(&self, qubit: Qubit, n: usize) -> T {
        let i = self.dims.index(qubit, n);
        self.entries[(i, i)].re
    }
}

/// `⟨ψ|ρ|ψ⟩` for a mixed state.
pub fn fidelity_mixed<T: Real>(rho: &DensityMatrix<T>, psi: &StateVector<T>) -> T {
    rho.fidelity(psi)
}

/// Step size, recording, dissipator truncation and refresh interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MasterConfig<T: Real> {
    pub propagator: PropagatorConfig<T>,
    pub k_levels: usize,
    pub refresh_every: usize,
    pub rate_model: RateModel<T>,
}

impl<T: Real> MasterConfig<T> {
    pub fn new(propagator: PropagatorConfig<T>) -> Self {
        Self {
            propagator,
            k_levels: 12,
            refresh_every: 20,
            rate_model: RateModel::Flat,
        }
    }

    pub fn with_k_levels(mut self, k: usize) -> Self {
        self.k_levels = k;
        self
    }

    pub fn with_refresh_every(mut self, n: usize) -> Self {
        self.refresh_every = n;
        self
    }

    pub fn with_rate_model(mut self, model: RateModel<T>) -> Self {
        self.rate_model = model;
        self
    }
}

#[derive(Clone, Debug)]
pub struct DensityTrajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    pub couplings: Vec<T>,
}

impl<T: Real> DensityTrajectory<T> {
    pub fn final_state(&self) -> &DensityMatrix<T> {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

/// Dissipative half of a step, fixed between refreshes.
struct KrausStep<T: Real> {
    k0: ComplexMatrix<T>,
    diss: Dissipators<T>,
    /// `(lower, upper, dt·G)` for nonzero entries.
    gains: Vec<(usize, usize, T)>,
}

impl<T: Real> KrausStep<T> {
    fn new(diss: Dissipators<T>, dt: T, dim: usize) -> Result<Self> {
        let out = diss.out_rates();
        let mut k0 = ComplexMatrix::identity(dim);
        for (k, &g) in out.iter().enumerate() {
            let p = dt * g;
            if p > T::one() {
                return Err(Error::invalid("dt", format!("decay probability {p} per step exceeds 1")));
            }
            let c = T::one() - (T::one() - p).sqrt();
            if c == T::zero() {
                continue;
            }
            let v = &diss.basis[k];
            for i in 0..dim {
                let a = v[i] * c;
                for j in 0..dim {
                    k0[(i, j)] = k0[(i, j)] - a * v[j].conj();
                }
            }
        }
        let g = diss.rate_matrix();
        let mut gains = Vec::new();
        for (lower, row) in g.iter().enumerate() {
            for (upper, &r) in row.iter().enumerate() {
                if r > T::zero() {
                    gains.push((lower, upper, dt * r));
                }
            }
        }
        Ok(Self { k0, diss, gains })
    }

    fn apply(&self, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let mut next = self.k0.matmul(rho).matmul(&self.k0.adjoint());
        if self.gains.is_empty() {
            return next;
        }
        let pops: Vec<T> = self.diss.basis.iter().map(|v| inner(v, &rho.apply(v)).re).collect();
        let mut gain = vec![T::zero(); self.diss.levels()];
        for &(lower, upper, p) in &self.gains {
            gain[lower] = gain[lower] + p * pops[upper];
        }
        let dim = rho.dim();
        for (k, &w) in gain.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            let v = &self.diss.basis[k];
            for i in 0..dim {
                let a = v[i] * w;
                for j in 0..dim {
                    next[(i, j)] = next[(i, j)] + a * v[j].conj();
                }
            }
        }
        next
    }
}

fn hermitize<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let half = real::<T>(0.5);
    ComplexMatrix::from_fn(m.dim(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * half)
}

/// Evolve `rho0` along `schedule` under the dressed master equation.
pub fn evolve_master<T: Real>(
    params: &ModelParams<T>,
    schedule: &CouplingSchedule<T>,
    rho0: &DensityMatrix<T>,
    rates: &NoiseRates<T>,
    cfg: &MasterConfig<T>,
) -> Result<DensityTrajectory<T>> {
    if rho0.dims() != params.dims() {
        return Err(Error::DimensionMismatch {
            expected: params.dims().total_dim(),
            found: rho0.dims().total_dim(),
        });
    }
    if cfg.refresh_every == 0 {
        return Err(Error::invalid("refresh_every", "must be at least 1"));
    }
    let (steps, dt) = cfg.propagator.steps_for(schedule)?;
    let dims = rho0.dims();
    let dim = dims.total_dim();
    let terms = RabiTerms::new(params);
    let half: T = real(0.5);
    let trace_tol: T = tol(1e-8);
    let positivity_floor: T = -tol::<T>(1e-6);

    let mut traj = DensityTrajectory {
        times: vec![T::zero()],
        states: vec![rho0.clone()],
        couplings: vec![schedule.coupling_at(T::zero())?],
    };
    let mut rho = rho0.entries.clone();
    let mut kraus: Option<KrausStep<T>> = None;
    for step in 0..steps {
        let omega = schedule.coupling_at((T::from_usize(step).unwrap() + half) * dt)?;
        let h = terms.at(omega);
        if !rates.is_zero() && step % cfg.refresh_every == 0 {
            kraus = Some(KrausStep::new(dressed_dissipators(&h, rates, cfg.k_levels, cfg.rate_model)?, dt, dim)?);
        }
        let u = unitary_from_spectrum(&h, dt)?;
        rho = u.matmul(&rho).matmul(&u.adjoint());
        if let Some(k) = &kraus {
            rho = k.apply(&rho);
        }
        rho = hermitize(&rho);

        let done = step + 1;
        let tr = rho.trace().re;
        let drift = (tr - T::one()).abs();
        if drift > trace_tol {
            return Err(Error::TraceDrift {
                step: done,
                drift: drift.to_f64().unwrap_or(f64::NAN),
            });
        }
        if is_recorded(done, steps, cfg.propagator.record_every) {
            let state = DensityMatrix { dims, entries: rho.clone() };
            let lo = state.min_eigenvalue()?;
            if lo < positivity_floor {
                return Err(Error::PositivityViolation {
                    step: done,
                    min_eigenvalue: lo.to_f64().unwrap_or(f64::NAN),
                });
            }
            let t = if done == steps {
                schedule.total_time
            } else {
                T::from_usize(done).unwrap() * dt
            };
            traj.times.push(t);
            traj.couplings.push(schedule.coupling_at(t)?);
            traj.states.push(state);
        }
    }
    Ok(traj)
}

/// `⟨ψ_s|Z(θ) ρ Z(θ)†|ψ_s⟩` with `Z(θ)` the decode phase `e^{−iθ}` on `|e⟩`.
pub fn phase_corrected_fidelity<T: Real>(rho: &DensityMatrix<T>, input: &QubitInput<T>, theta: T) -> T {
    let dims = rho.dims();
    let (g, e) = (dims.index(Qubit::Ground, 0), dims.index(Qubit::Excited, 0));
    let m = rho.matrix();
    let b = input.beta * cis(theta);
    let a = input.alpha;
    (a.conj() * a * m[(g, g)] + b.conj() * b * m[(e, e)] + a.conj() * b * m[(g, e)] + b.conj() * a * m[(e, g)]).re
}

/// The decode phase maximizing [`phase_corrected_fidelity`], in `[0, 2π)`.
pub fn optimal_theta_mixed<T: Real>(rho: &DensityMatrix<T>, input: &QubitInput<T>) -> T {
    let dims = rho.dims();
    let x = input.alpha.conj() * input.beta * rho.matrix()[(dims.index(Qubit::Ground, 0), dims.index(Qubit::Excited, 0))];
    if x.norm() == T::zero() {
        return T::zero();
    }
    wrap_angle(-x.arg())
}

/// Storage and retrieval of one qubit with noise.
#[derive(Clone, Debug)]
pub struct NoisyRoundTrip<T: Real> {
    pub storage: DensityTrajectory<T>,
    pub retrieval: DensityTrajectory<T>,
    pub storage_fidelity: Vec<T>,
    /// Phase corrected with `theta`.
    pub retrieval_fidelity: Vec<T>,
    pub theta: T,
    pub final_fidelity: T,
}

pub fn noisy_round_trip<T: Real>(
    params: &ModelParams<T>,
    input: &QubitInput<T>,
    total_time: T,
    rates: &NoiseRates<T>,
    cfg: &MasterConfig<T>,
    theta: Option<T>,
) -> Result<NoisyRoundTrip<T>> {
    let psi_s = input.initial_state(params.dims())?;
    let store = CouplingSchedule::storage(params, total_time)?;
    let storage = evolve_master(params, &store, &DensityMatrix::pure(&psi_s), rates, cfg)?;
    let retrieval = evolve_master(params, &store.reversed(), storage.final_state(), rates, cfg)?;
    let theta = theta.unwrap_or_else(|| optimal_theta_mixed(retrieval.final_state(), input));
    let storage_fidelity = storage.states.iter().map(|r| r.fidelity(&psi_s)).collect();
    let retrieval_fidelity: Vec<T> = retrieval.states.iter().map(|r| phase_corrected_fidelity(r, input, theta)).collect();
    let final_fidelity = *retrieval_fidelity.last().expect("non-empty");
    Ok(NoisyRoundTrip {
        storage,
        retrieval,
        storage_fidelity,
        retrieval_fidelity,
        theta,
        final_fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::propagate;
    use crate::rabi::build_rabi;
    use crate::scalar::cre;

    fn defaults(n: usize) -> ModelParams<f64> {
        ModelParams::standard(n)
    }

    #[test]
    fn shared_across_threads() {
        fn is<S: Send + Sync>() {}
        is::<Dissipators<f64>>();
        is::<DensityMatrix<f32>>();
    }

    #[test]
    fn rates_validated() {
        assert!(NoiseRates::new(1e-3, 0.0, 0.0, -1e-9).unwrap_err().is_validation());
        let r = NoiseRates::<f64>::reference(0.1);
        assert!((r.gamma_x - 1e-4).abs() < 1e-18 && (r.gamma_r - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn decoupled_sigma_x_selection_rule() {
        let p = defaults(8);
        let rates = NoiseRates::new(1e-3, 0.0, 0.0, 0.0).unwrap();
        let d = dressed_dissipators(&build_rabi(&p, 0.0), &rates, 16, RateModel::Flat).unwrap();
        // levels alternate g,n (n - 0.05) and e,n (n + 0.05)
        assert_eq!(d.jumps.len(), 8);
        for j in &d.jumps {
            assert_eq!((j.lower % 2, j.upper, j.channel), (0, j.lower + 1, Channel::SigmaX));
            assert!((j.rate - 1e-3).abs() < 1e-15);
        }
    }

    #[test]
    fn decoupled_resonator_ladder() {
        let p = defaults(8);
        let rates = NoiseRates::new(0.0, 0.0, 0.0, 1e-4).unwrap();
        let d = dressed_dissipators(&build_rabi(&p, 0.0), &rates, 16, RateModel::Flat).unwrap();
        assert_eq!(d.jumps.len(), 14);
        for j in &d.jumps {
            let n = j.upper / 2;
            assert_eq!(j.lower, j.upper - 2);
            assert!((j.rate - 1e-4 * n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn golden_rate_table() {
        // scipy eigh + matrix elements, n_fock = 30, lowest 6 levels
        let golden: [[f64; 6]; 5] = [
            [
                0.0,
                0.0001416276550843805,
                7.963_590_564_099_02e-6,
                1.6761122865642334e-05,
                1.3759880921343733e-05,
                1.6092470127870245e-05,
            ],
            [
                0.0,
                0.0,
                1.8021599479069893e-05,
                6.644_952_224_713_126e-6,
                1.3389547523754183e-05,
                1.5525676055917592e-05,
            ],
            [0.0, 0.0, 0.0, 0.0001561933384585355, 1.3309808852459924e-05, 3.3854345069609474e-05],
            [0.0, 0.0, 0.0, 0.0, 3.5783236292636925e-05, 1.604_886_304_878_856e-5],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.00014150593069140613],
        ];
        let p = defaults(30);
        let rates = NoiseRates::new(1e-4, 1e-4, 1e-4, 1e-5).unwrap();
        let g = dressed_dissipators(&build_rabi(&p, 1.0), &rates, 6, RateModel::Flat).unwrap().rate_matrix();
        for (j, row) in golden.iter().enumerate() {
            for (k, &want) in row.iter().enumerate() {
                assert!((g[j][k] - want).abs() < 1e-12 * 1e-4 + 1e-9 * want, "G[{j}][{k}] = {} vs {want}", g[j][k]);
            }
        }
        assert!(g[5].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ohmic_scales_with_gap() {
        let p = defaults(8);
        let rates = NoiseRates::new(1e-3, 0.0, 0.0, 0.0).unwrap();
        let h = build_rabi(&p, 0.0);
        let d = dressed_dissipators(&h, &rates, 4, RateModel::Ohmic { reference: 0.1 }).unwrap();
        for j in &d.jumps {
            assert!((j.rate - 1e-3).abs() < 1e-14);
        }
        let d = dressed_dissipators(&h, &rates, 4, RateModel::Ohmic { reference: 0.05 }).unwrap();
        assert!(d.jumps.iter().all(|j| (j.rate - 2e-3).abs() < 1e-14));
        assert!(dressed_dissipators(&h, &rates, 17, RateModel::Flat).is_err());
    }

    #[test]
    fn density_validation_and_fidelity() {
        let p = defaults(4);
        let psi = StateVector::<f64>::basis(p.dims(), Qubit::Excited, 2).unwrap();
        let rho = DensityMatrix::pure(&psi);
        assert!((fidelity_mixed(&rho, &psi) - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::<f64>::maximally_mixed(p.dims());
        assert!((fidelity_mixed(&mixed, &psi) - 0.125).abs() < 1e-15);
        assert!((mixed.purity() - 0.125).abs() < 1e-15);
        let mut bad = rho.matrix().clone();
        bad[(0, 0)] = cre(0.5);
        assert!(DensityMatrix::new(p.dims(), bad).is_err());
        assert!(DensityMatrix::new(p.dims(), rho.matrix().clone()).is_ok());
    }

    #[test]
    fn mid_protocol_fidelity_matches_direct_contraction() {
        let p = defaults(10);
        let input = QubitInput::new(cre(0.6), Complex::new(0.0, 0.8)).unwrap();
        let psi = input.initial_state(p.dims()).unwrap();
        let s = CouplingSchedule::storage(&p, 20.0).unwrap();
        let cfg = MasterConfig::new(PropagatorConfig::for_duration(20.0)).with_k_levels(8);
        let traj = evolve_master(&p, &s, &DensityMatrix::pure(&psi), &NoiseRates::new(1e-2, 1e-2, 1e-2, 1e-3).unwrap(), &cfg).unwrap();
        let rho = &traj.states[traj.states.len() / 2];
        let m = rho.matrix();
        let a = psi.amplitudes();
        let mut direct = 0.0;
        for i in 0..a.len() {
            for j in 0..a.len() {
                direct += (a[i].conj() * m[(i, j)] * a[j]).re;
            }
        }
        assert!((fidelity_mixed(rho, &psi) - direct).abs() < 1e-14);
        assert!(rho.purity() < 1.0 - 1e-6);
    }

    #[test]
    fn zero_rates_reproduce_closed_evolution() {
        let p = defaults(20);
        let input = QubitInput::<f64>::equal_superposition();
        let psi = input.initial_state(p.dims()).unwrap();
        let s = CouplingSchedule::storage(&p, 60.0).unwrap();
        let pc = PropagatorConfig::for_duration(60.0);
        let closed = propagate(&p, &s, &psi, &pc).unwrap();
        let open = evolve_master(&p, &s, &DensityMatrix::pure(&psi), &NoiseRates::zero(), &MasterConfig::new(pc)).unwrap();
        assert_eq!(closed.states.len(), open.states.len());
        for (c, o) in closed.states.iter().zip(&open.states) {
            assert!((o.fidelity(c) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn excited_population_decays_exponentially() {
        let p = defaults(4);
        let gx = 0.01;
        let rates = NoiseRates::new(gx, 0.0, 0.0, 0.0).unwrap();
        let s = CouplingSchedule::linear(0.0, 0.0, 100.0).unwrap();
        let rho0 = DensityMatrix::pure(&StateVector::basis(p.dims(), Qubit::Excited, 0).unwrap());
        let cfg = MasterConfig::new(PropagatorConfig::with_steps(100.0, 1000, 100)).with_k_levels(8);
        let traj = evolve_master(&p, &s, &rho0, &rates, &cfg).unwrap();
        for (t, r) in traj.times.iter().zip(&traj.states) {
            let want = (-gx * t).exp();
            let got = r.population(Qubit::Excited, 0);
            assert!((got - want).abs() <= 0.02 * want, "t={t}: {got} vs {want}");
            assert!((r.population(Qubit::Ground, 0) + got - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invariants_along_noisy_sweep() {
        let p = defaults(12);
        let input = QubitInput::<f64>::equal_superposition();
        let s = CouplingSchedule::storage(&p, 40.0).unwrap();
        let rates = NoiseRates::new(5e-3, 5e-3, 5e-3, 5e-4).unwrap();
        let cfg = MasterConfig::new(PropagatorConfig::for_duration(40.0)).with_k_levels(10);
        let traj = evolve_master(&p, &s, &DensityMatrix::pure(&input.initial_state(p.dims()).unwrap()), &rates, &cfg).unwrap();
        for r in &traj.states {
            assert!((r.trace() - 1.0).abs() < 1e-8);
            assert!(r.matrix().hermitian_deviation() < 1e-10);
            assert!(r.min_eigenvalue().unwrap() >= -1e-8);
        }
    }

    #[test]
    fn ground_population_grows_at_stationarity() {
        let p = defaults(10);
        let h = build_rabi(&p, 0.6);
        let eig = hermitian_eigen(&h).unwrap();
        let ground = StateVector::new(p.dims(), eig.vectors[0].clone()).unwrap();
        let amps: Vec<_> = eig.vectors[1].iter().zip(&eig.vectors[3]).map(|(a, b)| (a + b) * 0.5f64.sqrt()).collect();
        let rho0 = DensityMatrix::pure(&StateVector::new(p.dims(), amps).unwrap());
        let s = CouplingSchedule::linear(0.6, 0.6, 400.0).unwrap();
        let rates = NoiseRates::new(1e-2, 1e-2, 1e-2, 1e-3).unwrap();
        let cfg = MasterConfig::new(PropagatorConfig::with_steps(400.0, 2000, 20)).with_k_levels(8);
        let traj = evolve_master(&p, &s, &rho0, &rates, &cfg).unwrap();
        let f: Vec<f64> = traj.states.iter().map(|r| r.fidelity(&ground)).collect();
        let tail = &f[f.len() * 4 / 5..];
        assert!(tail.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(f[f.len() - 1] > f[0] + 0.1);
    }

    #[test]
    fn optimal_mixed_theta_agrees_with_pure_case() {
        let p = defaults(6);
        let input = QubitInput::<f64>::equal_superposition();
        let psi = crate::closed::apply_phase_correction(&input.initial_state(p.dims()).unwrap(), -0.7);
        let rho = DensityMatrix::pure(&psi);
        let th = optimal_theta_mixed(&rho, &input);
        assert!((th - crate::closed::optimal_theta(&psi, &input)).abs() < 1e-12);
        assert!((phase_corrected_fidelity(&rho, &input, th) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn k_levels_doubling_converges() {
        let p = defaults(16);
        let input = QubitInput::<f64>::equal_superposition();
        let rates = NoiseRates::reference(0.1);
        let run = |k: usize| {
            let cfg = MasterConfig::new(PropagatorConfig::for_duration(60.0)).with_k_levels(k);
            noisy_round_trip(&p, &input, 60.0, &rates, &cfg, None).unwrap().final_fidelity
        };
        let (f6, f12, f24) = (run(6), run(12), run(24));
        assert!((f12 - f24).abs() <= (f6 - f12).abs() + 1e-6, "{f6} {f12} {f24}");
        assert!((f12 - f24).abs() < 1e-3);
    }
}
