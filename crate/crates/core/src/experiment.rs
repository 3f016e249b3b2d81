//! End-to-end experiment descriptions and their result bundles.
//!
//! This layer is concrete in `f64`: it is what the command-line front end
//! serializes. An [`ExperimentSpec`] is fully resolved (no hidden defaults)
//! and hashes to a stable identifier that tags every scalar it produces.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::closed::{optimal_evolution_time, phase_landscape, physical_time, round_trip, storage_run, PropagatorConfig, QubitInput, ThetaHandling};
use crate::eigen::hermitian_eigen_lowest;
use crate::error::{Error, Result};
use crate::open::{noisy_round_trip, MasterConfig, NoiseRates, RateModel};
use crate::protocols::two_cell_round_trip;
use crate::rabi::{build_rabi, CouplingSchedule, ModelParams};
use crate::spectral::{cat_state, eigendecompose, Branch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Spectrum,
    Storage,
    Retrieval,
    RoundTrip,
    PhaseMap,
    Noisy,
    Entangled,
    Convergence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Spectrum,
        ExperimentKind::Storage,
        ExperimentKind::Retrieval,
        ExperimentKind::RoundTrip,
        ExperimentKind::PhaseMap,
        ExperimentKind::Noisy,
        ExperimentKind::Entangled,
        ExperimentKind::Convergence,
    ];

    /// Subcommand spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Storage => "storage",
            ExperimentKind::Retrieval => "retrieval",
            ExperimentKind::RoundTrip => "roundtrip",
            ExperimentKind::PhaseMap => "phase-map",
            ExperimentKind::Noisy => "noisy",
            ExperimentKind::Entangled => "entangled",
            ExperimentKind::Convergence => "convergence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateModelKind {
    Flat,
    /// Rates proportional to the transition energy, normalized at `ω_eg`.
    Ohmic,
}

/// Every knob of a run, resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub params: ModelParams<f64>,
    /// Coupling at the start of a storage sweep (and end of retrieval).
    pub omega_start: f64,
    pub total_time: f64,
    pub steps: usize,
    pub record_every: usize,
    pub norm_tol: f64,
    pub alpha_f: f64,
    pub beta_f: f64,
    /// Relative phase of the input, `β = beta_f·e^{i·input_phase}`.
    pub input_phase: f64,
    pub theta: ThetaHandling<f64>,
    pub theta_points: usize,
    pub t_grid: Vec<f64>,
    pub noise: NoiseRates<f64>,
    pub k_levels: usize,
    pub refresh_every: usize,
    pub rate_model: RateModelKind,
    pub two_cell_n_fock: usize,
    pub fock_grid: Vec<usize>,
    pub spectrum_levels: usize,
    pub spectrum_points: usize,
    /// Cavity frequency in Hz used for the physical-time conversion.
    pub f_cav_hz: f64,
}

impl ExperimentSpec {
    /// Defaults for each experiment kind.
    pub fn preset(kind: ExperimentKind) -> Self {
        let params = ModelParams::standard(if kind == ExperimentKind::Noisy { 20 } else { 30 });
        let h = 0.5f64.sqrt();
        Self {
            name: kind.as_str().to_string(),
            kind,
            params,
            omega_start: 0.0,
            total_time: 105.0,
            steps: 2000,
            record_every: 10,
            norm_tol: 1e-9,
            alpha_f: h,
            beta_f: h,
            input_phase: 0.0,
            theta: ThetaHandling::Optimize,
            theta_points: 64,
            t_grid: vec![105.0, 120.0],
            noise: NoiseRates::reference(params.omega_eg),
            k_levels: 12,
            refresh_every: 20,
            rate_model: RateModelKind::Flat,
            two_cell_n_fock: 15,
            fock_grid: vec![20, 30, 40],
            spectrum_levels: 6,
            spectrum_points: 101,
            f_cav_hz: 5e9,
        }
    }

    pub fn input(&self) -> Result<QubitInput<f64>> {
        QubitInput::new(Complex::new(self.alpha_f, 0.0), Complex::from_polar(self.beta_f, self.input_phase))
    }

    pub fn propagator(&self, total_time: f64) -> PropagatorConfig<f64> {
        let mut cfg = PropagatorConfig::with_steps(total_time, self.steps, self.record_every);
        cfg.norm_tol = self.norm_tol;
        cfg
    }

    pub fn master(&self) -> MasterConfig<f64> {
        let model = match self.rate_model {
            RateModelKind::Flat => RateModel::Flat,
            RateModelKind::Ohmic => RateModel::Ohmic {
                reference: self.params.omega_eg,
            },
        };
        MasterConfig::new(self.propagator(self.total_time))
            .with_k_levels(self.k_levels)
            .with_refresh_every(self.refresh_every)
            .with_rate_model(model)
    }

    pub fn storage_schedule(&self, total_time: f64) -> Result<CouplingSchedule<f64>> {
        CouplingSchedule::linear(self.omega_start, self.params.omega0, total_time)
    }

    /// Every violated constraint, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        let p = &self.params;
        check(
            p.omega_cav > 0.0 && p.omega_cav.is_finite(),
            format!("omega_cav must be positive, got {}", p.omega_cav),
        );
        check(
            p.omega_eg >= 0.0 && p.omega_eg.is_finite(),
            format!("omega_eg must be non-negative, got {}", p.omega_eg),
        );
        check(p.omega0 > 0.0 && p.omega0.is_finite(), format!("omega0 must be positive, got {}", p.omega0));
        check(
            self.omega_start >= 0.0 && self.omega_start < p.omega0,
            format!("omega_start must lie in [0, omega0), got {}", self.omega_start),
        );
        check(p.n_fock >= 2, format!("n_fock must be at least 2, got {}", p.n_fock));
        check(
            self.total_time > 0.0 && self.total_time.is_finite(),
            format!("T must be positive, got {}", self.total_time),
        );
        check(
            self.steps >= crate::closed::MIN_STEPS,
            format!("steps must be at least {}, got {}", crate::closed::MIN_STEPS, self.steps),
        );
        check(self.record_every >= 1, "record_every must be at least 1".to_string());
        check(self.norm_tol > 0.0, format!("norm_tol must be positive, got {}", self.norm_tol));
        let n = self.alpha_f * self.alpha_f + self.beta_f * self.beta_f;
        check((n - 1.0).abs() <= 1e-9, format!("alpha_f^2 + beta_f^2 must be 1, got {n}"));
        check(self.input_phase.is_finite(), "input_phase must be finite".to_string());
        if let ThetaHandling::Fixed(t) = self.theta {
            check(t.is_finite(), "theta must be finite".to_string());
        }
        check(self.theta_points >= 32, format!("theta_points must be at least 32, got {}", self.theta_points));
        check(
            !self.t_grid.is_empty() && self.t_grid.iter().all(|&t| t > 0.0 && t.is_finite()),
            "t_grid must hold positive durations".to_string(),
        );
        for (name, g) in [
            ("gamma_x", self.noise.gamma_x),
            ("gamma_y", self.noise.gamma_y),
            ("gamma_z", self.noise.gamma_z),
            ("gamma_r", self.noise.gamma_r),
        ] {
            check(g >= 0.0 && g.is_finite(), format!("{name} must be non-negative, got {g}"));
        }
        check(
            self.k_levels >= 1 && self.k_levels <= 2 * p.n_fock,
            format!("k_levels must lie in [1, {}], got {}", 2 * p.n_fock, self.k_levels),
        );
        check(self.refresh_every >= 1, "refresh_every must be at least 1".to_string());
        check(
            self.rate_model == RateModelKind::Flat || p.omega_eg > 0.0,
            "ohmic rates need omega_eg > 0".to_string(),
        );
        check(
            self.two_cell_n_fock >= 2,
            format!("two_cell_n_fock must be at least 2, got {}", self.two_cell_n_fock),
        );
        check(
            !self.fock_grid.is_empty() && self.fock_grid.iter().all(|&n| n >= 4),
            "fock_grid entries must be at least 4".to_string(),
        );
        check(
            self.spectrum_levels >= 1 && self.spectrum_levels <= 2 * p.n_fock,
            format!("spectrum_levels must lie in [1, {}]", 2 * p.n_fock),
        );
        check(self.spectrum_points >= 2, "spectrum_points must be at least 2".to_string());
        check(self.f_cav_hz > 0.0, format!("f_cav_hz must be positive, got {}", self.f_cav_hz));
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid("spec", v.join("; ")))
        }
    }

    /// Resolved parameters as `(key, value)` in a fixed order.
    pub fn canonical_pairs(&self) -> Vec<(&'static str, String)> {
        let list = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("name", self.name.clone()),
            ("experiment", self.kind.as_str().to_string()),
            ("omega_cav", self.params.omega_cav.to_string()),
            ("omega_eg", self.params.omega_eg.to_string()),
            ("omega0", self.params.omega0.to_string()),
            ("omega_start", self.omega_start.to_string()),
            ("n_fock", self.params.n_fock.to_string()),
            ("T", self.total_time.to_string()),
            ("steps", self.steps.to_string()),
            ("record_every", self.record_every.to_string()),
            ("norm_tol", self.norm_tol.to_string()),
            ("alpha_f", self.alpha_f.to_string()),
            ("beta_f", self.beta_f.to_string()),
            ("input_phase", self.input_phase.to_string()),
            (
                "theta",
                match self.theta {
                    ThetaHandling::Optimize => "optimize".to_string(),
                    ThetaHandling::Fixed(t) => t.to_string(),
                },
            ),
            ("theta_points", self.theta_points.to_string()),
            ("t_grid", list(&self.t_grid)),
            ("gamma_x", self.noise.gamma_x.to_string()),
            ("gamma_y", self.noise.gamma_y.to_string()),
            ("gamma_z", self.noise.gamma_z.to_string()),
            ("gamma_r", self.noise.gamma_r.to_string()),
            ("k_levels", self.k_levels.to_string()),
            ("refresh_every", self.refresh_every.to_string()),
            (
                "rate_model",
                match self.rate_model {
                    RateModelKind::Flat => "flat".to_string(),
                    RateModelKind::Ohmic => "ohmic".to_string(),
                },
            ),
            ("two_cell_n_fock", self.two_cell_n_fock.to_string()),
            ("fock_grid", self.fock_grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")),
            ("spectrum_levels", self.spectrum_levels.to_string()),
            ("spectrum_points", self.spectrum_points.to_string()),
            ("f_cav_hz", self.f_cav_hz.to_string()),
        ]
    }

    /// Hex SHA-256 of the canonical `key=value` lines.
    pub fn hash(&self) -> String {
        let mut text = String::new();
        for (k, v) in self.canonical_pairs() {
            let _ = writeln!(text, "{k}={v}");
        }
        Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// A table of samples; the first column is the independent variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Fidelity over (coupling, decode phase).
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    pub name: String,
    pub total_time: f64,
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
    /// `fidelity[i][j]` at `omega[i]`, `theta[j]`.
    pub fidelity: Vec<Vec<f64>>,
    pub theta_opt: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scalar {
    pub name: String,
    pub value: f64,
    pub spec_hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultBundle {
    pub spec_hash: String,
    pub kind: ExperimentKind,
    pub curves: Vec<Curve>,
    pub landscapes: Vec<Landscape>,
    pub scalars: Vec<Scalar>,
}

impl ResultBundle {
    fn new(spec: &ExperimentSpec) -> Self {
        Self {
            spec_hash: spec.hash(),
            kind: spec.kind,
            curves: vec![],
            landscapes: vec![],
            scalars: vec![],
        }
    }

    fn scalar(&mut self, name: impl Into<String>, value: f64) {
        self.scalars.push(Scalar {
            name: name.into(),
            value,
            spec_hash: self.spec_hash.clone(),
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.scalars.iter().find(|s| s.name == name).map(|s| s.value)
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }
}

/// Run one experiment. Failures carry the name of the stage that raised them.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultBundle> {
    spec.validate()?;
    let mut out = ResultBundle::new(spec);
    match spec.kind {
        ExperimentKind::Spectrum => run_spectrum(spec, &mut out).map_err(|e| e.in_stage("spectrum"))?,
        ExperimentKind::Storage => run_storage(spec, &mut out)?,
        ExperimentKind::Retrieval | ExperimentKind::RoundTrip => run_round_trip(spec, &mut out)?,
        ExperimentKind::PhaseMap => run_phase_map(spec, &mut out).map_err(|e| e.in_stage("phase-landscape"))?,
        ExperimentKind::Noisy => run_noisy(spec, &mut out).map_err(|e| e.in_stage("noisy"))?,
        ExperimentKind::Entangled => run_entangled(spec, &mut out).map_err(|e| e.in_stage("two-cell"))?,
        ExperimentKind::Convergence => run_convergence(spec, &mut out).map_err(|e| e.in_stage("convergence"))?,
    }
    Ok(out)
}

fn grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            if i + 1 == points {
                end
            } else {
                start + (end - start) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// `F_G, F_E` of the two lowest instantaneous eigenstates against the cat
/// approximants at each coupling.
pub fn cat_fidelities(params: &ModelParams<f64>, couplings: &[f64]) -> Result<Vec<(f64, f64)>> {
    couplings
        .par_iter()
        .map(|&om| {
            let spec = eigendecompose(&build_rabi(params, om), 2)?;
            let g = cat_state(params, om, Branch::G)?;
            let e = cat_state(params, om, Branch::E)?;
            Ok((g.fidelity(&spec.states[0]), e.fidelity(&spec.states[1])))
        })
        .collect()
}

fn run_spectrum(spec: &ExperimentSpec, out: &mut ResultBundle) -> Result<()> {
    let p = &spec.params;
    let omegas = grid(spec.omega_start, p.omega0, spec.spectrum_points);
    let k = spec.spectrum_levels;
    let energies: Vec<Vec<f64>> = omegas
        .par_iter()
        .map(|&om| Ok(hermitian_eigen_lowest(&build_rabi(p, om), 0)?.values[..k].to_vec()))
        .collect::<Result<_>>()?;
    let names: Vec<String> = std::iter::once("omega".to_string()).chain((0..k).map(|i| format!("E{i}"))).collect();
    let mut curve = Curve {
        name: "spectrum".into(),
        columns: names,
        rows: vec![],
    };
    for (om, e) in omegas.iter().zip(&energies) {
        curve.rows.push(std::iter::once(*om).chain(e.iter().copied()).collect());
    }
    out.curves.push(curve);

    let mut cats = Curve::new("cat_fidelity", &["omega", "F_G", "F_E"]);
    for (om, (g, e)) in omegas.iter().zip(cat_fidelities(p, &omegas)?) {
        cats.rows.push(vec![*om, g, e]);
    }
    out.curves.push(cats);
    let last = energies.last().expect("at least two points");
    out.scalar("E0", last[0]);
    if k > 1 {
        out.scalar("gap", last[1] - last[0]);
    }
    Ok(())
}

fn sweep_curve(name: &str, times: &[f64], couplings: &[f64], f_s: &[f64], cats: &[(f64, f64)]) -> Curve {
    let mut c = Curve::new(name, &["t", "omega", "F_s", "F_G", "F_E"]);
    for i in 0..times.len() {
        c.rows.push(vec![times[i], couplings[i], f_s[i], cats[i].0, cats[i].1]);
    }
    c
}

fn run_storage(spec: &ExperimentSpec, out: &mut ResultBundle) -> Result<()> {
    let p = &spec.params;
    let input = spec.input()?;
    let schedule = spec.storage_schedule(spec.total_time)?;
    let run = storage_run(p, &input, &schedule, &spec.propagator(spec.total_time)).map_err(|e| e.in_stage("storage"))?;
    let traj = &run.trajectory;
    let cats = cat_fidelities(p, &traj.couplings).map_err(|e| e.in_stage("cat-fidelity"))?;
    out.curves.push(sweep_curve("storage", &traj.times, &traj.couplings, &run.fidelity, &cats));

    let spectrum = eigendecompose(&build_rabi(p, p.omega0), 2).map_err(|e| e.in_stage("storage"))?;
    let end = traj.final_state();
    out.scalar("F_s_final", *run.fidelity.last().expect("non-empty"));
    out.scalar("ground_population", spectrum.states[0].fidelity(end));
    out.scalar("doublet_population", spectrum.states[0].fidelity(end) + spectrum.states[1].fidelity(end));
    out.scalar("min_F_G", cats.iter().map(|c| c.0).fold(1.0, f64::min));
    out.scalar("min_F_E", cats.iter().map(|c| c.1).fold(1.0, f64::min));
    Ok(())
}

fn run_round_trip(spec: &ExperimentSpec, out: &mut ResultBundle) -> Result<()> {
    let p = &spec.params;
    let input = spec.input()?;
    if spec.omega_start != 0.0 {
        return Err(Error::invalid("omega_start", "round trips start and end decoupled (omega_start = 0)"));
    }
    let rt = round_trip(p, &input, spec.total_time, &spec.propagator(spec.total_time), spec.theta).map_err(|e| e.in_stage("round-trip"))?;
    let s = &rt.storage.trajectory;
    let r = &rt.retrieval.trajectory;
    let s_cats = cat_fidelities(p, &s.couplings).map_err(|e| e.in_stage("cat-fidelity"))?;
    let r_cats = cat_fidelities(p, &r.couplings).map_err(|e| e.in_stage("cat-fidelity"))?;
    if spec.kind == ExperimentKind::RoundTrip {
        out.curves.push(sweep_curve("storage", &s.times, &s.couplings, &rt.storage.fidelity, &s_cats));
    }
    out.curves
        .push(sweep_curve("retrieval", &r.times, &r.couplings, &rt.retrieval.fidelity, &r_cats));
    out.scalar("F_s", rt.final_fidelity);
    out.scalar("theta_opt", rt.theta);
    out.scalar("physical_time_ns", physical_time(spec.total_time / p.omega_cav, spec.f_cav_hz)? * 1e9);
    Ok(())
}

fn run_phase_map(spec: &ExperimentSpec, out: &mut ResultBundle) -> Result<()> {
    let p = &spec.params;
    let input = spec.input()?;
    for &t in &spec.t_grid {
        let land = phase_landscape(p, &input, &spec.storage_schedule(t)?, &spec.propagator(t), spec.theta_points)?;
        let ridge = land.max_fidelity();
        let label = format_time(t);
        out.scalar(format!("min_ridge_T{label}"), ridge.iter().copied().fold(1.0, f64::min));
        out.scalar(format!("theta_opt_final_T{label}"), *land.theta_opt.last().expect("non-empty"));
        out.landscapes.push(Landscape {
            name: format!("phase_map_T{label}"),
            total_time: t,
            omega: land.coupling_grid,
            theta: land.theta_grid,
            fidelity: land.fidelity,
            theta_opt: land.theta_opt,
        });
    }
    if spec.t_grid.len() > 1 {
        let (best, table) = optimal_evolution_time(p, &input, &spec.t_grid, spec.steps, spec.record_every)?;
        let mut c = Curve::new("time_scan", &["T", "theta_opt", "F_s"]);
        for row in table {
            c.rows.push(vec![row.total_time, row.theta, row.fidelity]);
        }
        out.curves.push(c);
        out.scalar("best_T", best);
    }
    Ok(())
}

/// `105` → `"105"`, `102.5` → `"102.5"`.
fn format_time(t: f64) -> String {
    let s = t.to_string();
    s.replace('.', "p")
}

fn run_noisy(spec: &ExperimentSpec, out: &mut ResultBundle) -> Result<()> {
    let p = &spec.params;
    let input = spec.input()?;
    if spec.omega_start != 0.0 {
        return Err(Error::invalid("omega_start", "round trips start and end decoupled (omega_start = 0)"));
    }
    let fixed = match spec.theta {
        ThetaHandling::Optimize => None,
        ThetaHandling::Fixed(t) => Some(t),
    };
    let rt = noisy_round_trip(p, &input, spec.total_time, &spec.noise, &spec.master(), fixed)?;
    for (name, traj, f) in [
        ("noisy_storage", &rt.storage, &rt.storage_fidelity),
        ("noisy_retrieval", &rt.retrieval, &rt.retrieval_fidelity),
    ] {
        let mut c = Curve::new(name, &["t", "omega", "F_s", "purity"]);
        for i in 0..traj.times.len() {
            c.rows.push(vec![traj.times[i], traj.couplings[i], f[i], traj.states[i].purity()]);
        }
        out.curves.push(c);
    }
    let end = rt.retrieval.final_state();
    out.scalar("F_s", rt.final_fidelity);
    out.scalar("theta_opt", rt.theta);
    out.scalar("purity", end.purity());
    out.scalar("trace", end.trace());
    Ok(())
}

fn run_entangled(spec: &ExperimentSpec, out: &mut ResultBundle) -> Result<()> {
    let p = spec.params.with_n_fock(spec.two_cell_n_fock);
    if spec.omega_start != 0.0 {
        return Err(Error::invalid("omega_start", "round trips start and end decoupled (omega_start = 0)"));
    }
    let rt = two_cell_round_trip(&p, spec.total_time, &spec.propagator(spec.total_time))?;
    for (name, run) in [("two_cell_storage", &rt.storage), ("two_cell_retrieval", &rt.retrieval)] {
        let mut c = Curve::new(name, &["t", "omega", "F_bar"]);
        let traj = &run.trajectory;
        for i in 0..traj.times.len() {
            c.rows.push(vec![traj.times[i], traj.couplings[i], run.fidelity[i]]);
        }
        out.curves.push(c);
    }
    out.scalar("F_target", rt.target_fidelity);
    out.scalar("F_bar", rt.final_fidelity);
    out.scalar("theta1", rt.theta.0);
    out.scalar("theta2", rt.theta.1);
    out.scalar("entropy_bits", rt.final_entropy);
    Ok(())
}

fn run_convergence(spec: &ExperimentSpec, out: &mut ResultBundle) -> Result<()> {
    let input = spec.input()?;
    let rows: Vec<Vec<f64>> = spec
        .fock_grid
        .par_iter()
        .map(|&n| {
            let p = spec.params.with_n_fock(n);
            let e = hermitian_eigen_lowest(&build_rabi(&p, p.omega0), 0)?.values;
            let rt = round_trip(&p, &input, spec.total_time, &spec.propagator(spec.total_time), spec.theta)?;
            Ok(vec![n as f64, e[0], e[1], e[2], e[3], rt.final_fidelity, rt.theta])
        })
        .collect::<Result<_>>()?;
    let mut c = Curve::new("convergence", &["n_fock", "E0", "E1", "E2", "E3", "F_s", "theta_opt"]);
    c.rows = rows;
    let last = c.rows.last().expect("non-empty").clone();
    if let Some(prev) = c.rows.iter().rev().nth(1) {
        let drift = (1..5).map(|j| (last[j] - prev[j]).abs()).fold(0.0, f64::max);
        out.scalar("energy_drift", drift);
    }
    out.scalar("F_s", last[5]);
    out.curves.push(c);
    Ok(())
}
