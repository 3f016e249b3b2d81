//! `key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Keys are the ones printed in `manifest.json` under `parameters`, plus
//! `seed`. Later assignments win, and `--set` overrides come after the file.

use std::fmt;

use thiserror::Error;
use uscmem::closed::ThetaHandling;
use uscmem::experiment::{ExperimentKind, ExperimentSpec, RateModelKind};
use uscmem::open::NoiseRates;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: expected `key = value`, found `{text}`")]
    Syntax { origin: Origin, text: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: Origin, key: String },
    #[error("{origin}: bad value for `{key}`: {reason}")]
    BadValue { origin: Origin, key: String, reason: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Where an assignment came from, for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override(s) => write!(f, "--set {s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub origin: Origin,
    pub key: String,
    pub value: String,
}

/// Split a document into assignments without interpreting them.
pub fn parse_document(text: &str) -> Result<Vec<Assignment>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(split(line, Origin::Line(i + 1))?);
    }
    Ok(out)
}

/// Parse one `key=value` override from the command line.
pub fn parse_override(text: &str) -> Result<Assignment, ConfigError> {
    split(text.trim(), Origin::Override(text.to_string()))
}

fn split(line: &str, origin: Origin) -> Result<Assignment, ConfigError> {
    match line.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => Ok(Assignment {
            origin,
            key: k.trim().to_string(),
            value: v.trim().to_string(),
        }),
        _ => Err(ConfigError::Syntax {
            origin,
            text: line.to_string(),
        }),
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    /// Reserved; every pipeline is deterministic.
    pub seed: u64,
}

/// Start from the experiment's defaults and apply `assignments` in order.
pub fn resolve(kind: ExperimentKind, assignments: &[Assignment]) -> Result<RunConfig, ConfigError> {
    let mut spec = ExperimentSpec::preset(kind);
    let mut seed = 0;
    let mut explicit_rates = [false; 4];
    for a in assignments {
        apply(&mut spec, &mut seed, &mut explicit_rates, a)?;
    }
    let reference = NoiseRates::reference(spec.params.omega_eg);
    let defaults = [reference.gamma_x, reference.gamma_y, reference.gamma_z, reference.gamma_r];
    let slots = [
        &mut spec.noise.gamma_x,
        &mut spec.noise.gamma_y,
        &mut spec.noise.gamma_z,
        &mut spec.noise.gamma_r,
    ];
    for ((slot, d), set) in slots.into_iter().zip(defaults).zip(explicit_rates) {
        if !set {
            *slot = d;
        }
    }
    let v = spec.violations();
    if !v.is_empty() {
        return Err(ConfigError::Invalid(v));
    }
    Ok(RunConfig { spec, seed })
}

/// Parse a document and resolve it in one go.
pub fn parse_config(kind: ExperimentKind, text: &str) -> Result<RunConfig, ConfigError> {
    resolve(kind, &parse_document(text)?)
}

fn apply(spec: &mut ExperimentSpec, seed: &mut u64, explicit_rates: &mut [bool; 4], a: &Assignment) -> Result<(), ConfigError> {
    let bad = |reason: String| ConfigError::BadValue {
        origin: a.origin.clone(),
        key: a.key.clone(),
        reason,
    };
    let real = || a.value.parse::<f64>().map_err(|_| bad(format!("`{}` is not a number", a.value)));
    let count = || {
        a.value
            .parse::<usize>()
            .map_err(|_| bad(format!("`{}` is not a non-negative integer", a.value)))
    };
    let v = &a.value;
    match a.key.as_str() {
        "name" => spec.name = v.clone(),
        "omega_cav" => spec.params.omega_cav = real()?,
        "omega_eg" => spec.params.omega_eg = real()?,
        "omega0" => spec.params.omega0 = real()?,
        "omega_start" => spec.omega_start = real()?,
        "n_fock" => spec.params.n_fock = count()?,
        "T" => spec.total_time = real()?,
        "steps" => spec.steps = count()?,
        "record_every" => spec.record_every = count()?,
        "norm_tol" => spec.norm_tol = real()?,
        "alpha_f" => spec.alpha_f = real()?,
        "beta_f" => spec.beta_f = real()?,
        "input_phase" => spec.input_phase = real()?,
        "theta" => {
            spec.theta = match v.as_str() {
                "optimize" | "opt" => ThetaHandling::Optimize,
                _ => ThetaHandling::Fixed(real().map_err(|_| bad("expected `optimize` or an angle".into()))?),
            }
        }
        "theta_points" => spec.theta_points = count()?,
        "t_grid" => spec.t_grid = list(v, |s| s.parse::<f64>().ok()).ok_or_else(|| bad("expected comma-separated numbers".into()))?,
        "gamma_x" => {
            spec.noise.gamma_x = real()?;
            explicit_rates[0] = true;
        }
        "gamma_y" => {
            spec.noise.gamma_y = real()?;
            explicit_rates[1] = true;
        }
        "gamma_z" => {
            spec.noise.gamma_z = real()?;
            explicit_rates[2] = true;
        }
        "gamma_r" => {
            spec.noise.gamma_r = real()?;
            explicit_rates[3] = true;
        }
        "k_levels" => spec.k_levels = count()?,
        "refresh_every" => spec.refresh_every = count()?,
        "rate_model" => {
            spec.rate_model = match v.as_str() {
                "flat" => RateModelKind::Flat,
                "ohmic" => RateModelKind::Ohmic,
                _ => return Err(bad("expected `flat` or `ohmic`".into())),
            }
        }
        "two_cell_n_fock" => spec.two_cell_n_fock = count()?,
        "fock_grid" => spec.fock_grid = list(v, |s| s.parse::<usize>().ok()).ok_or_else(|| bad("expected comma-separated integers".into()))?,
        "spectrum_levels" => spec.spectrum_levels = count()?,
        "spectrum_points" => spec.spectrum_points = count()?,
        "f_cav_hz" => spec.f_cav_hz = real()?,
        "seed" => *seed = a.value.parse().map_err(|_| bad(format!("`{}` is not a non-negative integer", a.value)))?,
        _ => {
            return Err(ConfigError::UnknownKey {
                origin: a.origin.clone(),
                key: a.key.clone(),
            })
        }
    }
    Ok(())
}

fn list<X>(text: &str, item: impl Fn(&str) -> Option<X>) -> Option<Vec<X>> {
    text.split(',').map(|s| item(s.trim())).collect()
}
