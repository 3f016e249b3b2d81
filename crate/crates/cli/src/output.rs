//! CSV and manifest writers.
//!
//! Floats are written with 17 significant digits, rows end in `\n`, and
//! nothing time-dependent goes into any file, so identical runs produce
//! identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;
use uscmem::experiment::{Curve, Landscape, ResultBundle};

use crate::config::RunConfig;

#[derive(Debug, Error)]
#[error("{}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn curve_csv(c: &Curve) -> String {
    let mut s = c.columns.join(",");
    s.push('\n');
    for row in &c.rows {
        s.push_str(&row.iter().map(|&x| num(x)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

/// Long form, coupling-major then angle ascending.
pub fn landscape_csv(l: &Landscape) -> String {
    let mut s = String::from("omega,theta,fidelity\n");
    for (om, row) in l.omega.iter().zip(&l.fidelity) {
        for (th, f) in l.theta.iter().zip(row) {
            let _ = writeln!(s, "{},{},{}", num(*om), num(*th), num(*f));
        }
    }
    s
}

pub fn theta_opt_csv(l: &Landscape) -> String {
    let mut s = String::from("omega,theta_opt\n");
    for (om, th) in l.omega.iter().zip(&l.theta_opt) {
        let _ = writeln!(s, "{},{}", num(*om), num(*th));
    }
    s
}

pub fn scalars_csv(b: &ResultBundle) -> String {
    let mut s = String::from("name,value,spec_hash\n");
    for x in &b.scalars {
        let _ = writeln!(s, "{},{},{}", x.name, num(x.value), x.spec_hash);
    }
    s
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Every file of a bundle as `(file name, contents)`, manifest excluded.
pub fn render(bundle: &ResultBundle) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for c in &bundle.curves {
        files.push((format!("{}.csv", c.name), curve_csv(c)));
    }
    for l in &bundle.landscapes {
        files.push((format!("{}.csv", l.name), landscape_csv(l)));
        files.push((format!("{}_theta_opt.csv", l.name), theta_opt_csv(l)));
    }
    files.push(("scalars.csv".to_string(), scalars_csv(bundle)));
    files
}

pub fn manifest(cfg: &RunConfig, bundle: &ResultBundle, files: &[(String, String)]) -> Value {
    let mut params = Map::new();
    for (k, v) in cfg.spec.canonical_pairs() {
        params.insert(k.to_string(), Value::String(v));
    }
    let mut hashes = Map::new();
    for (name, body) in files {
        hashes.insert(name.clone(), Value::String(sha256_hex(body.as_bytes())));
    }
    json!({
        "experiment": bundle.kind.as_str(),
        "spec_hash": bundle.spec_hash,
        "seed": cfg.seed,
        "parameters": params,
        "files": hashes,
    })
}

/// Write all CSVs and `manifest.json` into `dir`. Returns the paths written.
pub fn write_bundle(cfg: &RunConfig, bundle: &ResultBundle, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError {
        path: dir.to_path_buf(),
        source,
    })?;
    let files = render(bundle);
    let mut written = Vec::with_capacity(files.len() + 1);
    let mut put = |name: &str, body: &str| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|source| OutputError { path: path.clone(), source })?;
        written.push(path);
        Ok::<(), OutputError>(())
    };
    for (name, body) in &files {
        put(name, body)?;
    }
    let mut text = serde_json::to_string_pretty(&manifest(cfg, bundle, &files)).expect("manifest is plain JSON");
    text.push('\n');
    put("manifest.json", &text)?;
    Ok(written)
}
