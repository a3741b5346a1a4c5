//! CSV surfaces and the JSON metadata sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gasplant_core::{Geometry, PlantSpec, PolicySurface, Solution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const METADATA_FILE: &str = "metadata.json";

/// Slack allowed when re-checking controls: absolute, plus the relative
/// rounding of the 9 significant digits written to CSV.
const CONTROL_SLACK: f64 = 1e-9;
const CSV_ROUNDING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Value,
    Control,
}

impl SurfaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Value => "value",
            SurfaceKind::Control => "control",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub kind: SurfaceKind,
    pub regime: usize,
    pub requested_tau: f64,
    /// Time to maturity of the stored time level.
    pub tau: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: RunConfig,
    pub geometry: Geometry,
    pub regimes: usize,
    pub delta_tau: f64,
    pub delta_tau_max: f64,
    pub steps: usize,
    pub wall_time_seconds: f64,
    pub grid_hash: String,
    pub surfaces: Vec<SurfaceFile>,
}

/// SHA-256 over the node coordinates and the regime count.
pub fn grid_hash(geometry: &Geometry, regimes: usize) -> String {
    let canonical = format!("{geometry:?};regimes={regimes}");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn surface_file_name(kind: SurfaceKind, regime: usize, tau: f64) -> String {
    format!("{}_r{regime}_tau{tau:.3}.csv", kind.name())
}

/// Writes one regime of a surface as CSV, row-major over (i, j, u).
pub fn surface_csv(geometry: &Geometry, kind: SurfaceKind, data: &[f64]) -> String {
    let sh = geometry.shape;
    let mut out = String::with_capacity(64 * sh.len() + 32);
    out.push_str("S_e,S_g,L,");
    out.push_str(kind.name());
    out.push('\n');
    for i in 0..sh.ne {
        for j in 0..sh.ng {
            for u in 0..sh.nl {
                let _ = writeln!(
                    out,
                    "{:.8e},{:.8e},{:.8e},{:.8e}",
                    geometry.s_e(i),
                    geometry.s_g(j),
                    geometry.l(u),
                    data[sh.idx(i, j, u)]
                );
            }
        }
    }
    out
}

/// Reads the last column of a surface CSV back in row order.
pub fn read_surface_csv(path: &Path, geometry: &Geometry, kind: SurfaceKind) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let mismatch = |why: String| gasplant_core::Error::PolicyMismatch(format!("{}: {why}", path.display()));
    let mut lines = text.lines();
    let header = format!("S_e,S_g,L,{}", kind.name());
    if lines.next() != Some(header.as_str()) {
        return Err(mismatch(format!("expected header `{header}`")).into());
    }
    let mut data = Vec::with_capacity(geometry.shape.len());
    for (k, line) in lines.enumerate() {
        let field = line.rsplit(',').next().unwrap_or("");
        let v: f64 = field
            .parse()
            .map_err(|_| mismatch(format!("row {}: `{field}` is not a number", k + 1)))?;
        data.push(v);
    }
    if data.len() != geometry.shape.len() {
        return Err(mismatch(format!("{} rows, grid has {} nodes", data.len(), geometry.shape.len())).into());
    }
    Ok(data)
}

/// Fails when any control lies outside the admissible interval of its
/// temperature.
pub fn check_controls(geometry: &Geometry, plant: &PlantSpec, policy: &PolicySurface) -> Result<(), CliError> {
    let sh = geometry.shape;
    for r in 0..policy.regimes {
        for i in 0..sh.ne {
            for j in 0..sh.ng {
                for u in 0..sh.nl {
                    let l = geometry.l(u);
                    let (lo, hi) = plant.control_bounds(l)?;
                    let c = policy.get(r, i, j, u);
                    let slack = CONTROL_SLACK + CSV_ROUNDING * lo.abs().max(hi.abs());
                    if !(c >= lo - slack && c <= hi + slack) {
                        return Err(CliError::Check(format!(
                            "control {c} at regime {r}, node ({i}, {j}, {u}) lies outside [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Writes every snapshot surface and the metadata sidecar into `out`.
pub fn export_surfaces(
    config: &RunConfig,
    solution: &Solution,
    wall_time_seconds: f64,
    out: &Path,
) -> Result<Metadata, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
    let geometry = solution.geometry;
    let regimes = solution.terminal.regimes;
    let mut surfaces = Vec::new();
    for snap in &solution.snapshots {
        check_controls(&geometry, &config.plant, &snap.policy)?;
        for r in 0..regimes {
            for (kind, data) in [
                (SurfaceKind::Value, snap.values.regime(r)),
                (SurfaceKind::Control, snap.policy.regime(r)),
            ] {
                let file = surface_file_name(kind, r, snap.requested_tau);
                write(&out.join(&file), &surface_csv(&geometry, kind, data))?;
                surfaces.push(SurfaceFile {
                    kind,
                    regime: r,
                    requested_tau: snap.requested_tau,
                    tau: snap.tau,
                    file,
                });
            }
        }
    }
    let meta = Metadata {
        config: config.clone(),
        geometry,
        regimes,
        delta_tau: solution.delta_tau,
        delta_tau_max: solution.delta_tau_max,
        steps: solution.steps,
        wall_time_seconds,
        grid_hash: grid_hash(&geometry, regimes),
        surfaces,
    };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    write(&out.join(METADATA_FILE), &(json + "\n"))?;
    Ok(meta)
}

pub fn read_metadata(dir: &Path) -> Result<Metadata, CliError> {
    let path: PathBuf = dir.join(METADATA_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config {
        origin: path.display().to_string(),
        line: Some(e.line()),
        message: e.to_string(),
    })
}
