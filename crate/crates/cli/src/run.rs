//! Orchestration of the three run modes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gasplant_core::oracle::{evaluate_policy_mc, McEstimate, PolicyLookup, StartState};
use gasplant_core::{Geometry, PolicySurface, Solver};
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;
use crate::export::{self, grid_hash, read_metadata, read_surface_csv, Metadata, SurfaceKind};
use crate::plots::emit_plot_scripts;
use crate::validate::{run_checks, Check};

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Solved { metadata: Metadata, plot_scripts: Vec<PathBuf> },
    Validated { checks: Vec<Check> },
    Simulated { report: SimulationReport },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartResult {
    pub start: StartState,
    pub estimate: McEstimate,
    /// Solver value interpolated at the start state, when a value surface
    /// at `τ = T` was exported.
    pub solver_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub policy_dir: PathBuf,
    pub grid_hash: String,
    pub results: Vec<StartResult>,
}

pub const SIMULATION_FILE: &str = "simulation.json";

/// Runs the configured mode and writes its outputs.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    match config.mode {
        Mode::Solve => solve(config),
        Mode::Validate => {
            let checks = run_checks(config)?;
            for c in &checks {
                println!("{}", c.line());
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Check(format!("{failed} of {} properties failed", checks.len())));
            }
            Ok(RunOutcome::Validated { checks })
        }
        Mode::Simulate => simulate(config).map(|report| RunOutcome::Simulated { report }),
    }
}

fn solve(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let solver = Solver::new(&config.model, &config.plant, &config.copula, &config.grid)?;
    let start = Instant::now();
    let solution = solver.solve(&config.snapshot_times())?;
    let wall = start.elapsed().as_secs_f64();
    let metadata = export::export_surfaces(config, &solution, wall, &config.outputs)?;
    let plot_scripts = if config.emit_plots {
        emit_plot_scripts(&metadata, &config.plots, &config.outputs)?
    } else {
        Vec::new()
    };
    Ok(RunOutcome::Solved { metadata, plot_scripts })
}

/// Multilinear interpolation of one regime's surface, constant beyond the grid.
pub fn interpolate(geometry: &Geometry, data: &[f64], s_e: f64, s_g: f64, l: f64) -> f64 {
    let sh = geometry.shape;
    let axis = |x: f64, h: f64, n: usize| -> [(usize, f64); 2] {
        if n < 2 || h <= 0.0 {
            return [(0, 1.0), (0, 0.0)];
        }
        let p = (x / h).clamp(0.0, (n - 1) as f64);
        let k = (p.floor() as usize).min(n - 2);
        let f = p - k as f64;
        [(k, 1.0 - f), (k + 1, f)]
    };
    let mut v = 0.0;
    for (i, we) in axis(s_e, geometry.d_se, sh.ne) {
        for (j, wg) in axis(s_g, geometry.d_sg, sh.ng) {
            for (u, wl) in axis(l - geometry.l_min, geometry.d_l, sh.nl) {
                let w = we * wg * wl;
                if w != 0.0 {
                    v += w * data[sh.idx(i, j, u)];
                }
            }
        }
    }
    v
}

fn simulate(config: &RunConfig) -> Result<SimulationReport, CliError> {
    let sim = config.simulation.as_ref().ok_or_else(|| CliError::Config {
        origin: "simulate".into(),
        line: None,
        message: "simulate mode needs a [simulation] table".into(),
    })?;
    let dir: &Path = sim.policy_dir.as_deref().unwrap_or(&config.outputs);
    let meta = read_metadata(dir)?;
    let geometry = Geometry::new(&config.grid, &config.plant);
    let regimes = config.model.n_regimes();
    let expected = grid_hash(&geometry, regimes);
    if meta.grid_hash != expected {
        return Err(gasplant_core::Error::PolicyMismatch(format!(
            "grid hash {} in {} differs from {expected} of the configuration",
            meta.grid_hash,
            dir.display()
        ))
        .into());
    }

    let mut taus: Vec<f64> = meta
        .surfaces
        .iter()
        .filter(|s| s.kind == SurfaceKind::Control)
        .map(|s| s.tau)
        .collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let mut entries = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let mut controls = Vec::with_capacity(geometry.shape.len() * regimes);
        for r in 0..regimes {
            let file = meta
                .surfaces
                .iter()
                .find(|s| s.kind == SurfaceKind::Control && s.regime == r && s.tau == tau)
                .ok_or_else(|| gasplant_core::Error::PolicyMismatch(format!("no control surface for regime {r} at tau {tau}")))?;
            controls.extend(read_surface_csv(&dir.join(&file.file), &geometry, SurfaceKind::Control)?);
        }
        let policy = PolicySurface {
            shape: geometry.shape,
            regimes,
            controls,
        };
        export::check_controls(&geometry, &config.plant, &policy)?;
        entries.push((tau, policy));
    }
    let lookup = PolicyLookup::new(geometry, entries)?;

    let path_config = sim.path_config();
    let horizon = config.model.horizon;
    let mut results = Vec::with_capacity(sim.starts.len());
    for start in &sim.starts {
        let estimate = evaluate_policy_mc(&config.model, &config.plant, &lookup, &path_config, start)?;
        let value_file = meta
            .surfaces
            .iter()
            .filter(|s| s.kind == SurfaceKind::Value && s.regime == start.regime)
            .min_by(|a, b| (a.tau - horizon).abs().total_cmp(&(b.tau - horizon).abs()))
            .filter(|s| (s.tau - horizon).abs() <= 0.5 * meta.delta_tau);
        let solver_value = match value_file {
            Some(f) => {
                let data = read_surface_csv(&dir.join(&f.file), &geometry, SurfaceKind::Value)?;
                Some(interpolate(&geometry, &data, start.s_e, start.s_g, start.l))
            }
            None => None,
        };
        results.push(StartResult {
            start: *start,
            estimate,
            solver_value,
        });
    }
    let report = SimulationReport {
        policy_dir: dir.to_path_buf(),
        grid_hash: expected,
        results,
    };
    std::fs::create_dir_all(&config.outputs)
        .map_err(|e| CliError::io(format!("creating {}", config.outputs.display()), e))?;
    let path = config.outputs.join(SIMULATION_FILE);
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    std::fs::write(&path, json).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gasplant_core::{GridSpec, PlantSpec};

    #[test]
    fn interpolation_is_exact_for_affine_data() {
        let plant = PlantSpec::default();
        let g = Geometry::new(&GridSpec::two_price(10.0, 4, 8.0, 4, 5), &plant);
        let sh = g.shape;
        let mut data = vec![0.0; sh.len()];
        for i in 0..sh.ne {
            for j in 0..sh.ng {
                for u in 0..sh.nl {
                    data[sh.idx(i, j, u)] = 2.0 * g.s_e(i) - 3.0 * g.s_g(j) + 0.5 * g.l(u);
                }
            }
        }
        let v = interpolate(&g, &data, 3.3, 5.1, 123.0);
        assert!((v - (6.6 - 15.3 + 61.5)).abs() < 1e-9);
        // clamped beyond the grid
        let v = interpolate(&g, &data, 20.0, -1.0, 600.0);
        assert!((v - (20.0 + 300.0)).abs() < 1e-9);
    }
}
