//! Property suite behind `--mode validate`.

use std::collections::HashMap;

use gasplant_core::engine::{advection_update, monotonicity_violations, total_variation};
use gasplant_core::oracle::{deterministic_profile, DpConfig, ValueProfile};
use gasplant_core::{CopulaSpec, Geometry, GasAxis, Lattice, ModelSpec, PlantSpec, Solution, Solver};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{}  {:<44} measured {:.3e}  tolerance {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

/// Largest violation of margin recovery and of 2-increasingness on a
/// fixed set of points and rectangles.
pub fn copula_errors(copula: &CopulaSpec) -> Result<(f64, f64), CliError> {
    let pts = [0.0, 1e-3, 0.05, 0.3, 0.7, 1.0, 2.5, 10.0, 1e3];
    let mut margin: f64 = 0.0;
    for &x in &pts {
        margin = margin.max((copula.value(x, f64::INFINITY)? - x).abs());
        margin = margin.max((copula.value(f64::INFINITY, x)? - x).abs());
    }
    let mut negative: f64 = 0.0;
    for w in pts.windows(2) {
        for v in pts.windows(2) {
            let vol = copula.value(w[1], v[1])? - copula.value(w[0], v[1])? - copula.value(w[1], v[0])?
                + copula.value(w[0], v[0])?;
            negative = negative.max(-vol);
        }
    }
    Ok((margin, negative))
}

/// Largest total-variation increase of one transport step applied to every
/// temperature column, with the drift of the given controls.
pub fn tvd_excess(solver: &Solver, lat: &Lattice, controls: &[f64]) -> Result<f64, CliError> {
    let g = solver.geometry();
    let plant = solver.plant();
    let nl = g.shape.nl;
    let mut worst = f64::NEG_INFINITY;
    for (col, ctl) in lat.values.chunks(nl).zip(controls.chunks(nl)) {
        let a: Vec<f64> = (0..nl).map(|u| plant.drift_unchecked(g.l(u), ctl[u])).collect();
        let inc = advection_update(col, &a, solver.delta_tau(), g.d_l)?;
        let next: Vec<f64> = col.iter().zip(&inc).map(|(v, d)| v + d).collect();
        let scale = total_variation(col).max(1.0);
        worst = worst.max((total_variation(&next) - total_variation(col)) / scale);
    }
    Ok(worst)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Values of the constant-price dynamic program on the solver nodes of a
/// single-regime degenerate model. The value is homogeneous of degree one
/// in the two prices, so one profile serves every node pair on a ray.
pub fn degenerate_reference(
    model: &ModelSpec,
    plant: &PlantSpec,
    geometry: &Geometry,
    dp: &DpConfig,
) -> Result<Vec<f64>, CliError> {
    let sh = geometry.shape;
    let pairs: Vec<(usize, usize, usize)> = (0..sh.ne)
        .flat_map(|i| (0..sh.ng).map(move |j| (i, j)))
        .map(|(i, j)| match geometry.gas_fixed {
            Some(_) => (i, j, 1),
            None => {
                let k = gcd(i, j).max(1);
                (i / k, j / k, k)
            }
        })
        .collect();
    let mut keys: Vec<(usize, usize)> = pairs.iter().map(|&(i, j, _)| (i, j)).collect();
    keys.sort_unstable();
    keys.dedup();
    let profiles: Vec<ValueProfile> = keys
        .par_iter()
        .map(|&(i, j)| deterministic_profile(model, plant, geometry.s_e(i), geometry.s_g(j), dp))
        .collect::<Result<_, _>>()?;
    let lookup: HashMap<(usize, usize), &ValueProfile> = keys.iter().copied().zip(profiles.iter()).collect();
    let mut out = vec![0.0; sh.len()];
    for (n, &(i, j, k)) in pairs.iter().enumerate() {
        let prof = lookup[&(i, j)];
        for u in 0..sh.nl {
            out[n * sh.nl + u] = k as f64 * prof.value_at(geometry.l(u));
        }
    }
    Ok(out)
}

/// `max |a - b| / max |b|`.
pub fn max_norm_relative(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Annuity earned at full output with free fuel over the horizon.
pub fn annuity(model: &ModelSpec, plant: &PlantSpec, s_e: f64) -> f64 {
    let r = model.discount_rate;
    let t = model.horizon;
    let factor = if r > 0.0 { (1.0 - (-r * t).exp()) / r } else { t };
    plant.output_unchecked(plant.l_max) * s_e * factor
}

fn is_degenerate(model: &ModelSpec) -> bool {
    model.regimes.iter().all(|p| {
        p.sigma_e == 0.0
            && p.sigma_g == 0.0
            && p.alpha_e == 0.0
            && p.alpha_g == 0.0
            && p.jump_e.intensity == 0.0
            && p.jump_g.intensity == 0.0
            && p.seasonality_e.is_constant()
            && p.seasonality_g.is_constant()
    })
}

/// Runs every property for the configuration. The solve is shared by the
/// checks that need one.
pub fn run_checks(config: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();

    let (margin, negative) = copula_errors(&config.copula)?;
    checks.push(Check::at_most("copula margin recovery", margin, 1e-9));
    checks.push(Check::at_most("copula 2-increasing (negative volume)", negative, 1e-12));

    let solver = Solver::new(&config.model, &config.plant, &config.copula, &config.grid)?;
    checks.push(Check::at_most(
        "time step within stability bound (ratio)",
        solver.delta_tau() / solver.delta_tau_max(),
        1.0,
    ));

    let solution: Solution = solver.solve(&config.snapshot_times())?;
    let terminal = &solution.terminal;
    let finite = terminal.values.iter().all(|v| v.is_finite());
    checks.push(Check::at_most(
        "terminal values finite (non-finite count)",
        terminal.values.iter().filter(|v| !v.is_finite()).count() as f64,
        0.0,
    ));
    checks.push(Check::at_most(
        "max |V| over payoff bound",
        if finite { terminal.max_abs() / solver.payoff_bound() } else { f64::INFINITY },
        1.0,
    ));

    let policy = solver.policy(terminal)?;
    let geometry = *solver.geometry();
    let mut excess: f64 = 0.0;
    for r in 0..policy.regimes {
        for i in 0..geometry.shape.ne {
            for j in 0..geometry.shape.ng {
                for u in 0..geometry.shape.nl {
                    let (lo, hi) = config.plant.control_bounds(geometry.l(u))?;
                    let c = policy.get(r, i, j, u);
                    excess = excess.max(lo - c).max(c - hi);
                }
            }
        }
    }
    checks.push(Check::at_most("policy admissibility (bound excess)", excess.max(0.0), 1e-9));
    checks.push(Check::at_most(
        "TVD of transport step (relative TV increase)",
        tvd_excess(&solver, terminal, &policy.controls)?.max(0.0),
        1e-12,
    ));

    let (ve, vg) = monotonicity_violations(terminal, 0.0);
    checks.push(Check::at_most("V nondecreasing in S_e (violations)", ve as f64, 0.0));
    checks.push(Check::at_most("V nonincreasing in S_g (violations)", vg as f64, 0.0));

    if is_degenerate(&config.model) && config.model.n_regimes() == 1 {
        let reference = degenerate_reference(&config.model, &config.plant, &geometry, &DpConfig::default())?;
        checks.push(Check::at_most(
            "degenerate DP agreement (max-norm relative)",
            max_norm_relative(terminal.regime(0), &reference),
            0.01,
        ));
        if let GasAxis::Grid { .. } = config.grid.gas {
            let sh = geometry.shape;
            let exact = annuity(&config.model, &config.plant, geometry.s_e_max);
            let got = terminal.get(0, sh.ne - 1, 0, sh.nl - 1);
            checks.push(Check::at_most(
                "annuity at (S_e max, S_g = 0, L max) (relative)",
                ((got - exact) / exact).abs(),
                0.015,
            ));
        }
    }
    Ok(checks)
}
