//! Monte Carlo evaluation of a stored fuel policy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paths::{euler_step, simulate_regime_chain, PathConfig};
use crate::engine::{Geometry, PolicySurface, Solution};
use crate::error::{Error, Result};
use crate::market::ModelSpec;
use crate::plant::PlantSpec;

/// Policy surfaces at a set of times to maturity, looked up by nearest time
/// and multilinear interpolation in (S_e, S_g, L).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyLookup {
    geometry: Geometry,
    /// Sorted by time to maturity.
    entries: Vec<(f64, PolicySurface)>,
}

impl PolicyLookup {
    pub fn new(geometry: Geometry, mut entries: Vec<(f64, PolicySurface)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::PolicyMismatch("no policy snapshots".into()));
        }
        if entries.iter().any(|(_, p)| p.shape != geometry.shape) {
            return Err(Error::PolicyMismatch("policy shape differs from grid geometry".into()));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { geometry, entries })
    }

    pub fn from_solution(sol: &Solution) -> Self {
        let entries = sol
            .snapshots
            .iter()
            .map(|s| (s.tau, s.policy.clone()))
            .collect();
        Self::new(sol.geometry, entries).expect("solution snapshots share its geometry")
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn regimes(&self) -> usize {
        self.entries[0].1.regimes
    }

    fn nearest(&self, tau: f64) -> &PolicySurface {
        let k = self.entries.partition_point(|(t, _)| *t < tau);
        let pick = if k == 0 {
            0
        } else if k == self.entries.len() {
            k - 1
        } else if (self.entries[k].0 - tau) < (tau - self.entries[k - 1].0) {
            k
        } else {
            k - 1
        };
        &self.entries[pick].1
    }

    /// Interpolated control, clamped to the admissible interval at `l`.
    pub fn control(&self, plant: &PlantSpec, regime: usize, tau: f64, s_e: f64, s_g: f64, l: f64) -> f64 {
        let g = &self.geometry;
        let sh = g.shape;
        let pol = self.nearest(tau);
        let axis = |x: f64, h: f64, n: usize| -> (usize, f64) {
            if n < 2 || h <= 0.0 {
                return (0, 0.0);
            }
            let p = (x / h).clamp(0.0, (n - 1) as f64);
            let k = (p.floor() as usize).min(n - 2);
            (k, p - k as f64)
        };
        let (i0, fe) = axis(s_e, g.d_se, sh.ne);
        let (j0, fg) = axis(s_g, g.d_sg, sh.ng);
        let (u0, fl) = axis(l - g.l_min, g.d_l, sh.nl);
        let mut c = 0.0;
        for (di, we) in [(0, 1.0 - fe), (1, fe)] {
            if we == 0.0 {
                continue;
            }
            for (dj, wg) in [(0, 1.0 - fg), (1, fg)] {
                if wg == 0.0 {
                    continue;
                }
                for (du, wl) in [(0, 1.0 - fl), (1, fl)] {
                    if wl == 0.0 {
                        continue;
                    }
                    c += we * wg * wl * pol.get(regime, i0 + di, j0 + dj, u0 + du);
                }
            }
        }
        let (lo, hi) = plant.control_bounds_unchecked(l);
        c.clamp(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartState {
    pub regime: usize,
    pub s_e: f64,
    pub s_g: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Discounted cash flow of one path following the policy from calendar time 0.
fn path_value(
    model: &ModelSpec,
    plant: &PlantSpec,
    policy: &PolicyLookup,
    config: &PathConfig,
    start: &StartState,
    path: usize,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(path as u64);
    let horizon = model.horizon;
    let chain = simulate_regime_chain(model, start.regime, horizon, &mut rng);
    let n = (horizon / config.step).round().max(1.0) as usize;
    let dt = horizon / n as f64;
    let r = model.discount_rate;
    let (mut s, mut l) = ((start.s_e, start.s_g), start.l);
    let mut total = 0.0;
    for k in 0..n {
        let t = k as f64 * dt;
        let reg = chain.regime_at(t);
        let c = policy.control(plant, reg, horizon - t, s.0, s.1, l);
        total += (-r * t).exp() * (plant.output_unchecked(l) * s.0 - s.1 * c) * dt;
        l = plant.boiler_step(l, c, dt);
        s = euler_step(model, reg, t, dt, s, config.jump_dependence, &mut rng, None);
    }
    total
}

/// Sample mean and standard error of the discounted cash flow under the
/// policy. Each path draws from its own stream of the seeded generator, so
/// results do not depend on the thread count.
pub fn evaluate_policy_mc(
    model: &ModelSpec,
    plant: &PlantSpec,
    policy: &PolicyLookup,
    config: &PathConfig,
    start: &StartState,
) -> Result<McEstimate> {
    model.validate()?;
    config.validate()?;
    if start.regime >= model.n_regimes() || policy.regimes() != model.n_regimes() {
        return Err(Error::PolicyMismatch("regime count differs from the model".into()));
    }
    if !(plant.l_min..=plant.l_max).contains(&start.l) {
        return Err(Error::OutOfDomain {
            quantity: "start temperature",
            value: start.l,
            range: format!("[{}, {}]", plant.l_min, plant.l_max),
        });
    }
    let values: Vec<f64> = (0..config.paths)
        .into_par_iter()
        .map(|k| path_value(model, plant, policy, config, start, k))
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        paths: values.len(),
    })
}
