//! Dynamic programming in (L, τ) for models whose prices stay constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::ModelSpec;
use crate::plant::PlantSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Upper bound on the temperature spacing, °C.
    pub dl_max: f64,
    /// Upper bound on the time step, hours.
    pub dtau_max: f64,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            dl_max: 1.0,
            dtau_max: 0.05,
        }
    }
}

/// Value at time to maturity `T` on a uniform temperature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueProfile {
    pub l_min: f64,
    pub d_l: f64,
    pub values: Vec<f64>,
}

impl ValueProfile {
    pub fn l(&self, u: usize) -> f64 {
        self.l_min + u as f64 * self.d_l
    }

    /// Linear interpolation, constant outside the grid.
    pub fn value_at(&self, l: f64) -> f64 {
        interp(&self.values, self.l_min, self.d_l, l)
    }
}

fn interp(v: &[f64], l_min: f64, d_l: f64, l: f64) -> f64 {
    let n = v.len();
    let p = ((l - l_min) / d_l).clamp(0.0, (n - 1) as f64);
    let k = (p.floor() as usize).min(n - 2);
    let f = p - k as f64;
    v[k] * (1.0 - f) + v[k + 1] * f
}

/// `∫_a^b e^{-rs} ds`.
fn discounted(r: f64, a: f64, b: f64) -> f64 {
    if r.abs() < 1e-12 {
        b - a
    } else {
        ((-r * a).exp() - (-r * b).exp()) / r
    }
}

struct Flow<'a> {
    plant: &'a PlantSpec,
    r: f64,
    dt: f64,
    s_e: f64,
    decay: f64,
    /// `∫_0^dt e^{-rs} ds` and `∫_0^dt e^{-(r+η)s} ds`.
    full: (f64, f64),
}

impl<'a> Flow<'a> {
    fn new(plant: &'a PlantSpec, r: f64, dt: f64, s_e: f64) -> Self {
        Self {
            plant,
            r,
            dt,
            s_e,
            decay: (-plant.eta * dt).exp(),
            full: (discounted(r, 0.0, dt), discounted(r + plant.eta, 0.0, dt)),
        }
    }

    /// Discounted power revenue over one step from `l` with equilibrium `y`.
    fn revenue(&self, l: f64, y: f64) -> f64 {
        let p = self.plant;
        let eta = p.eta;
        let k = p.output_slope;
        // L(s) = y + (l - y) e^{-ηs} is monotone, so it is above the
        // threshold on a single interval
        let start = l >= p.l_gen;
        let end = y + (l - y) * self.decay >= p.l_gen;
        let (ea, eb) = match (start, end) {
            (true, true) => self.full,
            (false, false) => return 0.0,
            _ => {
                let cross = (-((p.l_gen - y) / (l - y)).ln() / eta).clamp(0.0, self.dt);
                let (a, b) = if start { (0.0, cross) } else { (cross, self.dt) };
                (discounted(self.r, a, b), discounted(self.r + eta, a, b))
            }
        };
        self.s_e * ((k * y + p.output_intercept) * ea + k * (l - y) * eb)
    }
}

/// Maximum of a function that is concave on `[a, b]` up to isolated kinks.
fn piece_max(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let (fa, fb) = (f(a), f(b));
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..40 {
        if hi - lo <= 1e-9 * (1.0 + hi.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    fa.max(fb).max(f1).max(f2)
}

fn check_degenerate(model: &ModelSpec) -> Result<()> {
    model.validate()?;
    for (k, p) in model.regimes.iter().enumerate() {
        let bad = if p.sigma_e != 0.0 || p.sigma_g != 0.0 {
            Some("nonzero volatility")
        } else if p.jump_e.intensity != 0.0 || p.jump_g.intensity != 0.0 {
            Some("nonzero jump intensity")
        } else if p.alpha_e != 0.0 || p.alpha_g != 0.0 {
            Some("nonzero mean reversion")
        } else if !p.seasonality_e.is_constant() || !p.seasonality_g.is_constant() {
            Some("time-varying seasonality")
        } else {
            None
        };
        if let Some(why) = bad {
            return Err(Error::NotDegenerate(format!("regime {k}: {why}")));
        }
    }
    Ok(())
}

/// Full temperature profile of the optimal value with prices held at
/// `(s_e, s_g)` over the model horizon.
///
/// Holding the fuel rate fixed over a step restricts the controls and costs
/// a first-order error in the step size, so sweeps at `Δτ` and `Δτ/2` are
/// combined by Richardson extrapolation.
pub fn deterministic_profile(
    model: &ModelSpec,
    plant: &PlantSpec,
    s_e: f64,
    s_g: f64,
    config: &DpConfig,
) -> Result<ValueProfile> {
    check_degenerate(model)?;
    plant.validate("plant")?;
    if !(config.dl_max > 0.0 && config.dtau_max > 0.0) {
        return Err(Error::invalid("dp", "grid bounds must be > 0"));
    }
    let span = plant.l_max - plant.l_min;
    let nl = (span / config.dl_max).ceil().max(1.0) as usize;
    let steps = (model.horizon / config.dtau_max).ceil().max(1.0) as usize;
    let coarse = sweep(model, plant, s_e, s_g, nl, steps);
    let fine = sweep(model, plant, s_e, s_g, nl, 2 * steps);
    Ok(ValueProfile {
        l_min: plant.l_min,
        d_l: span / nl as f64,
        values: fine.iter().zip(&coarse).map(|(f, c)| 2.0 * f - c).collect(),
    })
}

/// Backward sweep with `nl` temperature cells and `steps` time steps.
///
/// Each step holds the fuel rate fixed, moves the boiler along the exact
/// exponential flow towards `L̄(c)` and integrates the discounted cash flow
/// along that path in closed form. The continuation value is linear between
/// grid nodes and the fuel cost is convex in `L̄`, so the objective is
/// concave on every piece between node and threshold crossings and its
/// maximizer is explicit. Pieces where the path crosses the generation
/// threshold fall back to golden-section search.
fn sweep(model: &ModelSpec, plant: &PlantSpec, s_e: f64, s_g: f64, nl: usize, steps: usize) -> Vec<f64> {
    let d_l = (plant.l_max - plant.l_min) / nl as f64;
    let dt = model.horizon / steps as f64;
    let decay = (-plant.eta * dt).exp();
    let gain = 1.0 - decay;
    let beta = (-model.discount_rate * dt).exp();

    let nodes: Vec<f64> = (0..=nl).map(|u| plant.l_min + u as f64 * d_l).collect();
    // reachable equilibrium range per node
    let ranges: Vec<(f64, f64)> = nodes
        .iter()
        .map(|&l| {
            let (lo, hi) = plant.control_bounds_unchecked(l);
            (plant.equilibrium_unchecked(lo), plant.equilibrium_unchecked(hi))
        })
        .collect();
    let flow = Flow::new(plant, model.discount_rate, dt, s_e);
    let cost_weight = s_g * discounted(model.discount_rate, 0.0, dt);
    // d(revenue)/dy while the boiler stays above the generation threshold
    let revenue_rate = s_e
        * plant.output_slope
        * (discounted(model.discount_rate, 0.0, dt) - discounted(model.discount_rate + plant.eta, 0.0, dt));
    let fuel = |y: f64| plant.b2 - ((plant.b0 - y).max(0.0) / plant.b1).sqrt();

    let mut v = vec![0.0; nl + 1];
    let mut next = vec![0.0; nl + 1];
    let mut cuts: Vec<f64> = Vec::with_capacity(16);
    for _ in 0..steps {
        for (u, &l) in nodes.iter().enumerate() {
            let (ylo, yhi) = ranges[u];
            let next_l = |y: f64| l * decay + y * gain;
            let eval = |y: f64| {
                flow.revenue(l, y) - cost_weight * fuel(y)
                    + beta * interp(&v, plant.l_min, d_l, next_l(y).clamp(plant.l_min, plant.l_max))
            };
            if yhi <= ylo {
                next[u] = eval(ylo);
                continue;
            }
            // split the range where the next state crosses a node or where
            // the path reaches the generation threshold
            cuts.clear();
            cuts.push(ylo);
            let (plo, phi) = (next_l(ylo), next_l(yhi));
            let ulo = ((plo - plant.l_min) / d_l).floor().max(0.0) as usize;
            let uhi = (((phi - plant.l_min) / d_l).ceil().max(0.0) as usize).min(nl);
            for w in ulo..=uhi {
                let y = (nodes[w] - l * decay) / gain;
                if y > ylo && y < yhi {
                    cuts.push(y);
                }
            }
            cuts.push(yhi);
            let y_gen = (plant.l_gen - l * decay) / gain;
            if y_gen > ylo && y_gen < yhi {
                let k = cuts.partition_point(|&y| y < y_gen);
                if cuts[k] != y_gen {
                    cuts.insert(k, y_gen);
                }
            }
            let start_above = l >= plant.l_gen;
            let at_cuts: Vec<f64> = cuts.iter().map(|&y| eval(y)).collect();
            let mut best = at_cuts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for pair in cuts.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let mid = next_l(0.5 * (a + b));
                if start_above != (mid >= plant.l_gen) {
                    best = best.max(piece_max(&eval, a, b));
                    continue;
                }
                // revenue is linear in y here, so the objective is concave
                // and its stationary point is explicit
                let slope = if mid <= plant.l_min || mid >= plant.l_max {
                    0.0
                } else {
                    let w = (((mid - plant.l_min) / d_l) as usize).min(nl - 1);
                    (v[w + 1] - v[w]) / d_l
                };
                let rate = if start_above { revenue_rate } else { 0.0 } + beta * slope * gain;
                if rate > 0.0 && cost_weight > 0.0 {
                    let q = cost_weight / (2.0 * rate);
                    let y = plant.b0 - q * q / plant.b1;
                    if y > a && y < b {
                        best = best.max(eval(y));
                    }
                }
            }
            next[u] = best;
        }
        std::mem::swap(&mut v, &mut next);
    }
    v
}

/// Optimal value at start temperature `l` with constant prices.
pub fn deterministic_value(model: &ModelSpec, plant: &PlantSpec, l: f64, s_e: f64, s_g: f64) -> Result<f64> {
    if !(plant.l_min..=plant.l_max).contains(&l) {
        return Err(Error::OutOfDomain {
            quantity: "start temperature",
            value: l,
            range: format!("[{}, {}]", plant.l_min, plant.l_max),
        });
    }
    Ok(deterministic_profile(model, plant, s_e, s_g, &DpConfig::default())?.value_at(l))
}
