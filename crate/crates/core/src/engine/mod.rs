//! Explicit finite-difference solver for the coupled HJB integro-differential
//! equations over (electricity price, gas price, boiler temperature, time to
//! maturity).
//!
//! Values are stored per regime on a node lattice with the temperature index
//! innermost. Time runs backwards from the terminal condition `V = 0` at
//! `τ = 0` to `τ = T`.

mod advection;
mod control;
mod operators;
mod stability;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{joint_tail, CopulaSpec};
use crate::error::{Error, Result};
use crate::market::ModelSpec;
use crate::plant::PlantSpec;

pub use advection::{advection_update, minmod, total_variation};
pub use stability::stability_bound;

/// Relative tail intensity discarded by automatic jump truncation.
pub const JUMP_TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "RawGasAxis")]
pub enum GasAxis {
    /// Uniform grid on `[0, s_max]` with `cells` cells.
    Grid { s_max: f64, cells: usize },
    /// Gas price pinned to a constant; the axis collapses to one node.
    Fixed { price: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGasAxis {
    s_max: Option<f64>,
    cells: Option<usize>,
    price: Option<f64>,
}

impl TryFrom<RawGasAxis> for GasAxis {
    type Error = String;

    fn try_from(r: RawGasAxis) -> std::result::Result<Self, String> {
        match (r.s_max, r.cells, r.price) {
            (Some(s_max), Some(cells), None) => Ok(GasAxis::Grid { s_max, cells }),
            (None, None, Some(price)) => Ok(GasAxis::Fixed { price }),
            _ => Err("gas axis needs either `s_max` and `cells`, or only `price`".into()),
        }
    }
}

/// Number of time steps, either given or derived from the stability bound.
/// Serialized as an integer or the string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepCount {
    Fixed(usize),
    #[default]
    Auto,
}

impl Serialize for StepCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepCount::Fixed(m) => s.serialize_u64(*m as u64),
            StepCount::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for StepCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(m) => Ok(StepCount::Fixed(m)),
            Raw::Word(w) if w == "auto" => Ok(StepCount::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a step count or \"auto\", got \"{w}\""
            ))),
        }
    }
}

fn default_candidates() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub s_e_max: f64,
    /// Cells along the electricity axis.
    pub n_e: usize,
    pub gas: GasAxis,
    /// Cells along the temperature axis.
    pub n_l: usize,
    #[serde(default)]
    pub steps: StepCount,
    /// Jump truncation bounds; automatic when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_bound_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_bound_g: Option<f64>,
    /// Uniform control candidates searched per node.
    #[serde(default = "default_candidates")]
    pub n_c: usize,
}

impl GridSpec {
    pub fn two_price(s_e_max: f64, n_e: usize, s_g_max: f64, n_g: usize, n_l: usize) -> Self {
        Self {
            s_e_max,
            n_e,
            gas: GasAxis::Grid {
                s_max: s_g_max,
                cells: n_g,
            },
            n_l,
            steps: StepCount::Auto,
            jump_bound_e: None,
            jump_bound_g: None,
            n_c: default_candidates(),
        }
    }

    pub fn fixed_gas(s_e_max: f64, n_e: usize, price: f64, n_l: usize) -> Self {
        Self {
            gas: GasAxis::Fixed { price },
            ..Self::two_price(s_e_max, n_e, 1.0, 2, n_l)
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.s_e_max.is_finite() && self.s_e_max > 0.0) {
            return Err(Error::invalid(format!("{path}.s_e_max"), "must be > 0"));
        }
        if self.n_e < 2 {
            return Err(Error::invalid(format!("{path}.n_e"), "must be >= 2"));
        }
        if self.n_l < 1 {
            return Err(Error::invalid(format!("{path}.n_l"), "must be >= 1"));
        }
        match self.gas {
            GasAxis::Grid { s_max, cells } => {
                if !(s_max.is_finite() && s_max > 0.0) {
                    return Err(Error::invalid(format!("{path}.gas.s_max"), "must be > 0"));
                }
                if cells < 2 {
                    return Err(Error::invalid(format!("{path}.gas.cells"), "must be >= 2"));
                }
            }
            GasAxis::Fixed { price } => {
                if !(price.is_finite() && price >= 0.0) {
                    return Err(Error::invalid(format!("{path}.gas.price"), "must be >= 0"));
                }
            }
        }
        if let StepCount::Fixed(m) = self.steps {
            if m == 0 {
                return Err(Error::invalid(format!("{path}.steps"), "must be >= 1"));
            }
        }
        for (name, b) in [("jump_bound_e", self.jump_bound_e), ("jump_bound_g", self.jump_bound_g)] {
            if let Some(b) = b {
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::invalid(format!("{path}.{name}"), "must be > 0"));
                }
            }
        }
        if self.n_c < 1 {
            return Err(Error::invalid(format!("{path}.n_c"), "must be >= 1"));
        }
        Ok(())
    }
}

/// Node counts of one regime's lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub ne: usize,
    pub ng: usize,
    pub nl: usize,
}

impl Shape {
    pub fn len(&self) -> usize {
        self.ne * self.ng * self.nl
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, u: usize) -> usize {
        (i * self.ng + j) * self.nl + u
    }
}

/// Node coordinates derived from a [`GridSpec`] and the plant's temperature range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub shape: Shape,
    pub d_se: f64,
    /// Zero when the gas axis is collapsed.
    pub d_sg: f64,
    pub d_l: f64,
    pub l_min: f64,
    pub s_e_max: f64,
    pub s_g_max: f64,
    pub gas_fixed: Option<f64>,
}

impl Geometry {
    pub fn new(grid: &GridSpec, plant: &PlantSpec) -> Self {
        let (ng, d_sg, s_g_max, gas_fixed) = match grid.gas {
            GasAxis::Grid { s_max, cells } => (cells + 1, s_max / cells as f64, s_max, None),
            GasAxis::Fixed { price } => (1, 0.0, price, Some(price)),
        };
        Self {
            shape: Shape {
                ne: grid.n_e + 1,
                ng,
                nl: grid.n_l + 1,
            },
            d_se: grid.s_e_max / grid.n_e as f64,
            d_sg,
            d_l: (plant.l_max - plant.l_min) / grid.n_l as f64,
            l_min: plant.l_min,
            s_e_max: grid.s_e_max,
            s_g_max,
            gas_fixed,
        }
    }

    pub fn s_e(&self, i: usize) -> f64 {
        i as f64 * self.d_se
    }

    pub fn s_g(&self, j: usize) -> f64 {
        match self.gas_fixed {
            Some(p) => p,
            None => j as f64 * self.d_sg,
        }
    }

    pub fn l(&self, u: usize) -> f64 {
        if u + 1 == self.shape.nl {
            // avoid round-off just above l_max
            self.l_min + (self.shape.nl - 1) as f64 * self.d_l
        } else {
            self.l_min + u as f64 * self.d_l
        }
    }
}

/// Value array for all regimes at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub shape: Shape,
    pub regimes: usize,
    pub time_index: usize,
    pub values: Vec<f64>,
}

impl Lattice {
    pub fn zeros(shape: Shape, regimes: usize) -> Self {
        Self {
            shape,
            regimes,
            time_index: 0,
            values: vec![0.0; shape.len() * regimes],
        }
    }

    pub fn from_fn(shape: Shape, regimes: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut lat = Self::zeros(shape, regimes);
        for l in 0..regimes {
            for i in 0..shape.ne {
                for j in 0..shape.ng {
                    for u in 0..shape.nl {
                        let k = lat.idx(l, i, j, u);
                        lat.values[k] = f(l, i, j, u);
                    }
                }
            }
        }
        lat
    }

    #[inline]
    pub fn idx(&self, l: usize, i: usize, j: usize, u: usize) -> usize {
        l * self.shape.len() + self.shape.idx(i, j, u)
    }

    pub fn get(&self, l: usize, i: usize, j: usize, u: usize) -> f64 {
        self.values[self.idx(l, i, j, u)]
    }

    pub fn regime(&self, l: usize) -> &[f64] {
        let n = self.shape.len();
        &self.values[l * n..(l + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Optimal fuel rates on the lattice nodes at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySurface {
    pub shape: Shape,
    pub regimes: usize,
    pub controls: Vec<f64>,
}

impl PolicySurface {
    pub fn get(&self, l: usize, i: usize, j: usize, u: usize) -> f64 {
        self.controls[l * self.shape.len() + self.shape.idx(i, j, u)]
    }

    pub fn regime(&self, l: usize) -> &[f64] {
        let n = self.shape.len();
        &self.controls[l * n..(l + 1) * n]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Requested time to maturity.
    pub requested_tau: f64,
    /// Time to maturity of the stored level, `time_index * delta_tau`.
    pub tau: f64,
    pub values: Lattice,
    pub policy: PolicySurface,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub geometry: Geometry,
    pub delta_tau: f64,
    pub delta_tau_max: f64,
    pub steps: usize,
    pub snapshots: Vec<Snapshot>,
    /// Values at `τ = T`.
    pub terminal: Lattice,
}

impl Solution {
    /// Snapshot whose stored time to maturity is closest to `tau`.
    pub fn nearest_snapshot(&self, tau: f64) -> Option<&Snapshot> {
        self.snapshots.iter().min_by(|a, b| {
            (a.tau - tau)
                .abs()
                .partial_cmp(&(b.tau - tau).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

/// Per-regime jump quadrature tables.
#[derive(Debug, Clone)]
pub(crate) struct JumpTables {
    pub ke: usize,
    pub kg: usize,
    pub nu_e: Vec<f64>,
    /// `suffix_e[k] = Σ_{k' >= k} nu_e[k']`, with a trailing zero.
    pub suffix_e: Vec<f64>,
    pub nu_g: Vec<f64>,
    pub suffix_g: Vec<f64>,
    /// Trapezoid weights times `F̄` times the cell area, `(ke+1) x (kg+1)`.
    pub cross: Vec<f64>,
    pub cross_active: bool,
}

/// Per-temperature control search tables.
#[derive(Debug, Clone)]
pub(crate) struct ColumnTables {
    pub temp: f64,
    pub lo: f64,
    pub hi: f64,
    pub output: f64,
    /// `(c, a(c))` pairs, ascending in c.
    pub candidates: Vec<(f64, f64)>,
}

fn suffix_sums(nu: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; nu.len() + 1];
    for k in (0..nu.len()).rev() {
        s[k] = s[k + 1] + nu[k];
    }
    s
}

fn quadrature_cells(bound: f64, dz: f64) -> usize {
    ((bound / dz - 0.5).ceil().max(1.0)) as usize
}

#[derive(Debug, Clone)]
pub struct Solver {
    pub(crate) model: ModelSpec,
    pub(crate) plant: PlantSpec,
    pub(crate) copula: CopulaSpec,
    pub(crate) grid: GridSpec,
    pub(crate) geom: Geometry,
    pub(crate) jumps: Vec<JumpTables>,
    pub(crate) columns: Vec<ColumnTables>,
    delta_tau: f64,
    delta_tau_max: f64,
    steps: usize,
}

impl Solver {
    pub fn new(model: &ModelSpec, plant: &PlantSpec, copula: &CopulaSpec, grid: &GridSpec) -> Result<Self> {
        model.validate()?;
        plant.validate("plant")?;
        copula.validate("copula")?;
        grid.validate("grid")?;
        let geom = Geometry::new(grid, plant);
        if geom.gas_fixed.is_some() {
            for (k, r) in model.regimes.iter().enumerate() {
                if r.sigma_g != 0.0 || r.jump_g.intensity != 0.0 || r.alpha_g != 0.0 || !r.seasonality_g.is_constant() {
                    return Err(Error::invalid(
                        "grid.gas",
                        format!(
                            "a fixed gas price needs sigma_g = alpha_g = 0, no gas jumps and constant gas seasonality (regime {k})"
                        ),
                    ));
                }
            }
        }

        let jumps = model
            .regimes
            .iter()
            .map(|r| {
                let be = grid
                    .jump_bound_e
                    .unwrap_or_else(|| r.jump_e.truncation_bound(JUMP_TAIL_TOLERANCE));
                let ke = quadrature_cells(be, geom.d_se);
                let nu_e = r.jump_e.cell_masses(geom.d_se, ke);
                let (kg, nu_g) = if geom.gas_fixed.is_some() {
                    (1, vec![0.0; 2])
                } else {
                    let bg = grid
                        .jump_bound_g
                        .unwrap_or_else(|| r.jump_g.truncation_bound(JUMP_TAIL_TOLERANCE));
                    let kg = quadrature_cells(bg, geom.d_sg);
                    (kg, r.jump_g.cell_masses(geom.d_sg, kg))
                };
                let mut t = JumpTables {
                    ke,
                    kg,
                    suffix_e: suffix_sums(&nu_e),
                    nu_e,
                    suffix_g: suffix_sums(&nu_g),
                    nu_g,
                    cross: Vec::new(),
                    cross_active: false,
                };
                if geom.gas_fixed.is_none() {
                    let (je, jg) = (r.jump_e, r.jump_g);
                    let cop = *copula;
                    t.set_cross_kernel(geom.d_se, geom.d_sg, |ze, zg| {
                        joint_tail(&cop, &je, &jg, ze, zg).unwrap_or(0.0)
                    });
                }
                t
            })
            .collect();

        let columns = (0..geom.shape.nl)
            .map(|u| control::column_tables(plant, geom.l(u), grid.n_c))
            .collect();

        let delta_tau_max = stability_bound(grid, model, plant);
        let (steps, delta_tau) = match grid.steps {
            StepCount::Auto => {
                let m = (model.horizon / delta_tau_max).ceil().max(1.0) as usize;
                (m, model.horizon / m as f64)
            }
            StepCount::Fixed(m) => {
                let dt = model.horizon / m as f64;
                if dt > delta_tau_max * (1.0 + 1e-12) {
                    return Err(Error::Unstable {
                        delta_tau: dt,
                        delta_tau_max,
                    });
                }
                (m, dt)
            }
        };

        Ok(Self {
            model: model.clone(),
            plant: *plant,
            copula: *copula,
            grid: *grid,
            geom,
            jumps,
            columns,
            delta_tau,
            delta_tau_max,
            steps,
        })
    }

    /// Replaces `F̄` in the cross jump quadrature, for every regime.
    pub fn with_cross_kernel(mut self, kernel: impl Fn(f64, f64) -> f64) -> Self {
        let (dse, dsg) = (self.geom.d_se, self.geom.d_sg);
        if self.geom.gas_fixed.is_none() {
            for t in &mut self.jumps {
                t.set_cross_kernel(dse, dsg, &kernel);
            }
        }
        self
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn plant(&self) -> &PlantSpec {
        &self.plant
    }

    pub fn copula(&self) -> &CopulaSpec {
        &self.copula
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn delta_tau(&self) -> f64 {
        self.delta_tau
    }

    pub fn delta_tau_max(&self) -> f64 {
        self.delta_tau_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Jump quadrature cell counts `(K_e, K_g)` of a regime.
    pub fn quadrature_cells(&self, regime: usize) -> (usize, usize) {
        (self.jumps[regime].ke, self.jumps[regime].kg)
    }

    pub fn marginal_masses(&self, regime: usize) -> (&[f64], &[f64]) {
        (&self.jumps[regime].nu_e, &self.jumps[regime].nu_g)
    }

    /// Calendar time of level `n`.
    pub fn calendar_time(&self, n: usize) -> f64 {
        self.model.horizon - n as f64 * self.delta_tau
    }

    pub fn zero_lattice(&self) -> Lattice {
        Lattice::zeros(self.geom.shape, self.model.n_regimes())
    }

    /// Crude a-priori bound on `|V|` over the horizon.
    pub fn payoff_bound(&self) -> f64 {
        let p = &self.plant;
        let t = self.model.horizon;
        t * p.output_unchecked(p.l_max) * self.geom.s_e_max + t * p.c_abs_max * self.geom.s_g_max
    }

    /// Advances all regimes from level `n` to `n + 1`. Returns the new
    /// lattice and the controls used (those of level `n`).
    pub fn step(&self, lat: &Lattice) -> Result<(Lattice, PolicySurface)> {
        self.check_lattice(lat)?;
        let sh = self.geom.shape;
        let nreg = lat.regimes;
        let n = lat.time_index;
        let t = self.calendar_time(n);
        let mut out = Lattice::zeros(sh, nreg);
        out.time_index = n + 1;
        let mut controls = vec![0.0; sh.len() * nreg];

        for l in 0..nreg {
            let v = lat.regime(l);
            let other = if nreg == 2 { Some(lat.regime(1 - l)) } else { None };
            let switch = self.model.switch_rate(l);
            let drifts = operators::Drifts::new(self, l, t);
            let cross = operators::CrossSums::build(self, l, v);
            let block = sh.ng * sh.nl;
            let vout = &mut out.values[l * sh.len()..(l + 1) * sh.len()];
            let cout = &mut controls[l * sh.len()..(l + 1) * sh.len()];
            vout.par_chunks_mut(block)
                .zip(cout.par_chunks_mut(block))
                .enumerate()
                .try_for_each(|(i, (vrow, crow))| -> Result<()> {
                    let mut a = vec![0.0; sh.nl];
                    for j in 0..sh.ng {
                        let base = sh.idx(i, j, 0);
                        let col = &v[base..base + sh.nl];
                        let (se, sg) = (self.geom.s_e(i), self.geom.s_g(j));
                        for u in 0..sh.nl {
                            let (c, au, _) = control::optimize(self, col, u, se, sg);
                            crow[j * sh.nl + u] = c;
                            a[u] = au;
                        }
                        let adv = advection_update(col, &a, self.delta_tau, self.geom.d_l).map_err(|e| match e {
                            Error::Cfl { zeta, u, .. } => Error::Cfl { zeta, regime: l, i, j, u },
                            e => e,
                        })?;
                        for u in 0..sh.nl {
                            let x = col[u];
                            let mut rate = operators::space_rate(self, &drifts, v, i, j, u, || {
                                cross.as_ref().map_or(0.0, |c| c.apply(i, j, u))
                            });
                            if let Some(o) = other {
                                rate += switch * (o[base + u] - x);
                            }
                            let c = crow[j * sh.nl + u];
                            rate += self.columns[u].output * se - sg * c;
                            let nv = x + self.delta_tau * rate + adv[u];
                            if !nv.is_finite() {
                                return Err(Error::NonFinite {
                                    value: nv,
                                    step: n,
                                    regime: l,
                                    i,
                                    j,
                                    u,
                                });
                            }
                            vrow[j * sh.nl + u] = nv;
                        }
                    }
                    Ok(())
                })?;
        }
        Ok((
            out,
            PolicySurface {
                shape: sh,
                regimes: nreg,
                controls,
            },
        ))
    }

    /// Optimal controls on every node of a lattice.
    pub fn policy(&self, lat: &Lattice) -> Result<PolicySurface> {
        self.check_lattice(lat)?;
        let sh = self.geom.shape;
        let mut controls = vec![0.0; lat.values.len()];
        for l in 0..lat.regimes {
            let v = lat.regime(l);
            for i in 0..sh.ne {
                for j in 0..sh.ng {
                    let base = sh.idx(i, j, 0);
                    let col = &v[base..base + sh.nl];
                    for u in 0..sh.nl {
                        let (c, _, _) = control::optimize(self, col, u, self.geom.s_e(i), self.geom.s_g(j));
                        controls[l * sh.len() + base + u] = c;
                    }
                }
            }
        }
        Ok(PolicySurface {
            shape: sh,
            regimes: lat.regimes,
            controls,
        })
    }

    /// Runs all time steps from `V = 0`, recording snapshots at the levels
    /// nearest to the requested times to maturity.
    pub fn solve(&self, snapshots: &[f64]) -> Result<Solution> {
        let horizon = self.model.horizon;
        let mut wanted: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for &tau in snapshots {
            if !(tau.is_finite() && (0.0..=horizon).contains(&tau)) {
                return Err(Error::SnapshotOutOfRange { tau, horizon });
            }
            let n = ((tau / self.delta_tau).round() as usize).min(self.steps);
            wanted.entry(n).or_default().push(tau);
        }
        let mut recorded = Vec::new();
        let mut lat = self.zero_lattice();
        for n in 0..self.steps {
            let (next, policy) = self.step(&lat)?;
            if let Some(taus) = wanted.get(&n) {
                for &tau in taus {
                    recorded.push(Snapshot {
                        requested_tau: tau,
                        tau: n as f64 * self.delta_tau,
                        values: lat.clone(),
                        policy: policy.clone(),
                    });
                }
            }
            lat = next;
        }
        if let Some(taus) = wanted.get(&self.steps) {
            let policy = self.policy(&lat)?;
            for &tau in taus {
                recorded.push(Snapshot {
                    requested_tau: tau,
                    tau: horizon,
                    values: lat.clone(),
                    policy: policy.clone(),
                });
            }
        }
        // keep the caller's order
        let mut ordered = Vec::with_capacity(recorded.len());
        for &tau in snapshots {
            if let Some(pos) = recorded.iter().position(|s| s.requested_tau == tau) {
                ordered.push(recorded.swap_remove(pos));
            }
        }
        Ok(Solution {
            geometry: self.geom,
            delta_tau: self.delta_tau,
            delta_tau_max: self.delta_tau_max,
            steps: self.steps,
            snapshots: ordered,
            terminal: lat,
        })
    }

    fn check_lattice(&self, lat: &Lattice) -> Result<()> {
        if lat.shape != self.geom.shape || lat.regimes != self.model.n_regimes() {
            return Err(Error::PolicyMismatch(format!(
                "lattice shape {:?} x {} does not match solver shape {:?} x {}",
                lat.shape,
                lat.regimes,
                self.geom.shape,
                self.model.n_regimes()
            )));
        }
        Ok(())
    }
}

impl JumpTables {
    fn set_cross_kernel(&mut self, dze: f64, dzg: f64, kernel: impl Fn(f64, f64) -> f64) {
        let (ke, kg) = (self.ke, self.kg);
        let mut w = Vec::with_capacity((ke + 1) * (kg + 1));
        for k1 in 0..=ke {
            let w1 = if k1 == 0 || k1 == ke { 0.5 } else { 1.0 };
            for k2 in 0..=kg {
                let w2 = if k2 == 0 || k2 == kg { 0.5 } else { 1.0 };
                w.push(w1 * w2 * kernel(k1 as f64 * dze, k2 as f64 * dzg) * dze * dzg);
            }
        }
        self.cross_active = w.iter().any(|&x| x != 0.0);
        self.cross = w;
    }
}

/// Counts of node pairs violating monotonicity: V decreasing in the
/// electricity index, and V increasing in the gas index.
pub fn monotonicity_violations(lat: &Lattice, tol: f64) -> (usize, usize) {
    let sh = lat.shape;
    let (mut ve, mut vg) = (0, 0);
    for l in 0..lat.regimes {
        for i in 0..sh.ne {
            for j in 0..sh.ng {
                for u in 0..sh.nl {
                    let x = lat.get(l, i, j, u);
                    let scale = tol * x.abs().max(1.0);
                    if i + 1 < sh.ne && lat.get(l, i + 1, j, u) < x - scale {
                        ve += 1;
                    }
                    if j + 1 < sh.ng && lat.get(l, i, j + 1, u) > x + scale {
                        vg += 1;
                    }
                }
            }
        }
    }
    (ve, vg)
}

#[cfg(test)]
mod tests;
