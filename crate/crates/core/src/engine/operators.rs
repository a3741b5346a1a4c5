//! Spatial operators: diffusion with upwinded drift, the marginal jump sums,
//! the cross jump quadrature and the reduced equations on price boundaries.

use rayon::prelude::*;

use super::{control, Lattice, Shape, Solver};
use crate::error::{Error, Result};
use crate::market::Commodity;

/// Drift coefficients along both price axes at one calendar time.
pub(crate) struct Drifts {
    pub regime: usize,
    /// Multiplies `V_S` where the marginal jump operator is applied.
    pub e_int: Vec<f64>,
    /// Used on the price boundaries, where the jump operator is dropped.
    pub e_bnd: Vec<f64>,
    pub g_int: Vec<f64>,
    pub g_bnd: Vec<f64>,
}

impl Drifts {
    pub fn new(s: &Solver, l: usize, t: f64) -> Self {
        let p = &s.model.regimes[l];
        let conv = s.model.drift_convention;
        let sh = s.geom.shape;
        let e = |i: usize| s.geom.s_e(i);
        let g = |j: usize| s.geom.s_g(j);
        Self {
            regime: l,
            e_int: (0..sh.ne)
                .map(|i| p.effective_drift(Commodity::Electricity, e(i), t, conv))
                .collect(),
            e_bnd: (0..sh.ne)
                .map(|i| p.jump_adjusted_drift(Commodity::Electricity, e(i), t, conv))
                .collect(),
            g_int: (0..sh.ng)
                .map(|j| p.effective_drift(Commodity::Gas, g(j), t, conv))
                .collect(),
            g_bnd: (0..sh.ng)
                .map(|j| p.jump_adjusted_drift(Commodity::Gas, g(j), t, conv))
                .collect(),
        }
    }
}

#[inline]
fn upwind(mu: f64, vm: f64, x: f64, vp: f64, h: f64) -> f64 {
    if mu >= 0.0 {
        mu * (vp - x) / h
    } else {
        mu * (x - vm) / h
    }
}

/// Seven-point cross-derivative stencil, exact on bilinear data.
#[inline]
fn cross_stencil(v: &[f64], sh: Shape, i: usize, j: usize, u: usize, dse: f64, dsg: f64) -> f64 {
    let at = |a: usize, b: usize| v[sh.idx(a, b, u)];
    (at(i + 1, j + 1) + at(i - 1, j - 1) - at(i, j + 1) - at(i, j - 1) - at(i + 1, j) - at(i - 1, j)
        + 2.0 * at(i, j))
        / (2.0 * dse * dsg)
}

/// Marginal jump sum along the electricity axis at an interior node, with
/// linear extension of the lattice beyond `S_e^max`.
pub(crate) fn marginal_e(s: &Solver, l: usize, v: &[f64], i: usize, j: usize, u: usize) -> f64 {
    let t = &s.jumps[l];
    let sh = s.geom.shape;
    let at = |a: usize| v[sh.idx(a, j, u)];
    let n = sh.ne - 1;
    let slope = at(n) - at(n - 1);
    let mut acc = 0.0;
    for k in 0..=t.ke {
        let m = i + k;
        if m >= n {
            // V(m+1) - V(m-1) equals twice the edge slope from here on
            acc += 2.0 * slope * t.suffix_e[k];
            break;
        }
        let w = t.nu_e[k];
        if w != 0.0 {
            acc += w * (at(m + 1) - at(m - 1));
        }
    }
    acc / (2.0 * s.geom.d_se)
}

pub(crate) fn marginal_g(s: &Solver, l: usize, v: &[f64], i: usize, j: usize, u: usize) -> f64 {
    let t = &s.jumps[l];
    let sh = s.geom.shape;
    let at = |b: usize| v[sh.idx(i, b, u)];
    let n = sh.ng - 1;
    let slope = at(n) - at(n - 1);
    let mut acc = 0.0;
    for k in 0..=t.kg {
        let m = j + k;
        if m >= n {
            acc += 2.0 * slope * t.suffix_g[k];
            break;
        }
        let w = t.nu_g[k];
        if w != 0.0 {
            acc += w * (at(m + 1) - at(m - 1));
        }
    }
    acc / (2.0 * s.geom.d_sg)
}

/// Lattice value at `(a, b)`, possibly beyond the grid, by tensor-product
/// linear extrapolation from the outermost cells.
pub(crate) fn extended(v: &[f64], sh: Shape, a: usize, b: usize, u: usize) -> f64 {
    let (n, g) = (sh.ne - 1, sh.ng - 1);
    let along_e = |b: usize| {
        if a <= n {
            v[sh.idx(a, b, u)]
        } else {
            let top = v[sh.idx(n, b, u)];
            top + (a - n) as f64 * (top - v[sh.idx(n - 1, b, u)])
        }
    };
    if b <= g {
        along_e(b)
    } else {
        let top = along_e(g);
        top + (b - g) as f64 * (top - along_e(g - 1))
    }
}

/// Cross jump quadrature evaluated node by node.
pub(crate) fn cross_pointwise(s: &Solver, l: usize, v: &[f64], i: usize, j: usize, u: usize) -> f64 {
    let t = &s.jumps[l];
    if !t.cross_active {
        return 0.0;
    }
    let sh = s.geom.shape;
    let mut acc = 0.0;
    for k1 in 0..=t.ke {
        for k2 in 0..=t.kg {
            let w = t.cross[k1 * (t.kg + 1) + k2];
            if w == 0.0 {
                continue;
            }
            let x = |a: usize, b: usize| extended(v, sh, a, b, u);
            let d = x(i + 1 + k1, j + 1 + k2) - x(i + 1 + k1, j - 1 + k2) - x(i - 1 + k1, j + 1 + k2)
                + x(i - 1 + k1, j - 1 + k2);
            acc += w * d;
        }
    }
    acc / (4.0 * s.geom.d_se * s.geom.d_sg)
}

/// The four shifted trapezoid sums of the cross jump operator share one
/// table `C(a, b, u) = Σ W(k1, k2) V(a + k1, b + k2, u)`.
pub(crate) struct CrossSums {
    sh: Shape,
    sums: Vec<f64>,
    scale: f64,
}

impl CrossSums {
    pub fn build(s: &Solver, l: usize, v: &[f64]) -> Option<Self> {
        let t = &s.jumps[l];
        if s.geom.gas_fixed.is_some() || !t.cross_active {
            return None;
        }
        let sh = s.geom.shape;
        let (xe, xg, nl) = (sh.ne + t.ke + 1, sh.ng + t.kg + 1, sh.nl);
        let mut ext = vec![0.0; xe * xg * nl];
        for a in 0..xe {
            for b in 0..xg {
                for u in 0..nl {
                    ext[(a * xg + b) * nl + u] = extended(v, sh, a, b, u);
                }
            }
        }
        let mut sums = vec![0.0; sh.len()];
        let row = sh.ng * nl;
        sums.par_chunks_mut(row).enumerate().for_each(|(a, out)| {
            for k1 in 0..=t.ke {
                let wrow = &t.cross[k1 * (t.kg + 1)..(k1 + 1) * (t.kg + 1)];
                let erow = &ext[(a + k1) * xg * nl..(a + k1 + 1) * xg * nl];
                // shifting b by k2 is a shift of k2 * nl in the flattened (b, u) row
                for (k2, &w) in wrow.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let src = &erow[k2 * nl..k2 * nl + row];
                    for (o, x) in out.iter_mut().zip(src) {
                        *o += w * x;
                    }
                }
            }
        });
        Some(Self {
            sh,
            sums,
            scale: 1.0 / (4.0 * s.geom.d_se * s.geom.d_sg),
        })
    }

    #[inline]
    pub fn apply(&self, i: usize, j: usize, u: usize) -> f64 {
        let c = |a: usize, b: usize| self.sums[self.sh.idx(a, b, u)];
        (c(i + 1, j + 1) - c(i + 1, j - 1) - c(i - 1, j + 1) + c(i - 1, j - 1)) * self.scale
    }
}

/// Time derivative of `V` from diffusion, drift, discounting and the jump
/// operators at any node; price-boundary nodes use the reduced equations.
pub(crate) fn space_rate(
    s: &Solver,
    d: &Drifts,
    v: &[f64],
    i: usize,
    j: usize,
    u: usize,
    heg: impl FnOnce() -> f64,
) -> f64 {
    let l = d.regime;
    let p = &s.model.regimes[l];
    let sh = s.geom.shape;
    let (dse, dsg) = (s.geom.d_se, s.geom.d_sg);
    let at = |a: usize, b: usize| v[sh.idx(a, b, u)];
    let x = at(i, j);
    let mut rate = -s.model.discount_rate * x;

    let e_int = i > 0 && i + 1 < sh.ne;
    if e_int {
        let (vm, vp) = (at(i - 1, j), at(i + 1, j));
        rate += 0.5 * p.sigma_e * p.sigma_e * (vp - 2.0 * x + vm) / (dse * dse);
        rate += upwind(d.e_int[i], vm, x, vp, dse);
        if p.jump_e.intensity != 0.0 {
            rate += marginal_e(s, l, v, i, j, u);
        }
    } else if i == 0 {
        rate += d.e_bnd[i] * (at(1, j) - x) / dse;
    } else {
        rate += d.e_bnd[i] * (x - at(i - 1, j)) / dse;
    }

    if s.geom.gas_fixed.is_none() {
        let g_int = j > 0 && j + 1 < sh.ng;
        if g_int {
            let (vm, vp) = (at(i, j - 1), at(i, j + 1));
            rate += 0.5 * p.sigma_g * p.sigma_g * (vp - 2.0 * x + vm) / (dsg * dsg);
            rate += upwind(d.g_int[j], vm, x, vp, dsg);
            if p.jump_g.intensity != 0.0 {
                rate += marginal_g(s, l, v, i, j, u);
            }
        } else if j == 0 {
            rate += d.g_bnd[j] * (at(i, 1) - x) / dsg;
        } else {
            rate += d.g_bnd[j] * (x - at(i, j - 1)) / dsg;
        }
        if e_int && g_int {
            let rho = p.rho * p.sigma_e * p.sigma_g;
            if rho != 0.0 {
                rate += rho * cross_stencil(v, sh, i, j, u, dse, dsg);
            }
            rate += heg();
        }
    }
    rate
}

/// Time derivative at one boundary node, including the control term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRate {
    pub i: usize,
    pub j: usize,
    pub u: usize,
    pub rate: f64,
    pub control: f64,
}

impl Solver {
    fn lattice_regime<'a>(&self, lat: &'a Lattice, l: usize) -> Result<&'a [f64]> {
        if lat.shape != self.geom.shape || l >= lat.regimes || lat.regimes != self.model.n_regimes() {
            return Err(Error::PolicyMismatch("lattice does not match the solver grid".into()));
        }
        Ok(lat.regime(l))
    }

    fn check_interior(&self, i: usize, j: usize) -> Result<()> {
        let sh = self.geom.shape;
        let e_ok = i > 0 && i + 1 < sh.ne;
        let g_ok = self.geom.gas_fixed.is_some() || (j > 0 && j + 1 < sh.ng);
        if !(e_ok && g_ok) {
            return Err(Error::OutOfDomain {
                quantity: "interior node index",
                value: if e_ok { j as f64 } else { i as f64 },
                range: "interior nodes only".into(),
            });
        }
        Ok(())
    }

    /// Diffusion, upwinded drift and discounting at an interior node.
    pub fn diffusion_operator(&self, lat: &Lattice, l: usize, i: usize, j: usize, u: usize) -> Result<f64> {
        let v = self.lattice_regime(lat, l)?;
        self.check_interior(i, j)?;
        let p = &self.model.regimes[l];
        let t = self.calendar_time(lat.time_index);
        let conv = self.model.drift_convention;
        let sh = self.geom.shape;
        let (dse, dsg) = (self.geom.d_se, self.geom.d_sg);
        let at = |a: usize, b: usize| v[sh.idx(a, b, u)];
        let x = at(i, j);
        let mut rate = -self.model.discount_rate * x;
        let (vm, vp) = (at(i - 1, j), at(i + 1, j));
        rate += 0.5 * p.sigma_e.powi(2) * (vp - 2.0 * x + vm) / (dse * dse);
        let mu = p.effective_drift(Commodity::Electricity, self.geom.s_e(i), t, conv);
        rate += upwind(mu, vm, x, vp, dse);
        if self.geom.gas_fixed.is_none() {
            let (vm, vp) = (at(i, j - 1), at(i, j + 1));
            rate += 0.5 * p.sigma_g.powi(2) * (vp - 2.0 * x + vm) / (dsg * dsg);
            let mu = p.effective_drift(Commodity::Gas, self.geom.s_g(j), t, conv);
            rate += upwind(mu, vm, x, vp, dsg);
            rate += p.rho * p.sigma_e * p.sigma_g * cross_stencil(v, sh, i, j, u, dse, dsg);
        }
        Ok(rate)
    }

    pub fn marginal_jump_operator_e(&self, lat: &Lattice, l: usize, i: usize, j: usize, u: usize) -> Result<f64> {
        let v = self.lattice_regime(lat, l)?;
        self.check_interior(i, j)?;
        Ok(marginal_e(self, l, v, i, j, u))
    }

    pub fn marginal_jump_operator_g(&self, lat: &Lattice, l: usize, i: usize, j: usize, u: usize) -> Result<f64> {
        let v = self.lattice_regime(lat, l)?;
        self.check_interior(i, j)?;
        if self.geom.gas_fixed.is_some() {
            return Ok(0.0);
        }
        Ok(marginal_g(self, l, v, i, j, u))
    }

    pub fn cross_jump_operator(&self, lat: &Lattice, l: usize, i: usize, j: usize, u: usize) -> Result<f64> {
        let v = self.lattice_regime(lat, l)?;
        self.check_interior(i, j)?;
        if self.geom.gas_fixed.is_some() {
            return Ok(0.0);
        }
        Ok(cross_pointwise(self, l, v, i, j, u))
    }

    /// Cross jump operator on every node through the shared sum table;
    /// zero on boundary nodes.
    pub fn cross_jump_field(&self, lat: &Lattice, l: usize) -> Result<Vec<f64>> {
        let v = self.lattice_regime(lat, l)?;
        let sh = self.geom.shape;
        let mut out = vec![0.0; sh.len()];
        if let Some(c) = CrossSums::build(self, l, v) {
            for i in 1..sh.ne - 1 {
                for j in 1..sh.ng - 1 {
                    for u in 0..sh.nl {
                        out[sh.idx(i, j, u)] = c.apply(i, j, u);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Optimal fuel rate and the maximized Hamiltonian at a node.
    pub fn optimize_control(&self, lat: &Lattice, l: usize, i: usize, j: usize, u: usize) -> Result<(f64, f64)> {
        let v = self.lattice_regime(lat, l)?;
        let sh = self.geom.shape;
        let base = sh.idx(i, j, 0);
        let (c, _, h) = control::optimize(self, &v[base..base + sh.nl], u, self.geom.s_e(i), self.geom.s_g(j));
        Ok((c, h))
    }

    /// Time derivatives on all price-boundary nodes of one regime, with the
    /// control term discretized by upwind differences in temperature.
    pub fn apply_boundary_conditions(&self, lat: &Lattice, l: usize) -> Result<Vec<BoundaryRate>> {
        let v = self.lattice_regime(lat, l)?;
        let sh = self.geom.shape;
        let d = Drifts::new(self, l, self.calendar_time(lat.time_index));
        let mut out = Vec::new();
        for i in 0..sh.ne {
            for j in 0..sh.ng {
                let e_bnd = i == 0 || i + 1 == sh.ne;
                let g_bnd = self.geom.gas_fixed.is_none() && (j == 0 || j + 1 == sh.ng);
                if !(e_bnd || g_bnd) {
                    continue;
                }
                let base = sh.idx(i, j, 0);
                for u in 0..sh.nl {
                    let (c, _, h) =
                        control::optimize(self, &v[base..base + sh.nl], u, self.geom.s_e(i), self.geom.s_g(j));
                    let rate = space_rate(self, &d, v, i, j, u, || 0.0) + h;
                    out.push(BoundaryRate { i, j, u, rate, control: c });
                }
            }
        }
        Ok(out)
    }
}
