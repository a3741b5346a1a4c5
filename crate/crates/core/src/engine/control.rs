//! Per-node maximization of the Hamiltonian over the admissible fuel rates.

use super::{ColumnTables, Solver};
use crate::plant::PlantSpec;

pub(crate) fn column_tables(plant: &PlantSpec, l: f64, n_c: usize) -> ColumnTables {
    let (lo, hi) = plant.control_bounds_unchecked(l);
    let mut cs = Vec::with_capacity(n_c + 3);
    cs.push(lo);
    for k in 1..=n_c {
        cs.push(lo + (hi - lo) * k as f64 / (n_c + 1) as f64);
    }
    cs.push(hi);
    // where the drift changes sign, and with it the one-sided difference
    if let Some(c0) = plant.fuel_for_equilibrium(l) {
        if c0 > lo && c0 < hi {
            cs.push(c0);
        }
    }
    cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cs.dedup();
    ColumnTables {
        temp: l,
        lo,
        hi,
        output: plant.output_unchecked(l),
        candidates: cs.into_iter().map(|c| (c, plant.drift_unchecked(l, c))).collect(),
    }
}

/// Returns `(c*, a(c*), Hamiltonian)` for the temperature column `col` at
/// index `u`. The drift returned is clipped so it never points out of the
/// temperature range at its two ends.
pub(crate) fn optimize(s: &Solver, col: &[f64], u: usize, se: f64, sg: f64) -> (f64, f64, f64) {
    let t = &s.columns[u];
    let nl = col.len();
    let dl = s.geom.d_l;
    let dp = if u + 1 < nl { (col[u + 1] - col[u]) / dl } else { 0.0 };
    let dm = if u > 0 { (col[u] - col[u - 1]) / dl } else { 0.0 };
    let obj = |c: f64, a: f64| -sg * c + a * if a >= 0.0 { dp } else { dm };

    let (mut bc, mut ba) = t.candidates[0];
    let mut bf = obj(bc, ba);
    let mut consider = |c: f64, a: f64| {
        let f = obj(c, a);
        if f > bf || (f == bf && c < bc) {
            bc = c;
            ba = a;
            bf = f;
        }
    };
    for &(c, a) in &t.candidates[1..] {
        consider(c, a);
    }
    let p = &s.plant;
    for d in [dp, dm] {
        if d > 0.0 {
            let c = p.b2 - sg / (2.0 * p.eta * p.b1 * d);
            if c >= t.lo && c <= t.hi {
                consider(c, p.drift_unchecked(t.temp, c));
            }
        }
    }
    let mut a = ba;
    if u + 1 == nl {
        a = a.min(0.0);
    }
    if u == 0 {
        a = a.max(0.0);
    }
    (bc, a, t.output * se + bf)
}
