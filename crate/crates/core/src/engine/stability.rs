use super::{GridSpec, Geometry};
use crate::market::{Commodity, DriftConvention, ModelSpec, RegimeParams};
use crate::plant::PlantSpec;

/// Largest `|drift|` over all calendar times and prices in `[0, s_max]`,
/// on both the interior and boundary forms of the drift.
fn drift_sup(p: &RegimeParams, c: Commodity, s_max: f64, conv: DriftConvention) -> f64 {
    let alpha = p.alpha(c);
    let jump = p.jump(c);
    let (lo, hi) = p.seasonality(c).reverting_level_range(alpha);
    let comp = match conv {
        DriftConvention::PaperLiteral => 0.0,
        DriftConvention::CompensationConsistent => jump.intensity * jump.mean_size(),
    };
    let top = hi + comp;
    let bottom = lo + comp - jump.intensity - alpha * s_max;
    top.abs().max(bottom.abs())
}

/// Explicit time-step limit with a 0.9 safety factor. Plant parameters are
/// used as given, without validation.
pub fn stability_bound(grid: &GridSpec, model: &ModelSpec, plant: &PlantSpec) -> f64 {
    let g = Geometry::new(grid, plant);
    let conv = model.drift_convention;
    let mut worst: f64 = 0.0;
    for (l, p) in model.regimes.iter().enumerate() {
        let mut s = model.discount_rate + model.switch_rate(l) + plant.ramp_limit / g.d_l;
        s += p.sigma_e.powi(2) / g.d_se.powi(2)
            + drift_sup(p, Commodity::Electricity, g.s_e_max, conv) / g.d_se
            + p.jump_e.intensity;
        if g.gas_fixed.is_none() {
            s += p.sigma_g.powi(2) / g.d_sg.powi(2)
                + p.rho.abs() * p.sigma_e * p.sigma_g / (2.0 * g.d_se * g.d_sg)
                + drift_sup(p, Commodity::Gas, g.s_g_max, conv) / g.d_sg
                + p.jump_g.intensity;
        }
        worst = worst.max(s);
    }
    if worst > 0.0 {
        0.9 / worst
    } else {
        f64::INFINITY
    }
}
