//! Path simulation of the regime chain and the two spot prices.

use rand::Rng;
use rand_distr::{Distribution, Exp, InverseGaussian, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Commodity, DriftConvention, JumpSpec, ModelSpec, SizeDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpDependence {
    /// No jumps at all.
    None,
    /// Two independent marked Poisson streams.
    #[default]
    Independent,
    /// One common stream at the smaller intensity with sizes tied through
    /// equal tail levels, plus a residual stream for the larger intensity.
    Comonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// Euler step in hours.
    pub step: f64,
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub jump_dependence: JumpDependence,
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid("simulation.step", "must be > 0"));
        }
        if self.paths == 0 {
            return Err(Error::invalid("simulation.paths", "must be >= 1"));
        }
        Ok(())
    }
}

/// Piecewise-constant regime trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimePath {
    /// `(start time, regime)`, with strictly increasing times starting at 0.
    pub pieces: Vec<(f64, usize)>,
    pub horizon: f64,
}

impl RegimePath {
    pub fn constant(regime: usize, horizon: f64) -> Self {
        Self {
            pieces: vec![(0.0, regime)],
            horizon,
        }
    }

    pub fn regime_at(&self, t: f64) -> usize {
        let k = self.pieces.partition_point(|&(s, _)| s <= t);
        self.pieces[k.saturating_sub(1)].1
    }

    /// Completed and censored sojourn lengths, tagged by regime.
    pub fn sojourns(&self) -> Vec<(usize, f64, bool)> {
        let mut out = Vec::with_capacity(self.pieces.len());
        for (k, &(s, l)) in self.pieces.iter().enumerate() {
            match self.pieces.get(k + 1) {
                Some(&(e, _)) => out.push((l, e - s, true)),
                None => out.push((l, self.horizon - s, false)),
            }
        }
        out
    }

    /// Time spent in each regime.
    pub fn occupation(&self) -> [f64; 2] {
        let mut occ = [0.0; 2];
        for (l, d, _) in self.sojourns() {
            occ[l] += d;
        }
        occ
    }
}

/// Exact simulation with exponential holding times. A single-regime model
/// yields a constant path.
pub fn simulate_regime_chain<R: Rng + ?Sized>(model: &ModelSpec, start: usize, horizon: f64, rng: &mut R) -> RegimePath {
    let mut pieces = vec![(0.0, start)];
    if model.n_regimes() < 2 {
        return RegimePath { pieces, horizon };
    }
    let mut t = 0.0;
    let mut l = start;
    loop {
        let rate = model.switch_rate(l);
        if rate <= 0.0 {
            break;
        }
        let hold: f64 = Exp::new(rate).expect("positive rate").sample(rng);
        t += hold;
        if t >= horizon {
            break;
        }
        l = 1 - l;
        pieces.push((t, l));
    }
    RegimePath { pieces, horizon }
}

/// One draw from a jump-size law.
pub fn sample_size<R: Rng + ?Sized>(d: &SizeDistribution, rng: &mut R) -> f64 {
    match *d {
        SizeDistribution::InverseGaussian { mean, shape } => InverseGaussian::new(mean, shape)
            .expect("validated parameters")
            .sample(rng),
        SizeDistribution::TruncatedNormal { mean, sd } => {
            if crate::market::norm_sf(-mean / sd) > 0.05 {
                loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let x = mean + sd * z;
                    if x > 0.0 {
                        return x;
                    }
                }
            }
            d.upper_quantile(1.0 - rng.gen::<f64>())
        }
        SizeDistribution::PointMass { size } => size,
    }
}

/// A jump applied to the prices during simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub z_e: f64,
    pub z_g: f64,
    /// True for the paired jumps of the common comonotone stream.
    pub common: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub times: Vec<f64>,
    pub s_e: Vec<f64>,
    pub s_g: Vec<f64>,
    pub regimes: Vec<usize>,
    pub jumps: Vec<JumpEvent>,
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Draws the jumps falling in one step. Returns summed sizes per price.
pub(crate) fn step_jumps<R: Rng + ?Sized>(
    je: &JumpSpec,
    jg: &JumpSpec,
    mode: JumpDependence,
    t: f64,
    dt: f64,
    rng: &mut R,
    mut log: Option<&mut Vec<JumpEvent>>,
) -> (f64, f64) {
    let mut push = |e: JumpEvent| {
        if let Some(v) = log.as_deref_mut() {
            v.push(e);
        }
    };
    let (mut de, mut dg) = (0.0, 0.0);
    match mode {
        JumpDependence::None => {}
        JumpDependence::Independent => {
            for _ in 0..poisson(je.intensity * dt, rng) {
                let z = sample_size(&je.size, rng);
                de += z;
                push(JumpEvent { time: t, z_e: z, z_g: 0.0, common: false });
            }
            for _ in 0..poisson(jg.intensity * dt, rng) {
                let z = sample_size(&jg.size, rng);
                dg += z;
                push(JumpEvent { time: t, z_e: 0.0, z_g: z, common: false });
            }
        }
        JumpDependence::Comonotone => {
            let (le, lg) = (je.intensity, jg.intensity);
            let lmin = le.min(lg);
            for _ in 0..poisson(lmin * dt, rng) {
                let level = lmin * (1.0 - rng.gen::<f64>());
                let (ze, zg) = (je.inverse_tail(level), jg.inverse_tail(level));
                de += ze;
                dg += zg;
                push(JumpEvent { time: t, z_e: ze, z_g: zg, common: true });
            }
            // residual tail levels lie in (lmin, λ) for the larger intensity
            for _ in 0..poisson((le - lmin) * dt, rng) {
                let level = lmin + (le - lmin) * (1.0 - rng.gen::<f64>());
                let z = je.inverse_tail(level);
                de += z;
                push(JumpEvent { time: t, z_e: z, z_g: 0.0, common: false });
            }
            for _ in 0..poisson((lg - lmin) * dt, rng) {
                let level = lmin + (lg - lmin) * (1.0 - rng.gen::<f64>());
                let z = jg.inverse_tail(level);
                dg += z;
                push(JumpEvent { time: t, z_e: 0.0, z_g: z, common: false });
            }
        }
    }
    (de, dg)
}

/// Euler-Maruyama step of both prices under regime `l` from calendar time `t`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn euler_step<R: Rng + ?Sized>(
    model: &ModelSpec,
    l: usize,
    t: f64,
    dt: f64,
    s: (f64, f64),
    mode: JumpDependence,
    rng: &mut R,
    log: Option<&mut Vec<JumpEvent>>,
) -> (f64, f64) {
    let p = &model.regimes[l];
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let sq = dt.sqrt();
    let we = z1;
    let wg = p.rho * z1 + (1.0 - p.rho * p.rho).max(0.0).sqrt() * z2;
    // the literal convention drops λm from the generator drift, so the
    // simulated drift loses it as well
    let shift = |j: &JumpSpec| match model.drift_convention {
        DriftConvention::PaperLiteral => -j.intensity * j.mean_size(),
        DriftConvention::CompensationConsistent => 0.0,
    };
    let me = p.reverting_level(Commodity::Electricity, t) + shift(&p.jump_e) - p.alpha_e * s.0;
    let mg = p.reverting_level(Commodity::Gas, t) + shift(&p.jump_g) - p.alpha_g * s.1;
    let (de, dg) = step_jumps(&p.jump_e, &p.jump_g, mode, t, dt, rng, log);
    (
        s.0 + me * dt + p.sigma_e * sq * we + de,
        s.1 + mg * dt + p.sigma_g * sq * wg + dg,
    )
}

/// Simulates prices on `[0, horizon]` along a given regime path.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &ModelSpec,
    regimes: &RegimePath,
    config: &PathConfig,
    start: (f64, f64),
    rng: &mut R,
) -> PricePath {
    let n = (regimes.horizon / config.step).round().max(1.0) as usize;
    let dt = regimes.horizon / n as f64;
    let mut out = PricePath {
        times: Vec::with_capacity(n + 1),
        s_e: Vec::with_capacity(n + 1),
        s_g: Vec::with_capacity(n + 1),
        regimes: Vec::with_capacity(n + 1),
        jumps: Vec::new(),
    };
    let mut s = start;
    for k in 0..=n {
        let t = k as f64 * dt;
        let l = regimes.regime_at(t);
        out.times.push(t);
        out.s_e.push(s.0);
        out.s_g.push(s.1);
        out.regimes.push(l);
        if k < n {
            s = euler_step(model, l, t, dt, s, config.jump_dependence, rng, Some(&mut out.jumps));
        }
    }
    out
}
