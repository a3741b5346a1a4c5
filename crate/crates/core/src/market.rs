//! Regime-switching arithmetic spot model for electricity and gas prices.
//!
//! Each regime carries an Ornstein-Uhlenbeck diffusion with a seasonal
//! mean level plus an upward compound-Poisson spike component. All rates
//! are per hour and all times are in hours.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Standard normal cdf.
pub(crate) fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail, accurate far into the tail.
pub(crate) fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

pub(crate) fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Commodity {
    Electricity,
    Gas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeasonShape {
    Sine,
    Cosine,
}

/// `amplitude * trig((2*pi*t + phase) / period) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeasonalityFn {
    pub amplitude: f64,
    pub phase: f64,
    pub period: f64,
    pub offset: f64,
    pub shape: SeasonShape,
}

impl SeasonalityFn {
    pub fn constant(level: f64) -> Self {
        Self {
            amplitude: 0.0,
            phase: 0.0,
            period: 24.0,
            offset: level,
            shape: SeasonShape::Sine,
        }
    }

    /// Daily electricity profile of the base regime: `15 sin((2 pi t - 15.4 pi)/24) + 27`.
    pub fn base_electricity() -> Self {
        Self {
            amplitude: 15.0,
            phase: -15.4 * PI,
            period: 24.0,
            offset: 27.0,
            shape: SeasonShape::Sine,
        }
    }

    /// Daily gas profile of the base regime: `0.6 cos(2 pi (t - 18 pi)/24) + 2.7`,
    /// with the nested pi kept verbatim.
    pub fn base_gas() -> Self {
        Self {
            amplitude: 0.6,
            phase: -36.0 * PI * PI,
            period: 24.0,
            offset: 2.7,
            shape: SeasonShape::Cosine,
        }
    }

    fn argument(&self, t: f64) -> f64 {
        (2.0 * PI * t + self.phase) / self.period
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = self.argument(t);
        let trig = match self.shape {
            SeasonShape::Sine => x.sin(),
            SeasonShape::Cosine => x.cos(),
        };
        self.amplitude * trig + self.offset
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let x = self.argument(t);
        let w = 2.0 * PI / self.period;
        let dtrig = match self.shape {
            SeasonShape::Sine => x.cos(),
            SeasonShape::Cosine => -x.sin(),
        };
        self.amplitude * w * dtrig
    }

    pub fn is_constant(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Mean-reversion target rate `Λ'(t) + α Λ(t)`.
    pub fn reverting_level(&self, alpha: f64, t: f64) -> f64 {
        self.derivative(t) + alpha * self.value(t)
    }

    /// Exact lower and upper envelope of [`Self::reverting_level`] over all t.
    pub fn reverting_level_range(&self, alpha: f64) -> (f64, f64) {
        let w = 2.0 * PI / self.period;
        let half = self.amplitude.abs() * (alpha * alpha + w * w).sqrt();
        let mid = alpha * self.offset;
        (mid - half, mid + half)
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("phase", self.phase),
            ("offset", self.offset),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{path}.{name}"), "must be finite"));
            }
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::invalid(
                format!("{path}.period"),
                "period must be finite and > 0",
            ));
        }
        Ok(())
    }
}

/// Jump-size law on (0, inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SizeDistribution {
    /// `IG(mean, shape)`.
    InverseGaussian { mean: f64, shape: f64 },
    /// Normal(mean, sd) conditioned on being positive.
    TruncatedNormal { mean: f64, sd: f64 },
    PointMass { size: f64 },
}

impl SizeDistribution {
    pub fn validate(&self, path: &str) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("{path}.{name}"),
                    "must be finite and > 0",
                ))
            }
        };
        match *self {
            SizeDistribution::InverseGaussian { mean, shape } => {
                pos("mean", mean)?;
                pos("shape", shape)
            }
            SizeDistribution::TruncatedNormal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::invalid(format!("{path}.mean"), "must be finite"));
                }
                pos("sd", sd)?;
                if norm_sf(-mean / sd) < 1e-300 {
                    return Err(Error::invalid(
                        format!("{path}.mean"),
                        "no probability mass on (0, inf)",
                    ));
                }
                Ok(())
            }
            SizeDistribution::PointMass { size } => pos("size", size),
        }
    }

    /// Returns `(cdf(x), 1 - cdf(x))`, each computed in the form that avoids
    /// cancellation.
    fn cdf_pair(&self, x: f64) -> (f64, f64) {
        if x <= 0.0 {
            return (0.0, 1.0);
        }
        if x == f64::INFINITY {
            return (1.0, 0.0);
        }
        match *self {
            SizeDistribution::InverseGaussian { mean, shape } => {
                let r = (shape / x).sqrt();
                let z1 = r * (x / mean - 1.0);
                let z2 = r * (x / mean + 1.0);
                // e^{2 shape/mean} * Phi(-z2), taken through logs since the
                // exponential can overflow while the product stays small.
                let tail2 = norm_sf(z2);
                let second = if tail2 > 0.0 {
                    (2.0 * shape / mean + tail2.ln()).exp()
                } else {
                    0.0
                };
                if x < mean {
                    let cdf = (norm_cdf(z1) + second).clamp(0.0, 1.0);
                    (cdf, 1.0 - cdf)
                } else {
                    let sf = (norm_sf(z1) - second).clamp(0.0, 1.0);
                    (1.0 - sf, sf)
                }
            }
            SizeDistribution::TruncatedNormal { mean, sd } => {
                let a = -mean / sd;
                let z = (x - mean) / sd;
                let norm = norm_sf(a);
                if x < mean {
                    let cdf = ((norm_cdf(z) - norm_cdf(a)) / norm).clamp(0.0, 1.0);
                    (cdf, 1.0 - cdf)
                } else {
                    let sf = (norm_sf(z) / norm).clamp(0.0, 1.0);
                    (1.0 - sf, sf)
                }
            }
            SizeDistribution::PointMass { size } => {
                if x >= size {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_pair(x).0
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.cdf_pair(x).1
    }

    /// Probability of `(lo, hi]`, differencing on whichever side is small.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let (clo, slo) = self.cdf_pair(lo);
        let (chi, shi) = self.cdf_pair(hi);
        let m = if chi < 0.5 { chi - clo } else { slo - shi };
        m.max(0.0)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SizeDistribution::InverseGaussian { mean, .. } => mean,
            SizeDistribution::TruncatedNormal { mean, sd } => {
                let a = -mean / sd;
                mean + sd * norm_pdf(a) / norm_sf(a)
            }
            SizeDistribution::PointMass { size } => size,
        }
    }

    /// Smallest x with `survival(x) <= p`, by bisection. `p` in (0, 1).
    pub fn upper_quantile(&self, p: f64) -> f64 {
        if let SizeDistribution::PointMass { size } = *self {
            return size;
        }
        if p >= 1.0 {
            return 0.0;
        }
        let mut hi = self.mean().max(1e-12);
        while self.survival(hi) > p {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::MAX;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.survival(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    /// Events per hour.
    pub intensity: f64,
    pub size: SizeDistribution,
}

impl JumpSpec {
    pub fn none() -> Self {
        Self {
            intensity: 0.0,
            size: SizeDistribution::PointMass { size: 1.0 },
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(Error::invalid(
                format!("{path}.intensity"),
                "must be finite and >= 0",
            ));
        }
        self.size.validate(&format!("{path}.size"))
    }

    fn check_x(x: f64) -> Result<()> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::OutOfDomain {
                quantity: "jump size",
                value: x,
                range: "[0, inf)".into(),
            });
        }
        Ok(())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.size.cdf(x))
    }

    /// Tail integral `U(x) = λ (1 - D(x))`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.tail_unchecked(x))
    }

    pub(crate) fn tail_unchecked(&self, x: f64) -> f64 {
        if self.intensity == 0.0 {
            return 0.0;
        }
        if x <= 0.0 {
            return self.intensity;
        }
        self.intensity * self.size.survival(x)
    }

    /// Inverse of the tail integral: the z with `U(z) = level`, for
    /// `0 < level < λ`.
    pub fn inverse_tail(&self, level: f64) -> f64 {
        self.size.upper_quantile(level / self.intensity)
    }

    /// Cell masses `ν_k = λ [D((k+½)Δz) - D(max(0,(k-½)Δz))]`, k = 0..=K.
    pub fn cell_masses(&self, dz: f64, k_max: usize) -> Vec<f64> {
        (0..=k_max)
            .map(|k| {
                if self.intensity == 0.0 {
                    return 0.0;
                }
                let lo = ((k as f64 - 0.5) * dz).max(0.0);
                let hi = (k as f64 + 0.5) * dz;
                let m = if k == 0 {
                    self.size.cdf(hi)
                } else {
                    self.size.mass_between(lo, hi)
                };
                self.intensity * m
            })
            .collect()
    }

    pub fn mean_size(&self) -> f64 {
        self.size.mean()
    }

    /// Smallest size beyond which the discarded tail intensity is at most
    /// `rel_tol * λ`. Truncated normals use `mean + 6 sd`.
    pub fn truncation_bound(&self, rel_tol: f64) -> f64 {
        if self.intensity == 0.0 {
            return 0.0;
        }
        match self.size {
            SizeDistribution::TruncatedNormal { mean, sd } => mean + 6.0 * sd,
            _ => self.size.upper_quantile(rel_tol),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftConvention {
    /// `Λ̄ - αS - λ`.
    PaperLiteral,
    /// `Λ̄ + λm - αS - λ`, which keeps the generator of the price SDE.
    #[default]
    CompensationConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeParams {
    pub alpha_e: f64,
    pub alpha_g: f64,
    pub sigma_e: f64,
    pub sigma_g: f64,
    pub rho: f64,
    pub jump_e: JumpSpec,
    pub jump_g: JumpSpec,
    pub seasonality_e: SeasonalityFn,
    pub seasonality_g: SeasonalityFn,
    /// Rate of leaving this regime, per hour.
    #[serde(default)]
    pub switch_rate: f64,
}

impl RegimeParams {
    /// Base regime with daily seasonality and IG spikes.
    pub fn base() -> Self {
        Self {
            alpha_e: 0.1,
            alpha_g: 0.23,
            sigma_e: 0.11,
            sigma_g: 0.09,
            rho: 0.15,
            jump_e: JumpSpec {
                intensity: 0.1,
                size: SizeDistribution::InverseGaussian {
                    mean: 0.60,
                    shape: 0.56,
                },
            },
            jump_g: JumpSpec {
                intensity: 0.4,
                size: SizeDistribution::InverseGaussian {
                    mean: 0.54,
                    shape: 0.32,
                },
            },
            seasonality_e: SeasonalityFn::base_electricity(),
            seasonality_g: SeasonalityFn::base_gas(),
            switch_rate: 0.0,
        }
    }

    /// Volatile regime with stronger reversion and a lower seasonal level.
    pub fn volatile() -> Self {
        Self {
            alpha_e: 0.6,
            alpha_g: 1.0,
            sigma_e: 0.2,
            sigma_g: 0.3,
            rho: 0.15,
            jump_e: JumpSpec {
                intensity: 0.2,
                size: SizeDistribution::InverseGaussian {
                    mean: 0.30,
                    shape: 0.46,
                },
            },
            jump_g: JumpSpec {
                intensity: 0.6,
                size: SizeDistribution::InverseGaussian {
                    mean: 0.42,
                    shape: 0.28,
                },
            },
            seasonality_e: SeasonalityFn {
                amplitude: 5.0,
                phase: -15.4 * PI,
                period: 24.0,
                offset: 10.0,
                shape: SeasonShape::Sine,
            },
            seasonality_g: SeasonalityFn {
                amplitude: 0.3,
                phase: -36.0 * PI * PI,
                period: 24.0,
                offset: 1.4,
                shape: SeasonShape::Cosine,
            },
            switch_rate: 0.0,
        }
    }

    pub fn alpha(&self, c: Commodity) -> f64 {
        match c {
            Commodity::Electricity => self.alpha_e,
            Commodity::Gas => self.alpha_g,
        }
    }

    pub fn sigma(&self, c: Commodity) -> f64 {
        match c {
            Commodity::Electricity => self.sigma_e,
            Commodity::Gas => self.sigma_g,
        }
    }

    pub fn jump(&self, c: Commodity) -> &JumpSpec {
        match c {
            Commodity::Electricity => &self.jump_e,
            Commodity::Gas => &self.jump_g,
        }
    }

    pub fn seasonality(&self, c: Commodity) -> &SeasonalityFn {
        match c {
            Commodity::Electricity => &self.seasonality_e,
            Commodity::Gas => &self.seasonality_g,
        }
    }

    /// `Λ̄(t) = Λ'(t) + α Λ(t)`.
    pub fn reverting_level(&self, c: Commodity, t: f64) -> f64 {
        self.seasonality(c).reverting_level(self.alpha(c), t)
    }

    /// Drift of the price before the `-λ` shift that accompanies the
    /// split jump operator. Equals the full generator drift on the
    /// compensation-consistent convention.
    pub fn jump_adjusted_drift(
        &self,
        c: Commodity,
        s: f64,
        t: f64,
        convention: DriftConvention,
    ) -> f64 {
        let jump = self.jump(c);
        let comp = match convention {
            DriftConvention::PaperLiteral => 0.0,
            DriftConvention::CompensationConsistent => jump.intensity * jump.mean_size(),
        };
        self.reverting_level(c, t) + comp - self.alpha(c) * s
    }

    /// Drift multiplying `V_S` when the marginal jump operator is present.
    pub fn effective_drift(
        &self,
        c: Commodity,
        s: f64,
        t: f64,
        convention: DriftConvention,
    ) -> f64 {
        self.jump_adjusted_drift(c, s, t, convention) - self.jump(c).intensity
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("{path}.{name}"),
                    "must be finite and >= 0",
                ))
            }
        };
        nonneg("alpha_e", self.alpha_e)?;
        nonneg("alpha_g", self.alpha_g)?;
        nonneg("sigma_e", self.sigma_e)?;
        nonneg("sigma_g", self.sigma_g)?;
        nonneg("switch_rate", self.switch_rate)?;
        if !(self.rho.is_finite() && self.rho.abs() <= 1.0) {
            return Err(Error::invalid(format!("{path}.rho"), "|rho| must be <= 1"));
        }
        self.jump_e.validate(&format!("{path}.jump_e"))?;
        self.jump_g.validate(&format!("{path}.jump_g"))?;
        self.seasonality_e
            .validate(&format!("{path}.seasonality_e"))?;
        self.seasonality_g
            .validate(&format!("{path}.seasonality_g"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub regimes: Vec<RegimeParams>,
    /// Discount rate per hour.
    pub discount_rate: f64,
    /// Horizon in hours.
    pub horizon: f64,
    #[serde(default)]
    pub drift_convention: DriftConvention,
}

impl ModelSpec {
    pub fn single(regime: RegimeParams, discount_rate: f64, horizon: f64) -> Self {
        Self {
            regimes: vec![regime],
            discount_rate,
            horizon,
            drift_convention: DriftConvention::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() || self.regimes.len() > 2 {
            return Err(Error::invalid(
                "model.regimes",
                format!("expected 1 or 2 regimes, got {}", self.regimes.len()),
            ));
        }
        if !(self.discount_rate.is_finite() && self.discount_rate >= 0.0) {
            return Err(Error::invalid(
                "model.discount_rate",
                "must be finite and >= 0",
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("model.horizon", "must be finite and > 0"));
        }
        for (k, r) in self.regimes.iter().enumerate() {
            r.validate(&format!("model.regimes[{k}]"))?;
        }
        Ok(())
    }

    pub fn n_regimes(&self) -> usize {
        self.regimes.len()
    }

    /// Transition rate out of regime `l` (zero for a single regime).
    pub fn switch_rate(&self, l: usize) -> f64 {
        if self.regimes.len() == 2 {
            self.regimes[l].switch_rate
        } else {
            0.0
        }
    }
}
