//! Lévy copulas for the joint upward spikes of the two prices.
//!
//! The skewed Clayton family is
//! `F(x,y) = ((α y^{-β} + 1) x^{-θ} + y^{-θ})^{-1/θ}`; independence and
//! comonotonicity are included as the two analytically known endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::JumpSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CopulaSpec {
    SkewedClayton { theta: f64, alpha: f64, beta: f64 },
    Independence,
    Comonotone,
}

impl Default for CopulaSpec {
    fn default() -> Self {
        CopulaSpec::SkewedClayton {
            theta: 1.0,
            alpha: 0.5,
            beta: 1.0,
        }
    }
}

impl CopulaSpec {
    pub fn validate(&self, path: &str) -> Result<()> {
        if let CopulaSpec::SkewedClayton { theta, alpha, beta } = *self {
            if !(theta.is_finite() && theta > 0.0) {
                return Err(Error::invalid(format!("{path}.theta"), "theta must be > 0"));
            }
            if !(alpha.is_finite() && alpha >= 0.0) {
                return Err(Error::invalid(format!("{path}.alpha"), "alpha must be >= 0"));
            }
            if !(beta.is_finite() && beta > 0.0 && beta <= theta + 1.0) {
                return Err(Error::invalid(
                    format!("{path}.beta"),
                    "beta must satisfy 0 < beta <= theta + 1",
                ));
            }
        }
        Ok(())
    }

    /// `F(x, y)` for `x, y` in `[0, inf]`.
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        for v in [x, y] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::OutOfDomain {
                    quantity: "copula argument",
                    value: v,
                    range: "[0, inf]".into(),
                });
            }
        }
        Ok(self.value_unchecked(x, y))
    }

    pub(crate) fn value_unchecked(&self, x: f64, y: f64) -> f64 {
        if x == 0.0 || y == 0.0 {
            return 0.0;
        }
        match *self {
            CopulaSpec::Independence => {
                if x == f64::INFINITY {
                    y
                } else if y == f64::INFINITY {
                    x
                } else {
                    0.0
                }
            }
            CopulaSpec::Comonotone => x.min(y),
            CopulaSpec::SkewedClayton { theta, alpha, beta } => {
                if x == f64::INFINITY {
                    return y;
                }
                if y == f64::INFINITY {
                    return x;
                }
                clayton_log_space(x.ln(), y.ln(), theta, alpha, beta).exp()
            }
        }
    }
}

/// `ln F` from `ln x`, `ln y`, via log-sum-exp so tiny tail levels cannot
/// overflow `x^{-θ}`.
fn clayton_log_space(lx: f64, ly: f64, theta: f64, alpha: f64, beta: f64) -> f64 {
    // terms: x^{-θ}, α y^{-β} x^{-θ}, y^{-θ}
    let a = -theta * lx;
    let c = -theta * ly;
    let mut m = a.max(c);
    let b = if alpha > 0.0 {
        let b = alpha.ln() - beta * ly - theta * lx;
        m = m.max(b);
        Some(b)
    } else {
        None
    };
    let mut s = (a - m).exp() + (c - m).exp();
    if let Some(b) = b {
        s += (b - m).exp();
    }
    -(m + s.ln()) / theta
}

/// `U(z_e, z_g) = F(U_e(z_e), U_g(z_g))`.
pub fn joint_tail(copula: &CopulaSpec, je: &JumpSpec, jg: &JumpSpec, ze: f64, zg: f64) -> Result<f64> {
    let ue = je.tail(ze)?;
    let ug = jg.tail(zg)?;
    Ok(copula.value_unchecked(ue, ug))
}

/// Masses of the common-jump part of the joint Lévy measure on the product
/// cells `[a_k, a_{k+1}) x [b_l, b_{l+1})`, `a_k = max(0, (k-½)Δz_e)`.
/// Returned row-major with shape `(K_e+1) x (K_g+1)`.
pub fn joint_cell_masses(
    copula: &CopulaSpec,
    je: &JumpSpec,
    jg: &JumpSpec,
    dze: f64,
    dzg: f64,
    ke: usize,
    kg: usize,
) -> Vec<f64> {
    let ue: Vec<f64> = (0..=ke + 1)
        .map(|k| je.tail_unchecked(((k as f64 - 0.5) * dze).max(0.0)))
        .collect();
    let ug: Vec<f64> = (0..=kg + 1)
        .map(|l| jg.tail_unchecked(((l as f64 - 0.5) * dzg).max(0.0)))
        .collect();
    let f = |k: usize, l: usize| copula.value_unchecked(ue[k], ug[l]);
    let mut out = Vec::with_capacity((ke + 1) * (kg + 1));
    for k in 0..=ke {
        for l in 0..=kg {
            let m = f(k, l) - f(k + 1, l) - f(k, l + 1) + f(k + 1, l + 1);
            out.push(m);
        }
    }
    out
}
