//! Slope-limited MUSCL transport along the temperature axis.

use crate::error::{Error, Result};

/// `½ (sign a + sign b) min(|a|, |b|)`.
pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

pub fn total_variation(col: &[f64]) -> f64 {
    col.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Increments of one MUSCL step for `V_τ = a(L) V_L` on a temperature column.
///
/// Information travels against `a`, so the Courant number is
/// `ν = -Δτ a / ΔL` and the upwind cell sits on the side `a` points to.
/// Slopes vanish at the two end nodes.
pub fn advection_update(col: &[f64], a: &[f64], dt: f64, dl: f64) -> Result<Vec<f64>> {
    let n = col.len();
    let mut sigma = vec![0.0; n];
    for u in 1..n.saturating_sub(1) {
        sigma[u] = minmod((col[u] - col[u - 1]) / dl, (col[u + 1] - col[u]) / dl);
    }
    let mut inc = vec![0.0; n];
    for u in 0..n {
        let nu = -dt * a[u] / dl;
        if nu.abs() > 1.0 {
            return Err(Error::Cfl {
                zeta: nu.abs(),
                regime: 0,
                i: 0,
                j: 0,
                u,
            });
        }
        if nu == 0.0 {
            continue;
        }
        let u1 = if nu > 0.0 { u } else { u + 1 };
        if u1 == 0 || u1 >= n {
            // no upwind data outside the column
            continue;
        }
        inc[u] = -nu * (col[u1] - col[u1 - 1])
            - 0.5 * nu * (nu.signum() - nu) * dl * (sigma[u1] - sigma[u1 - 1]);
    }
    Ok(inc)
}
