//! Matplotlib scripts rendering value and control surfaces over
//! two-dimensional slices of the exported lattices.

use std::path::{Path, PathBuf};

use gasplant_core::Geometry;

use crate::config::PlotSlices;
use crate::error::CliError;
use crate::export::{Metadata, SurfaceKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slice {
    /// Surface over (S_e, L).
    FixedGas(f64),
    /// Surface over (S_g, L).
    FixedPower(f64),
    /// Surface over (S_e, S_g).
    FixedTemperature(f64),
}

impl Slice {
    /// Column index held fixed, and the two free columns with their labels.
    fn columns(self) -> (usize, [(usize, &'static str); 2]) {
        match self {
            Slice::FixedGas(_) => (1, [(0, "S_e"), (2, "L")]),
            Slice::FixedPower(_) => (0, [(1, "S_g"), (2, "L")]),
            Slice::FixedTemperature(_) => (2, [(0, "S_e"), (1, "S_g")]),
        }
    }

    fn value(self) -> f64 {
        match self {
            Slice::FixedGas(v) | Slice::FixedPower(v) | Slice::FixedTemperature(v) => v,
        }
    }

    fn tag(self) -> String {
        let name = ["se", "sg", "l"][self.columns().0];
        format!("{name}{}", trim(self.value()))
    }

    fn label(self) -> String {
        let name = ["S_e", "S_g", "L"][self.columns().0];
        format!("{name} = {}", trim(self.value()))
    }
}

fn trim(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Snaps a coordinate to its nearest node, or `None` outside the axis.
fn snap(x: f64, h: f64, n: usize, origin: f64) -> Option<f64> {
    if n < 2 {
        return None;
    }
    let p = (x - origin) / h;
    if p < -0.5 || p > (n - 1) as f64 + 0.5 {
        return None;
    }
    Some(origin + p.round().clamp(0.0, (n - 1) as f64) * h)
}

/// Slices that exist on the grid, snapped to nodes and deduplicated.
/// Slices along a collapsed gas axis are dropped, and a fixed gas price
/// yields the single (S_e, L) surface.
pub fn resolve_slices(geometry: &Geometry, slices: &PlotSlices) -> Vec<Slice> {
    let sh = geometry.shape;
    let mut out: Vec<Slice> = Vec::new();
    let mut push = |s: Slice| {
        if !out.contains(&s) {
            out.push(s);
        }
    };
    match geometry.gas_fixed {
        Some(p) => push(Slice::FixedGas(p)),
        None => {
            for &g in &slices.s_g {
                if let Some(v) = snap(g, geometry.d_sg, sh.ng, 0.0) {
                    push(Slice::FixedGas(v));
                }
            }
            for &e in &slices.s_e {
                if let Some(v) = snap(e, geometry.d_se, sh.ne, 0.0) {
                    push(Slice::FixedPower(v));
                }
            }
            for &l in &slices.l {
                if let Some(v) = snap(l, geometry.d_l, sh.nl, geometry.l_min) {
                    push(Slice::FixedTemperature(v));
                }
            }
        }
    }
    out
}

fn half_spacing(geometry: &Geometry, col: usize) -> f64 {
    let h = [geometry.d_se, geometry.d_sg, geometry.d_l][col];
    if h > 0.0 {
        0.5 * h
    } else {
        1e-6
    }
}

fn script(geometry: &Geometry, slice: Slice, value_csv: &str, control_csv: &str, png: &str, title: &str) -> String {
    let (fixed, [(x, xl), (y, yl)]) = slice.columns();
    format!(
        r#"import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
FIXED, X, Y = {fixed}, {x}, {y}
LEVEL, TOL = {level:?}, {tol:?}


def load(name):
    data = np.loadtxt(os.path.join(HERE, name), delimiter=",", skiprows=1, ndmin=2)
    rows = data[np.abs(data[:, FIXED] - LEVEL) < TOL]
    xs, ys = np.unique(rows[:, X]), np.unique(rows[:, Y])
    z = np.full((len(ys), len(xs)), np.nan)
    z[np.searchsorted(ys, rows[:, Y]), np.searchsorted(xs, rows[:, X])] = rows[:, 3]
    gx, gy = np.meshgrid(xs, ys)
    return gx, gy, z


fig = plt.figure(figsize=(12, 5))
for k, (name, zlabel) in enumerate([("{value_csv}", "value"), ("{control_csv}", "control")]):
    ax = fig.add_subplot(1, 2, k + 1, projection="3d")
    gx, gy, z = load(name)
    ax.plot_surface(gx, gy, z, cmap="viridis", linewidth=0, antialiased=True)
    ax.set_xlabel("{xl}")
    ax.set_ylabel("{yl}")
    ax.set_zlabel(zlabel)
    ax.set_title("{title}")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{png}"), dpi=120)
"#,
        level = slice.value(),
        tol = half_spacing(geometry, fixed),
    )
}

/// Writes one script per (regime, snapshot, slice) next to the CSVs and
/// returns their paths. Each script renders the value and control surfaces
/// of its slice to a PNG of the same stem.
pub fn emit_plot_scripts(meta: &Metadata, slices: &PlotSlices, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let resolved = resolve_slices(&meta.geometry, slices);
    let mut written = Vec::new();
    for value in meta.surfaces.iter().filter(|s| s.kind == SurfaceKind::Value) {
        let Some(control) = meta.surfaces.iter().find(|s| {
            s.kind == SurfaceKind::Control && s.regime == value.regime && s.requested_tau == value.requested_tau
        }) else {
            continue;
        };
        for &slice in &resolved {
            let stem = format!("plot_r{}_tau{:.3}_{}", value.regime, value.requested_tau, slice.tag());
            let title = format!("regime {}, tau = {:.3} h, {}", value.regime, value.requested_tau, slice.label());
            let text = script(
                &meta.geometry,
                slice,
                &value.file,
                &control.file,
                &format!("{stem}.png"),
                &title,
            );
            let path = dir.join(format!("{stem}.py"));
            std::fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
            written.push(path);
        }
    }
    Ok(written)
}
