//! Gas-fired plant: power output against boiler temperature, the fuel to
//! equilibrium-temperature map, boiler dynamics and ramp-limited fuel bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    /// Temperature range of the boiler, °C.
    pub l_min: f64,
    pub l_max: f64,
    /// Minimum temperature for generation, °C.
    pub l_gen: f64,
    /// MW per °C.
    pub output_slope: f64,
    /// MW.
    pub output_intercept: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub eta: f64,
    pub c_abs_max: f64,
    /// Max |dL/dt|, °C per hour.
    pub ramp_limit: f64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            l_min: 20.0,
            l_max: 600.0,
            l_gen: 300.0,
            output_slope: 5.0 / 6.0,
            output_intercept: -100.0,
            b0: 650.0,
            b1: 0.00003571,
            b2: 4200.0,
            eta: 0.1,
            c_abs_max: 3017.0,
            ramp_limit: 15.0,
        }
    }
}

impl PlantSpec {
    pub fn validate(&self, path: &str) -> Result<()> {
        let fields = [
            ("l_min", self.l_min),
            ("l_max", self.l_max),
            ("l_gen", self.l_gen),
            ("output_slope", self.output_slope),
            ("output_intercept", self.output_intercept),
            ("b0", self.b0),
            ("b1", self.b1),
            ("b2", self.b2),
            ("eta", self.eta),
            ("c_abs_max", self.c_abs_max),
            ("ramp_limit", self.ramp_limit),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{path}.{name}"), "must be finite"));
            }
        }
        if !(self.l_min < self.l_gen && self.l_gen < self.l_max) {
            return Err(Error::invalid(
                format!("{path}.l_gen"),
                "need l_min < l_gen < l_max",
            ));
        }
        if self.b1 <= 0.0 {
            return Err(Error::invalid(format!("{path}.b1"), "must be > 0"));
        }
        if !(self.c_abs_max > 0.0 && self.c_abs_max < self.b2) {
            return Err(Error::invalid(
                format!("{path}.c_abs_max"),
                "need 0 < c_abs_max < b2",
            ));
        }
        if self.eta <= 0.0 {
            return Err(Error::invalid(format!("{path}.eta"), "must be > 0"));
        }
        if self.ramp_limit <= 0.0 {
            return Err(Error::invalid(format!("{path}.ramp_limit"), "must be > 0"));
        }
        Ok(())
    }

    fn check_l(&self, l: f64) -> Result<()> {
        // small slack for grid nodes computed as l_min + u * dL
        let tol = 1e-9 * (self.l_max - self.l_min);
        if l.is_nan() || l < self.l_min - tol || l > self.l_max + tol {
            return Err(Error::OutOfDomain {
                quantity: "temperature",
                value: l,
                range: format!("[{}, {}]", self.l_min, self.l_max),
            });
        }
        Ok(())
    }

    fn check_c(&self, c: f64) -> Result<()> {
        if c.is_nan() || c < 0.0 || c > self.c_abs_max * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain {
                quantity: "fuel rate",
                value: c,
                range: format!("[0, {}]", self.c_abs_max),
            });
        }
        Ok(())
    }

    /// Power output in MW.
    pub fn output(&self, l: f64) -> Result<f64> {
        self.check_l(l)?;
        Ok(self.output_unchecked(l))
    }

    pub fn output_unchecked(&self, l: f64) -> f64 {
        if l < self.l_gen {
            0.0
        } else {
            self.output_slope * l + self.output_intercept
        }
    }

    /// `L̄(c) = b0 - b1 (c - b2)^2`.
    pub fn equilibrium_temp(&self, c: f64) -> Result<f64> {
        self.check_c(c)?;
        Ok(self.equilibrium_unchecked(c))
    }

    pub fn equilibrium_unchecked(&self, c: f64) -> f64 {
        self.b0 - self.b1 * (c - self.b2).powi(2)
    }

    /// Fuel rate whose equilibrium temperature is `target`, on the
    /// increasing branch `c <= b2`. `None` when `target > b0`.
    pub fn fuel_for_equilibrium(&self, target: f64) -> Option<f64> {
        let rad = (self.b0 - target) / self.b1;
        if rad < 0.0 {
            None
        } else {
            Some(self.b2 - rad.sqrt())
        }
    }

    /// Admissible fuel interval at temperature `l` from `|dL/dt| <= ramp_limit`.
    pub fn control_bounds(&self, l: f64) -> Result<(f64, f64)> {
        self.check_l(l)?;
        Ok(self.control_bounds_unchecked(l))
    }

    pub fn control_bounds_unchecked(&self, l: f64) -> (f64, f64) {
        let dl = self.ramp_limit / self.eta;
        let lo = self
            .fuel_for_equilibrium(l - dl)
            .map_or(0.0, |c| c.max(0.0));
        let hi = self
            .fuel_for_equilibrium(l + dl)
            .map_or(self.c_abs_max, |c| c.min(self.c_abs_max));
        let lo = lo.min(self.c_abs_max);
        (lo, hi.max(lo))
    }

    pub fn temperature_drift(&self, l: f64, c: f64) -> Result<f64> {
        self.check_l(l)?;
        self.check_c(c)?;
        Ok(self.drift_unchecked(l, c))
    }

    pub fn drift_unchecked(&self, l: f64, c: f64) -> f64 {
        self.eta * (self.equilibrium_unchecked(c) - l)
    }

    /// One explicit Euler step of the boiler temperature, kept in range.
    pub fn boiler_step(&self, l: f64, c: f64, dt: f64) -> f64 {
        (l + dt * self.drift_unchecked(l, c)).clamp(self.l_min, self.l_max)
    }
}
