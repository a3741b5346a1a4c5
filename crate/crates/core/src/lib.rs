//! Valuation of a gas-fired power plant under a regime-switching
//! jump-diffusion model for electricity and gas spot prices.

pub mod copula;
pub mod engine;
pub mod error;
pub mod market;
pub mod oracle;
pub mod plant;

pub use copula::CopulaSpec;
pub use error::{Error, Result};
pub use market::{Commodity, DriftConvention, JumpSpec, ModelSpec, RegimeParams, SeasonalityFn, SizeDistribution};
pub use plant::PlantSpec;
pub use engine::{GasAxis, Geometry, GridSpec, Lattice, PolicySurface, Solution, Solver, StepCount};
