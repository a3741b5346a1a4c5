//! Independent checks for the solver: price and regime path simulation,
//! Monte Carlo policy evaluation and dynamic programming for constant prices.

pub mod dp;
pub mod mc;
pub mod paths;

pub use dp::{deterministic_profile, deterministic_value, DpConfig, ValueProfile};
pub use mc::{evaluate_policy_mc, McEstimate, PolicyLookup, StartState};
pub use paths::{
    sample_size, simulate_path, simulate_regime_chain, JumpDependence, JumpEvent, PathConfig, PricePath, RegimePath,
};
