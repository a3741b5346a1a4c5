use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration field violates one of its invariants. `field` is the
    /// dotted key path, e.g. `model.regimes[0].sigma_e`.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("{quantity} = {value} is outside the admissible range {range}")]
    OutOfDomain {
        quantity: &'static str,
        value: f64,
        range: String,
    },

    #[error("time step {delta_tau} h exceeds the stability limit {delta_tau_max} h")]
    Unstable { delta_tau: f64, delta_tau_max: f64 },

    #[error("advection CFL violated: |zeta| = {zeta} > 1 at regime {regime}, node ({i}, {j}, {u})")]
    Cfl {
        zeta: f64,
        regime: usize,
        i: usize,
        j: usize,
        u: usize,
    },

    #[error("non-finite value {value} at step {step}, regime {regime}, node ({i}, {j}, {u})")]
    NonFinite {
        value: f64,
        step: usize,
        regime: usize,
        i: usize,
        j: usize,
        u: usize,
    },

    #[error("snapshot time {tau} h is outside [0, {horizon}] h")]
    SnapshotOutOfRange { tau: f64, horizon: f64 },

    #[error("model is not degenerate: {0}")]
    NotDegenerate(String),

    #[error("policy does not match the model: {0}")]
    PolicyMismatch(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
