use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("rate {rate} is infeasible: {reason}")]
    Infeasible { rate: f64, reason: String },

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    /// The sufficient secrecy condition does not hold, so the no-causal
    /// region is not guaranteed. Distinct from numerical failures.
    #[error("secrecy condition fails: min normalized MDL {min_phi} >= SNR/SNRe = {ratio}")]
    SecrecyConditionFails { min_phi: f64, ratio: f64 },

    #[error("confidential-message marginal is not uniform (max deviation {0})")]
    NonUniformMarginal(f64),

    #[error("matrix is not a valid covariance: {0}")]
    InvalidCovariance(String),

    #[error("typical set is empty for k = {k}, epsilon = {epsilon}")]
    EmptyTypicalSet { k: usize, epsilon: f64 },

    #[error("bin size {bin_size} exceeds every typical class size; no full bin exists")]
    NoFullBin { bin_size: usize },

    #[error("blocklength {k} exceeds the exact enumeration budget of {max}")]
    BudgetExceeded { k: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
