use thiserror::Error;

/// Errors raised by state construction, kernels, quadrature and the drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector is not unit length (|n| = {norm})")]
    NonUnitVector { norm: f64 },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("total momentum not conserved (mismatch {mismatch:e})")]
    MomentumNotConserved { mismatch: f64 },

    #[error("forward-singular {channel} channel: |q| = {q_norm:e} below {limit:e}")]
    ForwardSingular {
        channel: &'static str,
        q_norm: f64,
        limit: f64,
    },

    #[error("exchange-symmetry invariant violated: {0}")]
    SymmetryMismatch(String),

    #[error("forbidden transition: outgoing norm {outgoing:e} vs operator norm {operator:e}")]
    Forbidden { outgoing: f64, operator: f64 },

    #[error("Fourier oracle did not converge: {0}")]
    OracleDivergence(String),

    #[error("energy denominator {value:e} below floor {floor:e} at an unpaired node")]
    DenominatorUnderflow { value: f64, floor: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
