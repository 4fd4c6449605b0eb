use thiserror::Error;

/// Errors produced by the simulation toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid design spec: {0}")]
    InvalidSpec(String),

    #[error("bessel argument out of domain: order {order}, x = {x}")]
    Domain { order: u32, x: f64 },

    #[error("numeric singularity: {0}")]
    NumericSingularity(String),

    #[error("mode decomposition would alias: V = {v} < U = {u}")]
    AliasRisk { u: usize, v: usize },

    #[error("channel for mode {mode} is rank deficient (singular value ratio {ratio:e})")]
    RankDeficient { mode: usize, ratio: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("water-level bisection failed to converge (residual {residual:e})")]
    BisectionFailure { residual: f64 },

    #[error("exhaustive search limited to {max} channels, got {channels}")]
    TooLarge { channels: usize, max: usize },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
