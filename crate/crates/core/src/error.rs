use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible regime: {0}")]
    InfeasibleRegime(String),

    #[error("quadrature did not reach relative accuracy {target:e} (estimated error {achieved:e}) on [{a}, {b}]")]
    Quadrature {
        a: f64,
        b: f64,
        target: f64,
        achieved: f64,
    },

    #[error("covariance factorization failed for H = {hurst}, n = {n} at pivot {pivot}")]
    Factorization { hurst: f64, n: usize, pivot: usize },

    #[error("path of kind {0} carries no Brownian increments")]
    MissingIncrements(String),

    #[error("drift value {value:e} at t = {t} exceeds the ceiling {ceiling:e} of field `{field}`")]
    UnboundedDrift {
        field: String,
        t: f64,
        value: f64,
        ceiling: f64,
    },

    #[error("empty window [{start}, {end}]")]
    EmptyWindow { start: usize, end: usize },

    #[error("integral does not converge: {0}")]
    NonIntegrable(String),

    #[error("lattice spacing {spacing} exceeds sqrt(min a)/4 = {limit}")]
    ResolutionTooCoarse { spacing: f64, limit: f64 },

    #[error("level {level} splits the window into {needed} pieces but the window has {available} grid steps")]
    LevelTooFine {
        level: u32,
        needed: usize,
        available: usize,
    },

    #[error("non-finite sample from path {seed}")]
    NonFinite { seed: u64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("expression error at offset {pos}: {msg}")]
    Expression { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
