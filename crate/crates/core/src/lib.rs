//! Numerical laboratory for stochastic differential equations
//! `dX = b(t, X) dt + dW` with singular, integrable drift `b` and additive
//! fractional Brownian or symmetric stable noise.
//!
//! * [`params`]: regime classification of `(H, d, p, q)` tuples and the
//!   parameters of the explicit no-solution drift.
//! * [`noise`]: Brownian, fractional Brownian (dense and Volterra) and stable paths.
//! * [`drift`]: drift fields with integrability metadata, mollification, norms.
//! * [`solver`]: Euler scheme and pathwise functionals of the drift component.
//! * [`sewing`]: Riemann sums of germs and their convergence diagnostics.
//! * [`mc`]: Monte Carlo moment estimates and scaling experiments.

pub mod drift;
pub mod mc;
pub mod error;
pub mod noise;
pub mod params;
pub mod quad;
pub mod sewing;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
