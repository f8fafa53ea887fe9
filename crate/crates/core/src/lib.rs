//! Time integrators and diagnostics for the 1-D stochastic heat equation
//!
//! ```text
//! dX = -Lambda X dt + F(X) dt + dW,    x in (0, 1),  X(0) = X(1) = 0,
//! ```
//!
//! driven by space-time white noise. The centerpiece is the modified
//! linear-implicit Euler scheme, which splits each noise increment into two
//! parts so that the Gaussian invariant law `N(0, Lambda^{-1}/2)` of the linear
//! equation is preserved exactly for every time step. The standard
//! linear-implicit and exponential Euler schemes are provided for comparison,
//! together with an asymptotic-preserving scheme for slow-fast systems and a
//! Metropolis-Hastings sampler whose proposal is the modified Euler step.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod integrators;
pub mod mcmc;
pub mod modified_equation;
pub mod noise;
pub mod operators;
pub mod output;
pub mod problems;
pub mod sine;
pub mod slowfast;
pub mod stats;

pub use error::{Error, Result};
pub use field::{FieldState, Representation};
pub use integrators::{Scheme, SchemeConfig};
pub use noise::NoiseStream;
pub use operators::{FdOperator, ResolventFactors, SpatialOperator, SpectralOperator};
pub use problems::{ProblemSpec, SlowFastSpec};
