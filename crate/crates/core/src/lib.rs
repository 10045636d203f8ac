//! Toolkit for the dynamical system of Mandelbrot multiplicative cascades.
//!
//! The crate has three layers:
//!
//! * exact combinatorics and analysis: base-`b` words and b-adic intervals
//!   ([`words`]), closed-form moment recursions, domain bounds and the
//!   inequality chains controlling the normalized cascade variables
//!   ([`moments`]);
//! * Monte Carlo engines: parametric unit-mean weight laws ([`laws`]),
//!   pool-based sampling of smoothing-transformation fixed points and
//!   cascade-function paths ([`cascade`]), and generators for the limit
//!   Gaussian process, both marginal and as a finitely additive measure
//!   built from tree-indexed normals ([`gaussian`]);
//! * statistical verification: empirical moments, KS normality, covariance
//!   comparison, modulus-of-continuity checks, coarse multifractal spectrum,
//!   partition function and Legendre bounds, and Zygmund-class diagnostics
//!   ([`analysis`]).
//!
//! Everything random is driven by counter-based deterministic streams
//! ([`rng`]): identical seeds give bit-identical results for any worker
//! count.

pub mod analysis;
pub mod cascade;
pub mod error;
pub mod export;
pub mod gaussian;
pub mod laws;
pub mod moments;
pub mod parallel;
pub mod rng;
pub mod words;

pub use error::{Error, Result};
pub use laws::WeightLaw;
pub use moments::DomainClass;
pub use rng::Rng;
pub use words::Word;
