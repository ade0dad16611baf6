//! Numerical laboratory for the empirical moment scaling of self-similar
//! Lévy processes.
//!
//! The crate simulates strictly-stable increments, evaluates the empirical
//! moment estimator over non-overlapping windows, fits scaling exponents and
//! provides Monte Carlo harnesses for the limit behaviour of those moments
//! when the underlying moments do not exist (apparent multifractality).
//!
//! Module map:
//!
//! * [`stable`]: stable-law parameters, characteristic exponent, tail laws
//!   and scaling functions.
//! * [`sampler`]: seeded stable variates, increment series, aggregation.
//! * [`moments`]: empirical moments, horizon scheme, regression, norming.
//! * [`extremes`]: block maxima, `R_N`, the `λ_N` sequence and inequality
//!   checkers.
//! * [`limits`]: Monte Carlo harnesses (τ-invariance, ratio convergence,
//!   norming dichotomy, the `N sin(|X|^α/N)` curve).

pub mod error;
pub mod extremes;
pub mod io;
pub mod limits;
pub mod moments;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
pub use extremes::{BlockExtremes, LambdaSequence};
pub use limits::{ConvergenceReport, KsResult, McConfig};
pub use moments::{HorizonScheme, MomentGrid, NormingKind, NormingSpec, ScalingFit};
pub use rng::RngStream;
pub use sampler::{IncrementSeries, StableSampler};
pub use stable::{StableParams, TailAsymptote};
