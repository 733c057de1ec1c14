//! Detection of direct information flow in multivariate time series with
//! rank-vector transfer entropies.
//!
//! The crate covers the full pipeline:
//!
//! - [`embedding`]: delay vectors, rank vectors and the symbol streams used by
//!   the rank measures (TERV/PTERV and STE/PSTE).
//! - [`estimators`]: plug-in entropies and conditional mutual information on
//!   symbols, and the nearest-neighbor estimator behind TE/PTE.
//! - [`inference`]: bias and variance approximations, parametric null models,
//!   time-shifted surrogate tests and false discovery rate control.
//! - [`simulators`]: coupled Hénon maps, coupled Lorenz flows, a linear
//!   conditioning example, stochastic trends and detrending.
//! - [`harness`]: all-pairs analysis, Monte Carlo rejection tables, sweeps and
//!   their file outputs.

// `!(x > 0.0)` is used on purpose so NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedding;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod inference;
pub mod rng;
pub mod series;
pub mod simulators;

pub use embedding::{EmbeddingSpec, FutureMode, RankSymbolSeries};
pub use error::{Error, Result};
pub use estimators::{JointCountTable, KnnSpec};
pub use inference::{NullModel, SurrogateSpec, TestResult};
pub use series::MultivariateSeries;
