//! Entropy and conditional mutual information estimators.

pub mod kdtree;
pub mod knn;
pub mod plugin;

pub use knn::{delay_points, digamma, knn_cmi, pte, te, KnnCmiEvaluator, KnnSpec};
pub use plugin::{cmi_plugin, shannon_entropy_plugin, JointCountTable};

use crate::embedding::{build_symbol_series, EmbeddingSpec, FutureMode};
use crate::error::Result;
use crate::series::MultivariateSeries;

/// Plug-in conditional mutual information of the rank symbol streams for
/// `driver -> response | confounders`.
pub fn rank_cmi(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    confounders: &[usize],
    spec: &EmbeddingSpec,
    mode: FutureMode,
) -> Result<f64> {
    let s = build_symbol_series(data, driver, response, confounders, spec, mode)?;
    Ok(cmi_plugin(&JointCountTable::from_symbols(&s)?))
}

/// Transfer entropy on rank vectors.
pub fn terv(data: &MultivariateSeries, driver: usize, response: usize, spec: &EmbeddingSpec) -> Result<f64> {
    rank_cmi(data, driver, response, &[], spec, FutureMode::Terv)
}

/// Partial transfer entropy on rank vectors.
pub fn pterv(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    confounders: &[usize],
    spec: &EmbeddingSpec,
) -> Result<f64> {
    rank_cmi(data, driver, response, confounders, spec, FutureMode::Terv)
}

/// Symbolic transfer entropy.
pub fn ste(data: &MultivariateSeries, driver: usize, response: usize, spec: &EmbeddingSpec) -> Result<f64> {
    rank_cmi(data, driver, response, &[], spec, FutureMode::Ste)
}

/// Partial symbolic transfer entropy.
pub fn pste(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    confounders: &[usize],
    spec: &EmbeddingSpec,
) -> Result<f64> {
    rank_cmi(data, driver, response, confounders, spec, FutureMode::Ste)
}
