//! Significance testing for the causality measures.

pub mod bias;
pub mod fdr;
pub mod null;
pub mod surrogate;

pub use bias::{cmi_bias, cmi_bias_variance, cmi_variance, entropy_bias, entropy_variance, BiasVariance};
pub use fdr::{fdr_correct, FdrSpec};
pub use null::{gamma1_null, gamma2_null, gaussian_null, parametric_pvalue, NullModel};
pub use surrogate::{
    randomization_test, randomization_test_with, surrogate_pvalue, time_shift_surrogate, SurrogateOutcome,
    SurrogateSpec,
};

use serde::{Deserialize, Serialize};

/// Outcome of all tests run for one statistic. Absent p-values were either
/// not requested or their model was unavailable (listed in `unavailable`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_surrogate: Option<f64>,
    pub p_gaussian: Option<f64>,
    pub p_gamma1: Option<f64>,
    pub p_gamma2: Option<f64>,
    pub r0: Option<usize>,
    #[serde(rename = "M")]
    pub surrogates: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unavailable: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_values: Option<Vec<f64>>,
}
