//! Parametric null distributions for the plug-in CMI statistic.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::estimators::plugin::{Axes, JointCountTable, AXES_34};
use crate::inference::bias::BiasVariance;

const AXES_FUTURE: Axes = [true, false, false, false];
const AXES_DRIVER: Axes = [false, true, false, false];

/// Approximate null distribution of a CMI estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum NullModel {
    /// Normal with the approximated bias as mean and variance as spread.
    Gaussian { mean: f64, sd: f64 },
    /// Gamma from the chi-square degrees of freedom of the active states.
    Gamma1 { shape: f64, scale: f64 },
    /// Gamma matching the approximated bias and variance.
    Gamma2 { shape: f64, scale: f64 },
}

impl NullModel {
    pub fn mean(&self) -> f64 {
        match *self {
            NullModel::Gaussian { mean, .. } => mean,
            NullModel::Gamma1 { shape, scale } | NullModel::Gamma2 { shape, scale } => shape * scale,
        }
    }
}

pub fn gaussian_null(bv: BiasVariance) -> Result<NullModel> {
    if !(bv.variance > 0.0) || !bv.bias.is_finite() {
        return Err(Error::ModelUnavailable(format!(
            "Gaussian null needs positive variance (got {})",
            bv.variance
        )));
    }
    Ok(NullModel::Gaussian {
        mean: bv.bias,
        sd: bv.variance.sqrt(),
    })
}

/// `Gamma(B*_34 (B*_1 - 1)(B*_2 - 1) / 2, 1 / N_eff)` from the occupied
/// future, driver and conditioning states of the table.
pub fn gamma1_null(tbl: &JointCountTable) -> Result<NullModel> {
    let b1 = tbl.active_states(AXES_FUTURE);
    let b2 = tbl.active_states(AXES_DRIVER);
    let b34 = tbl.active_states(AXES_34);
    if b1 < 2 || b2 < 2 {
        return Err(Error::ModelUnavailable(format!(
            "Gamma-1 needs >= 2 active future and driver states (got {b1}, {b2})"
        )));
    }
    Ok(NullModel::Gamma1 {
        shape: b34 as f64 * (b1 - 1) as f64 * (b2 - 1) as f64 / 2.0,
        scale: 1.0 / tbl.total() as f64,
    })
}

/// `Gamma(bias^2 / var, var / bias)`; unavailable unless both are positive.
pub fn gamma2_null(bv: BiasVariance) -> Result<NullModel> {
    if !(bv.bias > 0.0) || !(bv.variance > 0.0) {
        return Err(Error::ModelUnavailable(format!(
            "Gamma-2 needs positive bias and variance (got {}, {})",
            bv.bias, bv.variance
        )));
    }
    Ok(NullModel::Gamma2 {
        shape: bv.bias * bv.bias / bv.variance,
        scale: bv.variance / bv.bias,
    })
}

/// Upper-tail probability `1 - CDF(statistic)`.
pub fn parametric_pvalue(model: &NullModel, statistic: f64) -> f64 {
    match *model {
        NullModel::Gaussian { mean, sd } => {
            if statistic == f64::INFINITY {
                return 0.0;
            }
            0.5 * erfc((statistic - mean) / (sd * std::f64::consts::SQRT_2))
        }
        NullModel::Gamma1 { shape, scale } | NullModel::Gamma2 { shape, scale } => {
            if statistic <= 0.0 {
                1.0
            } else if statistic == f64::INFINITY {
                0.0
            } else {
                gamma_ur(shape, statistic / scale)
            }
        }
    }
}
