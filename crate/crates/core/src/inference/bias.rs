//! Bias and variance approximations for plug-in entropy and conditional
//! mutual information on symbols.

use std::collections::BTreeMap;

use crate::estimators::plugin::{project, JointCountTable, AXES_134, AXES_234, AXES_34};

/// Approximate bias and variance of an estimate, in nats and nats².
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BiasVariance {
    pub bias: f64,
    pub variance: f64,
}

/// Third-order bias of the plug-in entropy over positive `counts`:
/// `-(B*-1)/(2N) - (3B*-2)/(6N^2) + (1/(6N)) sum 1/n_i`.
pub fn entropy_bias(counts: &[u64]) -> f64 {
    let occupied: Vec<f64> = counts.iter().filter(|&&c| c > 0).map(|&c| c as f64).collect();
    let n: f64 = occupied.iter().sum();
    if n == 0.0 {
        return 0.0;
    }
    let b = occupied.len() as f64;
    let inv_sum: f64 = occupied.iter().map(|c| 1.0 / c).sum();
    -(b - 1.0) / (2.0 * n) - (3.0 * b - 2.0) / (6.0 * n * n) + inv_sum / (6.0 * n)
}

/// Error-propagation variance of the plug-in entropy,
/// `(1/N) sum (ln q_i + H)^2 q_i (1 - q_i)`.
pub fn entropy_variance(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n;
            -q * q.ln()
        })
        .sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n;
            (q.ln() + h).powi(2) * q * (1.0 - q)
        })
        .sum::<f64>()
        / n
}

/// Marginal count maps needed by the CMI approximations.
struct Marginals {
    n234: BTreeMap<[u64; 4], u64>,
    n134: BTreeMap<[u64; 4], u64>,
    n34: BTreeMap<[u64; 4], u64>,
}

impl Marginals {
    fn of(tbl: &JointCountTable) -> Self {
        Self {
            n234: tbl.marginal(AXES_234),
            n134: tbl.marginal(AXES_134),
            n34: tbl.marginal(AXES_34),
        }
    }
}

/// Bias of the plug-in CMI: active-state counts over `2N`, their second-order
/// correction over `6N^2`, and the harmonic sums over occupied cells and
/// marginals.
pub fn cmi_bias(tbl: &JointCountTable) -> f64 {
    let n = tbl.total() as f64;
    let m = Marginals::of(tbl);
    let b1234 = tbl.cells().count() as f64;
    let (b234, b134, b34) = (m.n234.len() as f64, m.n134.len() as f64, m.n34.len() as f64);
    let active = b1234 - b234 - b134 + b34;

    let harmonic = |map: &BTreeMap<[u64; 4], u64>| map.values().map(|&c| 1.0 / c as f64).sum::<f64>();
    let inv1234: f64 = tbl.cells().map(|(_, &c)| 1.0 / c as f64).sum();
    let inner = -inv1234 + harmonic(&m.n234) + harmonic(&m.n134) - harmonic(&m.n34);

    active / (2.0 * n) + 3.0 * active / (6.0 * n * n) + inner / (6.0 * n)
}

/// Error-propagation variance of the plug-in CMI,
/// `(1/N) sum (-ln q_ijkl + ln q_.jkl + ln q_i.kl - ln q_..kl + I)^2 q (1-q)`.
pub fn cmi_variance(tbl: &JointCountTable) -> f64 {
    let n = tbl.total() as f64;
    let m = Marginals::of(tbl);
    let lnq = |c: u64| (c as f64 / n).ln();
    let pointwise: Vec<(f64, f64)> = tbl
        .cells()
        .map(|(key, &c)| {
            let q = c as f64 / n;
            let local = -lnq(c) + lnq(m.n234[&project(key, AXES_234)])
                + lnq(m.n134[&project(key, AXES_134)])
                - lnq(m.n34[&project(key, AXES_34)]);
            (q, local)
        })
        .collect();
    // I = sum q * (ln q - ln q_jkl - ln q_ikl + ln q_kl)
    let cmi: f64 = pointwise.iter().map(|(q, local)| -q * local).sum();
    pointwise
        .iter()
        .map(|(q, local)| (local + cmi).powi(2) * q * (1.0 - q))
        .sum::<f64>()
        / n
}

pub fn cmi_bias_variance(tbl: &JointCountTable) -> BiasVariance {
    BiasVariance {
        bias: cmi_bias(tbl),
        variance: cmi_variance(tbl),
    }
}
