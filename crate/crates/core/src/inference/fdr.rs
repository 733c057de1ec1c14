//! False discovery rate control over the ordered pairs of a system.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FdrSpec {
    pub alpha: f64,
}

impl FdrSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha must be in (0,1), got {alpha}")));
        }
        Ok(Self { alpha })
    }
}

impl Default for FdrSpec {
    fn default() -> Self {
        Self { alpha: 0.05 }
    }
}

/// Step-up rule: with sorted `p_(1) <= ... <= p_(n)`, find the largest `k`
/// with `p_(k) <= alpha k / n` and reject the `k` smallest.
pub fn fdr_correct(pvals: &[f64], spec: FdrSpec) -> Vec<bool> {
    let n = pvals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let cutoff = (1..=n)
        .rev()
        .find(|&k| pvals[order[k - 1]] <= spec.alpha * k as f64 / n as f64)
        .unwrap_or(0);
    let mut out = vec![false; n];
    for &i in &order[..cutoff] {
        out[i] = true;
    }
    out
}
