//! Count-based entropies and conditional mutual information on symbols.

use std::collections::BTreeMap;

use crate::embedding::RankSymbolSeries;
use crate::error::{Error, Result};

/// Index of each stream within a joint key `(future, driver, response, confounder)`.
pub const FUTURE: usize = 0;
pub const DRIVER: usize = 1;
pub const RESPONSE: usize = 2;
pub const CONFOUNDER: usize = 3;

/// Which streams a marginal keeps.
pub type Axes = [bool; 4];

pub const AXES_1234: Axes = [true, true, true, true];
pub const AXES_234: Axes = [false, true, true, true];
pub const AXES_134: Axes = [true, false, true, true];
pub const AXES_34: Axes = [false, false, true, true];

/// Sparse 4-way contingency table over (future, driver, response, confounder)
/// symbols. Ordered storage keeps floating-point sums reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCountTable {
    counts: BTreeMap<[u64; 4], u64>,
    total: u64,
    cardinalities: [u64; 4],
}

impl JointCountTable {
    /// Tallies each time index of `s` once.
    pub fn from_symbols(s: &RankSymbolSeries) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::EmptyInput("empty symbol series".into()));
        }
        let mut counts = BTreeMap::new();
        for i in 0..s.len() {
            let key = [s.future[i], s.driver[i], s.response[i], s.confounder_at(i)];
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(Self {
            counts,
            total: s.len() as u64,
            cardinalities: s.cardinalities,
        })
    }

    /// Builds a table directly from cell counts. Zero counts are dropped.
    pub fn from_counts(
        cells: impl IntoIterator<Item = ([u64; 4], u64)>,
        cardinalities: [u64; 4],
    ) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut total = 0u64;
        for (key, n) in cells {
            if key.iter().zip(&cardinalities).any(|(k, c)| k >= c) {
                return Err(Error::InvalidValue(format!(
                    "cell {key:?} outside cardinalities {cardinalities:?}"
                )));
            }
            if n > 0 {
                *counts.entry(key).or_insert(0) += n;
                total += n;
            }
        }
        if total == 0 {
            return Err(Error::EmptyInput("table has no counts".into()));
        }
        Ok(Self {
            counts,
            total,
            cardinalities,
        })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn cardinalities(&self) -> [u64; 4] {
        self.cardinalities
    }

    pub fn cells(&self) -> impl Iterator<Item = (&[u64; 4], &u64)> {
        self.counts.iter()
    }

    pub fn get(&self, key: &[u64; 4]) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Marginal counts keyed with dropped axes set to zero.
    pub fn marginal(&self, axes: Axes) -> BTreeMap<[u64; 4], u64> {
        let mut out = BTreeMap::new();
        for (key, &n) in &self.counts {
            *out.entry(project(key, axes)).or_insert(0) += n;
        }
        out
    }

    /// Number of occupied states of a marginal (`B*` with the given axes).
    pub fn active_states(&self, axes: Axes) -> usize {
        self.marginal(axes).len()
    }

    /// Plug-in entropy of a marginal, in nats.
    pub fn marginal_entropy(&self, axes: Axes) -> f64 {
        entropy_of_counts(self.marginal(axes).values().copied(), self.total)
    }
}

#[inline]
pub(crate) fn project(key: &[u64; 4], axes: Axes) -> [u64; 4] {
    let mut out = [0u64; 4];
    for a in 0..4 {
        if axes[a] {
            out[a] = key[a];
        }
    }
    out
}

/// `ln N - (1/N) sum n ln n`, the plug-in entropy written over counts.
fn entropy_of_counts(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let n = total as f64;
    let s: f64 = counts
        .filter(|&c| c > 1)
        .map(|c| {
            let c = c as f64;
            c * c.ln()
        })
        .sum();
    (n.ln() - s / n).max(0.0)
}

/// Plug-in Shannon entropy `-sum q_i ln q_i` with `q_i = n_i / N`.
pub fn shannon_entropy_plugin(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput("entropy of zero counts".into()));
    }
    Ok(entropy_of_counts(counts.iter().copied(), total))
}

/// `I(future; driver | response, confounder)` from the table and its
/// marginals: `-H_1234 + H_234 + H_134 - H_34`.
pub fn cmi_plugin(tbl: &JointCountTable) -> f64 {
    -tbl.marginal_entropy(AXES_1234) + tbl.marginal_entropy(AXES_234)
        + tbl.marginal_entropy(AXES_134)
        - tbl.marginal_entropy(AXES_34)
}
