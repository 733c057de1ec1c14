//! Randomization test with time-shifted surrogates of the driver.

use rand::Rng;
use rayon::prelude::*;

use crate::embedding::RankSymbolSeries;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Number of surrogates, admissible shift range as fractions of the stream
/// length, and the seed all shifts are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurrogateSpec {
    pub count: usize,
    pub shift_range: (f64, f64),
    pub seed: u64,
}

impl SurrogateSpec {
    pub fn new(count: usize, seed: u64) -> Result<Self> {
        let s = Self {
            count,
            seed,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidSpec("need at least one surrogate".into()));
        }
        let (lo, hi) = self.shift_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidSpec(format!("bad shift range ({lo}, {hi})")));
        }
        Ok(())
    }

    /// Integer shift bounds `[ceil(lo L), floor(hi L)]` clamped to `[1, L-1]`.
    pub fn shift_bounds(&self, len: usize) -> Result<(usize, usize)> {
        let (lo, hi) = self.shift_range;
        let a = ((lo * len as f64).ceil() as usize).max(1);
        let b = ((hi * len as f64).floor() as usize).min(len.saturating_sub(1));
        if a > b {
            return Err(Error::InvalidSpec(format!(
                "no admissible shift for length {len} and range ({lo}, {hi})"
            )));
        }
        Ok((a, b))
    }

    /// Independent uniform shifts, one per surrogate.
    pub fn draw_shifts(&self, len: usize) -> Result<Vec<usize>> {
        self.validate()?;
        let (a, b) = self.shift_bounds(len)?;
        let mut rng = stream_rng(self.seed, 0);
        Ok((0..self.count).map(|_| rng.random_range(a..=b)).collect())
    }
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        Self {
            count: 100,
            shift_range: (0.05, 0.95),
            seed: 0,
        }
    }
}

/// Circular shift: `out[t] = input[(t + w) mod L]`.
pub fn time_shift_surrogate<T: Clone>(input: &[T], w: usize) -> Result<Vec<T>> {
    let len = input.len();
    if w == 0 || w >= len {
        return Err(Error::InvalidShift { shift: w, len });
    }
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&input[w..]);
    out.extend_from_slice(&input[..w]);
    Ok(out)
}

/// Observed statistic, surrogate ensemble and the rank-based p-value.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurrogateOutcome {
    pub statistic: f64,
    pub values: Vec<f64>,
    pub shifts: Vec<usize>,
    /// Rank of the observed value among all `M + 1` values, ascending.
    pub rank: usize,
    pub p_value: f64,
    /// Set when every surrogate equals the observed value.
    pub degenerate: bool,
}

/// Rank of `observed` among itself and `surrogates` (ascending, ties put
/// the observed value lowest) and `p = 1 - (r0 - 0.326) / (M + 1.348)`.
/// An ensemble identical to the observed value yields `p = 1`.
pub fn surrogate_pvalue(observed: f64, surrogates: &[f64]) -> (usize, f64, bool) {
    let mut sorted = surrogates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let below = sorted.partition_point(|&v| v < observed);
    let rank = 1 + below;
    let degenerate = !sorted.is_empty() && sorted.iter().all(|&v| v == observed);
    if degenerate {
        return (rank, 1.0, true);
    }
    let m = surrogates.len() as f64;
    let p = 1.0 - (rank as f64 - 0.326) / (m + 1.0 + 0.348);
    (rank, p.clamp(0.0, 1.0), false)
}

/// Runs `eval(None)` for the observed statistic and `eval(Some(w))` for
/// each drawn shift `w` of a length-`len` driver stream.
pub fn randomization_test_with<F>(len: usize, spec: &SurrogateSpec, eval: F) -> Result<SurrogateOutcome>
where
    F: Fn(Option<usize>) -> Result<f64> + Sync,
{
    let shifts = spec.draw_shifts(len)?;
    let statistic = eval(None)?;
    let values = shifts
        .par_iter()
        .map(|&w| eval(Some(w)))
        .collect::<Result<Vec<f64>>>()?;
    let (rank, p_value, degenerate) = surrogate_pvalue(statistic, &values);
    if degenerate {
        log::warn!("surrogate ensemble is constant at {statistic}; reporting p = 1");
    }
    Ok(SurrogateOutcome {
        statistic,
        values,
        shifts,
        rank,
        p_value,
        degenerate,
    })
}

/// Randomization test of `measure` on symbol streams, shifting the driver.
pub fn randomization_test<F>(measure: F, s: &RankSymbolSeries, spec: &SurrogateSpec) -> Result<SurrogateOutcome>
where
    F: Fn(&RankSymbolSeries) -> Result<f64> + Sync,
{
    randomization_test_with(s.len(), spec, |shift| match shift {
        None => measure(s),
        Some(w) => measure(&s.with_driver(time_shift_surrogate(&s.driver, w)?)),
    })
}
