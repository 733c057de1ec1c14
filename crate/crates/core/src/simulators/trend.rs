use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::series::{std_dev, MultivariateSeries};

/// Smoothed Gaussian random walk added to every channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendSpec {
    /// Step SD as a multiple of the channel SD.
    pub multiplier: f64,
    /// Moving-average window used to smooth the walk.
    pub order: usize,
}

impl Default for TrendSpec {
    fn default() -> Self {
        Self {
            multiplier: 1.0,
            order: 100,
        }
    }
}

/// Detrending applied before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Detrend {
    #[default]
    None,
    Polynomial {
        degree: usize,
    },
    MovingAverage {
        order: usize,
    },
}

impl Detrend {
    pub fn apply(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        match *self {
            Detrend::None => Ok(series.clone()),
            Detrend::Polynomial { degree } => detrend_polynomial(series, degree),
            Detrend::MovingAverage { order } => detrend_moving_average(series, order),
        }
    }
}

/// Centered moving average of width `order`. The half-width is
/// `order / 2` (so even widths use `order + 1` points) and shrinks
/// symmetrically near the ends, down to the sample itself at `t = 0` and
/// `t = N - 1`. `order = 0` returns the input.
pub fn moving_average(x: &[f64], order: usize) -> Vec<f64> {
    if order == 0 {
        return x.to_vec();
    }
    let n = x.len();
    let half = order / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..n)
        .map(|t| {
            let h = half.min(t).min(n - 1 - t);
            (prefix[t + h + 1] - prefix[t - h]) / (2 * h + 1) as f64
        })
        .collect()
}

/// Adds an independent smoothed random walk to each channel. Returns the
/// contaminated series and the trends that were added.
pub fn add_stochastic_trend(
    series: &MultivariateSeries,
    spec: &TrendSpec,
    seed: u64,
) -> Result<(MultivariateSeries, MultivariateSeries)> {
    if !(spec.multiplier >= 0.0) || !spec.multiplier.is_finite() {
        return Err(Error::InvalidSpec(format!("bad trend multiplier {}", spec.multiplier)));
    }
    let trends = series.map_columns(|j, col| {
        let sd = spec.multiplier * std_dev(col);
        let mut rng = stream_rng(seed, j as u64);
        let mut level = 0.0;
        let walk: Vec<f64> = (0..col.len())
            .map(|_| {
                level += sd * rng.sample::<f64, _>(StandardNormal);
                level
            })
            .collect();
        moving_average(&walk, spec.order)
    })?;
    let out = series.map_columns(|j, col| col.iter().zip(trends.column(j)).map(|(a, b)| a + b).collect())?;
    Ok((out, trends))
}

/// Legendre polynomials `P_0..P_degree` at `u`.
fn legendre_row(u: f64, degree: usize, row: &mut [f64]) {
    row[0] = 1.0;
    if degree >= 1 {
        row[1] = u;
    }
    for k in 2..=degree {
        let kf = k as f64;
        row[k] = ((2.0 * kf - 1.0) * u * row[k - 1] - (kf - 1.0) * row[k - 2]) / kf;
    }
}

/// Residuals of a least-squares polynomial fit of the given degree, with
/// time rescaled to `[-1, 1]` and a Legendre basis.
pub fn detrend_polynomial(series: &MultivariateSeries, degree: usize) -> Result<MultivariateSeries> {
    let n = series.len();
    if degree >= n {
        return Err(Error::InvalidSpec(format!("degree {degree} needs more than {n} samples")));
    }
    let mut design = DMatrix::zeros(n, degree + 1);
    let mut row = vec![0.0; degree + 1];
    for t in 0..n {
        let u = if n == 1 { 0.0 } else { 2.0 * t as f64 / (n - 1) as f64 - 1.0 };
        legendre_row(u, degree, &mut row);
        for (k, &v) in row.iter().enumerate() {
            design[(t, k)] = v;
        }
    }
    let svd = design.clone().svd(true, true);
    let mut failure = None;
    let out = series.map_columns(|_, col| {
        let b = DVector::from_column_slice(col);
        match svd.solve(&b, 1e-12) {
            Ok(coef) => (b - &design * coef).iter().copied().collect(),
            Err(e) => {
                failure = Some(e.to_string());
                col.to_vec()
            }
        }
    })?;
    match failure {
        Some(e) => Err(Error::Domain(format!("polynomial fit failed: {e}"))),
        None => Ok(out),
    }
}

/// Subtracts the centered moving average of width `order`; `order = 0`
/// leaves the series unchanged.
pub fn detrend_moving_average(series: &MultivariateSeries, order: usize) -> Result<MultivariateSeries> {
    if order == 0 {
        return Ok(series.clone());
    }
    if order >= series.len() {
        return Err(Error::InvalidSpec(format!(
            "moving-average order {order} needs more than {} samples",
            series.len()
        )));
    }
    series.map_columns(|_, col| {
        let trend = moving_average(col, order);
        col.iter().zip(&trend).map(|(a, b)| a - b).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::{gen_coupled_henon, HenonSpec};
    use proptest::prelude::*;

    fn henon() -> MultivariateSeries {
        gen_coupled_henon(&HenonSpec::new(3, 0.2, 1024), 1).unwrap().series
    }

    #[test]
    fn polynomial_input_is_removed() {
        let n = 1024;
        let poly = |t: usize, shift: f64| {
            let u = t as f64 / n as f64;
            3.0 - 2.0 * u + 5.0 * u.powi(3) - 4.0 * u.powi(7) + shift
        };
        let s = MultivariateSeries::from_columns(vec![
            (0..n).map(|t| poly(t, 0.0)).collect(),
            (0..n).map(|t| poly(t, 1.5)).collect(),
        ])
        .unwrap();
        for degree in [7, 10, 15] {
            let r = detrend_polynomial(&s, degree).unwrap();
            let worst = r.columns().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst < 1e-8, "degree {degree}: {worst}");
        }
        let r = detrend_polynomial(&s, 3).unwrap();
        assert!(r.column(0).iter().any(|v| v.abs() > 1e-6));
        assert!(detrend_polynomial(&s, n).is_err());
    }

    #[test]
    fn trend_subtraction_recovers_input() {
        let s = henon();
        let (with, trend) = add_stochastic_trend(&s, &TrendSpec::default(), 3).unwrap();
        for j in 0..s.num_vars() {
            for t in 0..s.len() {
                assert!((with.column(j)[t] - trend.column(j)[t] - s.column(j)[t]).abs() < 1e-12);
            }
            assert!(std_dev(with.column(j)) > std_dev(s.column(j)));
        }
    }

    #[test]
    fn zero_multiplier_is_identity() {
        let s = henon();
        let spec = TrendSpec {
            multiplier: 0.0,
            order: 100,
        };
        assert_eq!(add_stochastic_trend(&s, &spec, 3).unwrap().0, s);
    }

    #[test]
    fn moving_average_edges_shrink() {
        let x = [1.0, 2.0, 3.0, 10.0, 5.0];
        let m = moving_average(&x, 3);
        assert_eq!(m, vec![1.0, 2.0, 5.0, 6.0, 5.0]);
        assert_eq!(moving_average(&x, 0), x.to_vec());
        let s = henon();
        assert_eq!(detrend_moving_average(&s, 0).unwrap(), s);
        assert_eq!(Detrend::None.apply(&s).unwrap(), s);
    }

    proptest! {
        #[test]
        fn moving_average_preserves_constants(c in -5.0f64..5.0, n in 1usize..60, order in 0usize..80) {
            let m = moving_average(&vec![c; n], order);
            prop_assert!(m.iter().all(|v| (v - c).abs() < 1e-12));
        }
    }
}
