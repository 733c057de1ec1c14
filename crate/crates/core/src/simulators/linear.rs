use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Edge, GeneratedData};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::series::MultivariateSeries;

/// `x_t = a z_t + e_x`, `y_t = b z_t + c x_{t-1} + e_y`, `z_t = d z_{t-1} + e_z`
/// with Gaussian noise of standard deviations `noise_sd = (sd_x, sd_y, sd_z)`.
/// Columns are `X, Y, Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystemSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub n: usize,
    #[serde(default = "default_noise")]
    pub noise_sd: [f64; 3],
    #[serde(default = "default_transient")]
    pub transient: usize,
}

fn default_noise() -> [f64; 3] {
    [1.0, 2.0, 1.0]
}

fn default_transient() -> usize {
    100
}

impl LinearSystemSpec {
    pub fn new(a: f64, b: f64, c: f64, d: f64, n: usize) -> Self {
        Self {
            a,
            b,
            c,
            d,
            n,
            noise_sd: default_noise(),
            transient: default_transient(),
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut e = Vec::new();
        if self.c != 0.0 {
            e.push(Edge { source: 0, target: 1 });
        }
        if self.a != 0.0 {
            e.push(Edge { source: 2, target: 0 });
        }
        if self.b != 0.0 {
            e.push(Edge { source: 2, target: 1 });
        }
        e.sort();
        e
    }
}

impl Default for LinearSystemSpec {
    fn default() -> Self {
        Self::new(2.0, -1.0, 1.0, 0.8, 1024)
    }
}

pub fn gen_linear_system(spec: &LinearSystemSpec, seed: u64) -> Result<GeneratedData> {
    if !(spec.d.abs() < 1.0) {
        return Err(Error::InvalidSpec(format!("need |d| < 1 for stationarity, got {}", spec.d)));
    }
    if spec.n == 0 {
        return Err(Error::InvalidSpec("n must be positive".into()));
    }
    if spec.noise_sd.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidSpec(format!("bad noise SDs {:?}", spec.noise_sd)));
    }
    let mut rng = stream_rng(seed, 0);
    let mut noise = |sd: f64| sd * rng.sample::<f64, _>(StandardNormal);
    let [sx, sy, sz] = spec.noise_sd;
    let total = spec.transient + spec.n;
    let mut x = Vec::with_capacity(total);
    let mut y = Vec::with_capacity(total);
    let mut z = Vec::with_capacity(total);
    let (mut z_prev, mut x_prev) = (0.0, 0.0);
    for _ in 0..total {
        let zt = spec.d * z_prev + noise(sz);
        let xt = spec.a * zt + noise(sx);
        let yt = spec.b * zt + spec.c * x_prev + noise(sy);
        x.push(xt);
        y.push(yt);
        z.push(zt);
        z_prev = zt;
        x_prev = xt;
    }
    let cut = spec.transient;
    let series = MultivariateSeries::new(
        vec![x.split_off(cut), y.split_off(cut), z.split_off(cut)],
        vec!["X".into(), "Y".into(), "Z".into()],
    )?;
    Ok(GeneratedData {
        series,
        edges: spec.edges(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variance(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    }

    #[test]
    fn driver_variance_matches_ar1() {
        let d = gen_linear_system(&LinearSystemSpec::new(2.0, -1.0, 0.0, 0.8, 10_000), 5).unwrap();
        let v = variance(d.series.column(2));
        let exact = 1.0 / (1.0 - 0.64);
        assert!((v - exact).abs() / exact < 0.10, "{v} vs {exact}");
    }

    #[test]
    fn residuals_recover_noise() {
        let s = LinearSystemSpec::new(0.0, -1.0, 1.0, 0.8, 5000);
        let d = gen_linear_system(&s, 8).unwrap();
        let (x, y, z) = (d.series.column(0), d.series.column(1), d.series.column(2));
        let ey: Vec<f64> = (1..x.len()).map(|t| y[t] + z[t] - x[t - 1]).collect();
        assert!((variance(&ey) - 4.0).abs() < 0.4);
        assert!((variance(x) - 1.0).abs() < 0.1);
    }

    #[test]
    fn graph_follows_coefficients() {
        let e = LinearSystemSpec::new(0.0, -1.0, 0.0, 0.8, 10).edges();
        assert_eq!(e, vec![Edge { source: 2, target: 1 }]);
        assert_eq!(LinearSystemSpec::default().edges().len(), 3);
    }

    #[test]
    fn rejects_unit_root_and_repeats() {
        assert!(gen_linear_system(&LinearSystemSpec::new(2.0, -1.0, 1.0, 1.0, 10), 0).is_err());
        let s = LinearSystemSpec::default();
        assert_eq!(gen_linear_system(&s, 2).unwrap(), gen_linear_system(&s, 2).unwrap());
    }
}
