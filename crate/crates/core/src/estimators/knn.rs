//! Nearest-neighbor estimate of conditional mutual information on
//! continuous delay vectors (TE/PTE).
//!
//! For every point the distance `eps` to its `k`-th neighbor in the joint
//! space (future, driver, conditioning) is found under the max norm; the
//! estimate is
//!
//! ```text
//! psi(k) - < psi(n_dc + 1) + psi(n_fc + 1) - psi(n_c + 1) >
//! ```
//!
//! where `n_dc`, `n_fc` and `n_c` count the other points strictly closer
//! than `eps` in the driver+conditioning, future+conditioning and
//! conditioning subspaces.

use crate::embedding::EmbeddingSpec;
use crate::error::{Error, Result};
use crate::estimators::kdtree::{NeighborIndex, PointSet};
use crate::series::{standardize, MultivariateSeries};

/// Neighbor count for the estimator; the metric is always the max norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct KnnSpec {
    pub k: usize,
    /// Points closer than this many time steps are not counted as neighbors.
    #[serde(default)]
    pub theiler: usize,
}

impl KnnSpec {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSpec("k must be >= 1".into()));
        }
        Ok(Self { k, theiler: 0 })
    }

    pub fn with_theiler(self, theiler: usize) -> Self {
        Self { theiler, ..self }
    }
}

impl Default for KnnSpec {
    fn default() -> Self {
        Self { k: 5, theiler: 0 }
    }
}

/// Digamma function for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma undefined at {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // asymptotic series in 1/x^2 (Bernoulli numbers)
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    Ok(acc + x.ln() - 0.5 * inv - tail)
}

/// `psi(1), psi(2), ..., psi(n)` by the recurrence `psi(j+1) = psi(j) + 1/j`.
fn digamma_table(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    // index 0 is unused
    out.push(f64::NAN);
    let mut v = -0.577_215_664_901_532_9_f64;
    for j in 1..=n {
        out.push(v);
        v += 1.0 / j as f64;
    }
    out
}

/// Estimates `I(future; driver | cond)` in nats. Values can be negative.
pub fn knn_cmi(future: &PointSet, driver: &PointSet, cond: &PointSet, spec: KnnSpec) -> Result<f64> {
    let n = future.len();
    if driver.len() != n || cond.len() != n {
        return Err(Error::InvalidValue(format!(
            "point sets differ in length ({n}, {}, {})",
            driver.len(),
            cond.len()
        )));
    }
    KnnCmiEvaluator::new(future.clone(), cond.clone(), spec)?.evaluate(driver)
}

/// Holds the fixed future and conditioning coordinates so the driver can be
/// swapped, as done for surrogates.
#[derive(Debug, Clone)]
pub struct KnnCmiEvaluator {
    future: PointSet,
    cond: PointSet,
    k: usize,
    theiler: usize,
    psi: Vec<f64>,
}

impl KnnCmiEvaluator {
    pub fn new(future: PointSet, cond: PointSet, spec: KnnSpec) -> Result<Self> {
        let n = future.len();
        if cond.len() != n {
            return Err(Error::InvalidValue("future and conditioning lengths differ".into()));
        }
        if spec.k == 0 || spec.k + 2 * spec.theiler >= n {
            return Err(Error::InvalidSpec(format!(
                "k={} with Theiler window {} needs more points (have {n})",
                spec.k, spec.theiler
            )));
        }
        Ok(Self {
            future,
            cond,
            k: spec.k,
            theiler: spec.theiler,
            psi: digamma_table(n + 1),
        })
    }

    pub fn len(&self) -> usize {
        self.future.len()
    }

    pub fn is_empty(&self) -> bool {
        self.future.is_empty()
    }

    pub fn evaluate(&self, driver: &PointSet) -> Result<f64> {
        let n = self.len();
        if driver.len() != n {
            return Err(Error::InvalidValue(format!(
                "driver has {} points, expected {n}",
                driver.len()
            )));
        }
        let joint = PointSet::hstack(&[&self.future, driver, &self.cond], n);
        let dc = PointSet::hstack(&[driver, &self.cond], n);
        let fc = PointSet::hstack(&[&self.future, &self.cond], n);

        let joint_idx = NeighborIndex::new(&joint, self.theiler);
        let dc_idx = NeighborIndex::new(&dc, self.theiler);
        let fc_idx = NeighborIndex::new(&fc, self.theiler);
        let c_idx = NeighborIndex::new(&self.cond, self.theiler);

        let mut acc = 0.0;
        for i in 0..n {
            let eps = joint_idx.kth_neighbor_distance(i, self.k);
            let n_dc = dc_idx.count_within(i, eps);
            let n_fc = fc_idx.count_within(i, eps);
            let n_c = c_idx.count_within(i, eps);
            acc += self.psi[n_dc + 1] + self.psi[n_fc + 1] - self.psi[n_c + 1];
        }
        Ok(self.psi[self.k] - acc / n as f64)
    }
}

/// Continuous delay-vector coordinates for `driver -> response | confounders`.
#[derive(Debug, Clone)]
pub struct DelayPoints {
    pub future: PointSet,
    pub driver: PointSet,
    pub cond: PointSet,
}

/// Builds future block `[y_{t+1..t+T}]`, driver `x_t` and conditioning
/// `[y_t, z_t]` for every usable `t`. Each column is standardized first.
pub fn delay_points(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    confounders: &[usize],
    spec: &EmbeddingSpec,
) -> Result<DelayPoints> {
    let k = data.num_vars();
    let mut cols = vec![driver, response];
    cols.extend_from_slice(confounders);
    for (i, &c) in cols.iter().enumerate() {
        if c >= k || cols[..i].contains(&c) {
            return Err(Error::InvalidSpec(format!("bad column {c} (K={k})")));
        }
    }
    let n = data.len();
    let len = spec.effective_len(n).ok_or_else(|| {
        Error::EmbeddingRange(format!(
            "series of length {n} too short; need at least {}",
            spec.min_series_len()
        ))
    })?;
    let t0 = spec.first_index();
    let y = standardize(data.column(response));
    let x = standardize(data.column(driver));
    let zs: Vec<Vec<f64>> = confounders.iter().map(|&c| standardize(data.column(c))).collect();

    let embed = |s: &[f64], out: &mut Vec<f64>, t: usize| {
        out.extend((0..spec.m).map(|j| s[t - j * spec.tau]));
    };
    let mut fut = Vec::with_capacity(len * spec.horizon);
    let mut drv = Vec::with_capacity(len * spec.m);
    let mut cond = Vec::with_capacity(len * spec.m * (1 + zs.len()));
    for t in t0..t0 + len {
        fut.extend_from_slice(&y[t + 1..=t + spec.horizon]);
        embed(&x, &mut drv, t);
        embed(&y, &mut cond, t);
        for z in &zs {
            embed(z, &mut cond, t);
        }
    }
    Ok(DelayPoints {
        future: PointSet::new(spec.horizon, fut),
        driver: PointSet::new(spec.m, drv),
        cond: PointSet::new(spec.m * (1 + zs.len()), cond),
    })
}

/// Partial transfer entropy by the nearest-neighbor estimate. With no
/// confounders this is the bivariate TE.
pub fn pte(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    confounders: &[usize],
    spec: &EmbeddingSpec,
    knn: KnnSpec,
) -> Result<f64> {
    let p = delay_points(data, driver, response, confounders, spec)?;
    knn_cmi(&p.future, &p.driver, &p.cond, knn)
}

/// Bivariate transfer entropy by the nearest-neighbor estimate.
pub fn te(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    spec: &EmbeddingSpec,
    knn: KnnSpec,
) -> Result<f64> {
    pte(data, driver, response, &[], spec, knn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn digamma_values() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -0.5772156649, epsilon = 1e-10);
        assert_abs_diff_eq!(digamma(2.0).unwrap(), 0.4227843351, epsilon = 1e-10);
        // mpmath.digamma(10)
        assert_abs_diff_eq!(digamma(10.0).unwrap(), 2.25175258906672, epsilon = 1e-10);
        // mpmath.digamma(0.1), mpmath.digamma(123.4)
        assert_abs_diff_eq!(digamma(0.1).unwrap(), -10.4237549404111, epsilon = 1e-10);
        assert_abs_diff_eq!(digamma(123.4).unwrap(), 4.81137377511628, epsilon = 1e-10);
        assert!(matches!(digamma(0.0), Err(Error::Domain(_))));
        assert!(digamma(-1.5).is_err());
    }

    #[test]
    fn digamma_table_matches_function() {
        let t = digamma_table(50);
        for (j, &v) in t.iter().enumerate().skip(1) {
            assert_abs_diff_eq!(v, digamma(j as f64).unwrap(), epsilon = 1e-12);
        }
    }

    fn gaussian(n: usize, dim: usize, rng: &mut rand_chacha::ChaCha8Rng) -> PointSet {
        PointSet::new(dim, (0..n * dim).map(|_| StandardNormal.sample(rng)).collect())
    }

    #[test]
    fn rejects_too_few_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a = gaussian(5, 1, &mut rng);
        assert!(matches!(knn_cmi(&a, &a, &a, KnnSpec::default()), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn strong_dependence_is_large() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let c = gaussian(800, 1, &mut rng);
        let d = gaussian(800, 1, &mut rng);
        let noise = gaussian(800, 1, &mut rng);
        let f = PointSet::new(
            1,
            (0..800).map(|i| d.point(i)[0] + 0.1 * noise.point(i)[0]).collect(),
        );
        let v = knn_cmi(&f, &d, &c, KnnSpec::default()).unwrap();
        // true value ln(sqrt(1 + 100)) ~= 2.31
        assert!(v > 1.8, "{v}");
    }

    #[test]
    fn duplicate_points_are_finite() {
        let f = PointSet::new(1, vec![1.0; 30]);
        let v = knn_cmi(&f, &f, &f, KnnSpec::default()).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn brute_and_tree_paths_agree() {
        // 300 points go through the tree, the 200-point prefix through brute force
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f = gaussian(300, 1, &mut rng);
        let d = gaussian(300, 2, &mut rng);
        let c = gaussian(300, 2, &mut rng);
        let ev = KnnCmiEvaluator::new(f.clone(), c.clone(), KnnSpec::default()).unwrap();
        let tree = ev.evaluate(&d).unwrap();

        let joint = PointSet::hstack(&[&f, &d, &c], 300);
        let dc = PointSet::hstack(&[&d, &c], 300);
        let fc = PointSet::hstack(&[&f, &c], 300);
        use crate::estimators::kdtree::{brute_count_within, brute_kth_distance};
        let mut acc = 0.0;
        for i in 0..300 {
            let eps = brute_kth_distance(&joint, i, 5);
            acc += digamma((brute_count_within(&dc, i, eps) + 1) as f64).unwrap()
                + digamma((brute_count_within(&fc, i, eps) + 1) as f64).unwrap()
                - digamma((brute_count_within(&c, i, eps) + 1) as f64).unwrap();
        }
        let brute = digamma(5.0).unwrap() - acc / 300.0;
        assert_abs_diff_eq!(tree, brute, epsilon = 1e-12);
    }
}
