//! Delay embedding and rank-vector symbolization.
//!
//! Time indices are zero-based throughout: the first time at which a delay
//! vector exists is `(m - 1) * tau`.

use crate::error::{Error, Result};
use crate::series::MultivariateSeries;

/// Embedding dimension `m`, delay `tau` and future horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EmbeddingSpec {
    pub m: usize,
    pub tau: usize,
    pub horizon: usize,
}

impl EmbeddingSpec {
    pub fn new(m: usize, tau: usize, horizon: usize) -> Result<Self> {
        if m == 0 || tau == 0 || horizon == 0 {
            return Err(Error::InvalidSpec(format!(
                "m, tau and T must be >= 1 (got m={m}, tau={tau}, T={horizon})"
            )));
        }
        Ok(Self { m, tau, horizon })
    }

    /// Zero-based index of the first reconstructable delay vector.
    pub fn first_index(&self) -> usize {
        (self.m - 1) * self.tau
    }

    /// Number of usable time points `N - (m-1)tau - T`, if positive.
    pub fn effective_len(&self, n: usize) -> Option<usize> {
        n.checked_sub(self.first_index() + self.horizon)
            .filter(|&l| l > 0)
    }

    /// Smallest series length with at least one usable time point.
    pub fn min_series_len(&self) -> usize {
        self.first_index() + self.horizon + 1
    }

    fn validate_ste(&self) -> Result<()> {
        if self.horizon > self.m * self.tau {
            return Err(Error::InvalidSpec(format!(
                "STE needs T <= m*tau (T={}, m*tau={})",
                self.horizon,
                self.m * self.tau
            )));
        }
        Ok(())
    }
}

/// How the future of the response enters the symbol stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum FutureMode {
    /// Ranks of `y_{t+1..t+T}` inside the augmented vector `[y_t, y_t^T]`.
    Terv,
    /// Rank vector of the delay vector at `t + T`.
    Ste,
}

/// Ranks `1..=len` forming a permutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    /// Validates that `ranks` is a permutation of `1..=len`.
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let n = ranks.len();
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r == 0 || r > n || seen[r - 1] {
                return Err(Error::InvalidValue(format!(
                    "{ranks:?} is not a permutation of 1..={n}"
                )));
            }
            seen[r - 1] = true;
        }
        Ok(Self(ranks))
    }

    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A symbol with the size of the alphabet it was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymbolId {
    pub id: u64,
    pub cardinality: u64,
}

/// Delay vector `[s_t, s_{t-tau}, ..., s_{t-(m-1)tau}]`.
pub fn delay_embed(series: &[f64], spec: &EmbeddingSpec, t: usize) -> Result<Vec<f64>> {
    if t < spec.first_index() || t >= series.len() {
        return Err(Error::EmbeddingRange(format!(
            "t={t} outside [{}, {})",
            spec.first_index(),
            series.len()
        )));
    }
    Ok((0..spec.m).map(|j| series[t - j * spec.tau]).collect())
}

/// Ascending ranks; among equal values the one appearing first gets the
/// smaller rank.
pub fn rank_encode(v: &[f64]) -> Result<RankVector> {
    if v.is_empty() {
        return Err(Error::EmptyInput("cannot rank an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidValue(format!("non-finite entry in {v:?}")));
    }
    Ok(RankVector(ranks_unchecked(v)))
}

fn ranks_unchecked(v: &[f64]) -> Vec<usize> {
    (0..v.len())
        .map(|j| {
            1 + v
                .iter()
                .enumerate()
                .filter(|&(i, &x)| x < v[j] || (x == v[j] && i < j))
                .count()
        })
        .collect()
}

/// Lehmer-code index of a permutation; the identity maps to 0.
pub fn permutation_index(r: &RankVector) -> SymbolId {
    SymbolId {
        id: lehmer(r.ranks()),
        cardinality: factorial(r.len() as u64).unwrap_or(u64::MAX),
    }
}

/// Inverse of [`permutation_index`].
pub fn permutation_from_index(mut id: u64, len: usize) -> Result<RankVector> {
    let card = factorial(len as u64)
        .ok_or_else(|| Error::InvalidSpec(format!("{len}! overflows u64")))?;
    if id >= card {
        return Err(Error::InvalidValue(format!("index {id} >= {len}!")));
    }
    let mut pool: Vec<usize> = (1..=len).collect();
    let mut out = Vec::with_capacity(len);
    for pos in 0..len {
        let f = factorial((len - 1 - pos) as u64).unwrap();
        let digit = (id / f) as usize;
        id %= f;
        out.push(pool.remove(digit));
    }
    Ok(RankVector(out))
}

fn lehmer(ranks: &[usize]) -> u64 {
    let n = ranks.len();
    let mut id = 0u64;
    for j in 0..n {
        let smaller_after = ranks[j + 1..].iter().filter(|&&r| r < ranks[j]).count() as u64;
        id = id * (n - j) as u64 + smaller_after;
    }
    id
}

/// `n!`, or `None` on overflow.
pub fn factorial(n: u64) -> Option<u64> {
    (1..=n).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

/// Number of future-response rank tuples, `prod_{i=1}^{T} (m+i)`.
pub fn future_cardinality(m: usize, horizon: usize) -> Option<u64> {
    (1..=horizon).try_fold(1u64, |acc, i| acc.checked_mul((m + i) as u64))
}

/// Ranks of `y_{t+1..t+T}` within the augmented vector `[y_t, y_t^T]`,
/// encoded in mixed radix.
pub fn future_response_ranks(series: &[f64], spec: &EmbeddingSpec, t: usize) -> Result<SymbolId> {
    if t + spec.horizon >= series.len() {
        return Err(Error::EmbeddingRange(format!(
            "t={t} with horizon {} runs past the end ({} samples)",
            spec.horizon,
            series.len()
        )));
    }
    let mut aug = delay_embed(series, spec, t)?;
    aug.extend_from_slice(&series[t + 1..=t + spec.horizon]);
    if aug.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidValue("non-finite sample".into()));
    }
    let cardinality = future_cardinality(spec.m, spec.horizon)
        .ok_or_else(|| Error::InvalidSpec("future cardinality overflows".into()))?;
    Ok(SymbolId {
        id: encode_future(&ranks_unchecked(&aug), spec.m),
        cardinality,
    })
}

/// Mixed-radix code of the last `T` ranks of an `(m+T)`-permutation. Digit
/// `i` counts the ranks below `r_{m+i}` not already used by earlier future
/// components, so it ranges over `m+T-i+1` values.
fn encode_future(ranks: &[usize], m: usize) -> u64 {
    let future = &ranks[m..];
    let total = ranks.len();
    let mut id = 0u64;
    for (i, &r) in future.iter().enumerate() {
        let used_below = future[..i].iter().filter(|&&q| q < r).count();
        let digit = (r - 1 - used_below) as u64;
        id = id * (total - i) as u64 + digit;
    }
    id
}

/// Permutation symbol of the delay vector at `t + T`.
pub fn ste_shifted_symbol(series: &[f64], spec: &EmbeddingSpec, t: usize) -> Result<SymbolId> {
    let v = delay_embed(series, spec, t + spec.horizon)?;
    Ok(permutation_index(&rank_encode(&v)?))
}

/// Permutation symbols of a single series at times `first..first+len`.
fn permutation_stream(series: &[f64], spec: &EmbeddingSpec, first: usize, len: usize) -> Vec<u64> {
    let mut buf = vec![0.0; spec.m];
    (first..first + len)
        .map(|t| {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = series[t - j * spec.tau];
            }
            lehmer(&ranks_unchecked(&buf))
        })
        .collect()
}

fn future_stream(series: &[f64], spec: &EmbeddingSpec, first: usize, len: usize) -> Vec<u64> {
    let mut buf = vec![0.0; spec.m + spec.horizon];
    (first..first + len)
        .map(|t| {
            for j in 0..spec.m {
                buf[j] = series[t - j * spec.tau];
            }
            buf[spec.m..].copy_from_slice(&series[t + 1..=t + spec.horizon]);
            encode_future(&ranks_unchecked(&buf), spec.m)
        })
        .collect()
}

/// Symbol streams for one (driver, response, confounders) configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankSymbolSeries {
    /// Zero-based time index of the first symbol.
    pub t0: usize,
    pub future: Vec<u64>,
    pub driver: Vec<u64>,
    pub response: Vec<u64>,
    /// Joint confounder symbol; `None` without confounders.
    pub confounders: Option<Vec<u64>>,
    /// Alphabet sizes `(B1, B2, B3, B4)`; `B4 = 1` without confounders.
    pub cardinalities: [u64; 4],
    pub mode: FutureMode,
}

impl RankSymbolSeries {
    pub fn len(&self) -> usize {
        self.future.len()
    }

    pub fn is_empty(&self) -> bool {
        self.future.is_empty()
    }

    /// Confounder symbol at `i`, 0 when there are none.
    #[inline]
    pub fn confounder_at(&self, i: usize) -> u64 {
        self.confounders.as_ref().map_or(0, |z| z[i])
    }

    /// Copy with the driver stream replaced.
    pub fn with_driver(&self, driver: Vec<u64>) -> Self {
        assert_eq!(driver.len(), self.len());
        Self {
            driver,
            ..self.clone()
        }
    }
}

/// Builds the four symbol streams for `driver -> response` given
/// `confounders`.
pub fn build_symbol_series(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    confounders: &[usize],
    spec: &EmbeddingSpec,
    mode: FutureMode,
) -> Result<RankSymbolSeries> {
    let k = data.num_vars();
    let mut cols: Vec<usize> = vec![driver, response];
    cols.extend_from_slice(confounders);
    for (i, &c) in cols.iter().enumerate() {
        if c >= k {
            return Err(Error::InvalidSpec(format!("column {c} out of range (K={k})")));
        }
        if cols[..i].contains(&c) {
            return Err(Error::InvalidSpec(format!("column {c} used twice")));
        }
    }
    if mode == FutureMode::Ste {
        spec.validate_ste()?;
    }
    let n = data.len();
    let len = spec.effective_len(n).ok_or_else(|| {
        Error::EmbeddingRange(format!(
            "series of length {n} too short; need at least {}",
            spec.min_series_len()
        ))
    })?;

    let perm_card = factorial(spec.m as u64)
        .ok_or_else(|| Error::InvalidSpec(format!("{}! overflows", spec.m)))?;
    let b1 = match mode {
        FutureMode::Terv => future_cardinality(spec.m, spec.horizon)
            .ok_or_else(|| Error::InvalidSpec("future cardinality overflows".into()))?,
        FutureMode::Ste => perm_card,
    };
    let b4 = (0..confounders.len()).try_fold(1u64, |acc, _| acc.checked_mul(perm_card));
    let total = b4.and_then(|b4| {
        b1.checked_mul(perm_card)
            .and_then(|v| v.checked_mul(perm_card))
            .and_then(|v| v.checked_mul(b4))
    });
    let (Some(b4), Some(_)) = (b4, total) else {
        return Err(Error::InvalidSpec(format!(
            "joint cardinality overflows 64 bits (m={}, K-2={})",
            spec.m,
            confounders.len()
        )));
    };

    let t0 = spec.first_index();
    let yc = data.column(response);
    let future = match mode {
        FutureMode::Terv => future_stream(yc, spec, t0, len),
        FutureMode::Ste => permutation_stream(yc, spec, t0 + spec.horizon, len),
    };
    let driver_syms = permutation_stream(data.column(driver), spec, t0, len);
    let response_syms = permutation_stream(yc, spec, t0, len);
    let confounder_syms = if confounders.is_empty() {
        None
    } else {
        let mut joint = vec![0u64; len];
        for &c in confounders {
            let s = permutation_stream(data.column(c), spec, t0, len);
            for (z, v) in joint.iter_mut().zip(s) {
                *z = *z * perm_card + v;
            }
        }
        Some(joint)
    };

    Ok(RankSymbolSeries {
        t0,
        future,
        driver: driver_syms,
        response: response_syms,
        confounders: confounder_syms,
        cardinalities: [b1, perm_card, perm_card, b4],
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(m: usize, tau: usize, h: usize) -> EmbeddingSpec {
        EmbeddingSpec::new(m, tau, h).unwrap()
    }

    #[test]
    fn delay_embed_examples() {
        // one-based t=2 and t=5 in the usual notation
        assert_eq!(delay_embed(&[1., 2., 3., 4.], &spec(2, 1, 1), 1).unwrap(), vec![2., 1.]);
        assert_eq!(
            delay_embed(&[1., 2., 3., 4., 5.], &spec(3, 2, 1), 4).unwrap(),
            vec![5., 3., 1.]
        );
        assert_eq!(delay_embed(&[1., 2., 3.], &spec(1, 1, 1), 2).unwrap(), vec![3.]);
    }

    #[test]
    fn delay_embed_out_of_range() {
        assert!(matches!(
            delay_embed(&[1., 2., 3.], &spec(3, 1, 1), 1),
            Err(Error::EmbeddingRange(_))
        ));
        assert!(delay_embed(&[1., 2., 3.], &spec(2, 1, 1), 3).is_err());
    }

    #[test]
    fn rank_encode_examples() {
        assert_eq!(rank_encode(&[0.5, -1.2, 3.3]).unwrap().ranks(), &[2, 1, 3]);
        assert_eq!(rank_encode(&[1.0, 1.0, 0.2]).unwrap().ranks(), &[2, 3, 1]);
        assert_eq!(rank_encode(&[7.7]).unwrap().ranks(), &[1]);
        assert!(matches!(rank_encode(&[1.0, f64::NAN]), Err(Error::InvalidValue(_))));
    }

    #[test]
    fn permutation_index_examples() {
        let idx = |r: Vec<usize>| permutation_index(&RankVector::new(r).unwrap());
        assert_eq!(idx(vec![1, 2, 3]), SymbolId { id: 0, cardinality: 6 });
        assert_eq!(idx(vec![3, 2, 1]).id, 5);
        assert_eq!(idx(vec![2, 1]).id, 1);
        assert!(RankVector::new(vec![1, 1, 2]).is_err());
        assert!(RankVector::new(vec![0, 1]).is_err());
    }

    /// Lexicographic enumeration of permutations, independent of the Lehmer
    /// code.
    fn all_perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 1..=n {
            for rest in all_perms(n - 1) {
                let mut p = vec![first];
                p.extend(rest.into_iter().map(|r| if r >= first { r + 1 } else { r }));
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn permutation_index_is_bijective_up_to_six() {
        for n in 1..=6 {
            for (expected, p) in all_perms(n).into_iter().enumerate() {
                let rv = RankVector::new(p.clone()).unwrap();
                let sym = permutation_index(&rv);
                assert_eq!(sym.id, expected as u64, "{p:?}");
                assert_eq!(permutation_from_index(sym.id, n).unwrap(), rv);
            }
        }
    }

    #[test]
    fn future_ranks_examples() {
        let s = spec(2, 1, 1);
        // (y_{t-1}, y_t, y_{t+1}) = (0.1, 0.5, 0.3): y_{t+1} has rank 2 of 3
        let sym = future_response_ranks(&[0.1, 0.5, 0.3], &s, 1).unwrap();
        assert_eq!(sym, SymbolId { id: 1, cardinality: 3 });
        let top = future_response_ranks(&[0.1, 0.5, 0.9], &s, 1).unwrap();
        assert_eq!(top.id, top.cardinality - 1);
        assert_eq!(future_cardinality(2, 2), Some(12));
        assert!(matches!(
            future_response_ranks(&[0.1, 0.5, 0.9], &s, 2),
            Err(Error::EmbeddingRange(_))
        ));
    }

    #[test]
    fn future_code_is_bijective_over_tuples() {
        // every ordered tuple of T distinct ranks from 1..=m+T appears exactly once
        for (m, h) in [(2, 1), (2, 2), (3, 2), (3, 3)] {
            let card = future_cardinality(m, h).unwrap() as usize;
            let mut hit = vec![0usize; card];
            let mut tuples = std::collections::HashSet::new();
            for p in all_perms(m + h) {
                let id = encode_future(&p, m) as usize;
                if tuples.insert(p[m..].to_vec()) {
                    hit[id] += 1;
                }
            }
            assert!(hit.iter().all(|&c| c == 1), "m={m} T={h}");
        }
    }

    #[test]
    fn ste_symbol_examples() {
        let s = spec(2, 1, 1);
        // ranks of (y_{t+1}, y_t)
        let sym = ste_shifted_symbol(&[0.0, 2.0, 1.0], &s, 1).unwrap();
        assert_eq!(sym, SymbolId { id: 0, cardinality: 2 });
        let sym = ste_shifted_symbol(&[0.0, 1.0, 2.0], &s, 1).unwrap();
        assert_eq!(sym, SymbolId { id: 1, cardinality: 2 });
        let inc: Vec<f64> = (0..10).map(f64::from).collect();
        let s3 = spec(3, 1, 1);
        for t in 2..9 {
            let sym = ste_shifted_symbol(&inc, &s3, t).unwrap();
            // delay vector is decreasing in position: ranks [3,2,1]
            assert_eq!(sym, SymbolId { id: 5, cardinality: 6 });
        }
    }

    #[test]
    fn cardinality_inequality() {
        for m in 2..=6u64 {
            for h in 1..m {
                let lhs = factorial(m + h).unwrap();
                let fm = factorial(m).unwrap();
                let rhs = fm * (fm / factorial(m - h).unwrap());
                assert!(lhs > rhs, "m={m} T={h}");
            }
        }
    }

    fn data(cols: Vec<Vec<f64>>) -> MultivariateSeries {
        MultivariateSeries::from_columns(cols).unwrap()
    }

    #[test]
    fn symbol_series_lengths_and_cards() {
        let n = 6;
        let d = data(vec![
            vec![0.3, 0.1, 0.4, 0.1, 0.5, 0.9],
            vec![0.2, 0.6, 0.5, 0.3, 0.5, 0.8],
        ]);
        let s = build_symbol_series(&d, 0, 1, &[], &spec(2, 1, 1), FutureMode::Terv).unwrap();
        assert_eq!(s.len(), n - 1 - 1);
        assert!(s.confounders.is_none());
        assert_eq!(s.cardinalities, [3, 2, 2, 1]);

        let cols: Vec<Vec<f64>> = (0..4)
            .map(|j| (0..20).map(|t| ((t * (j + 3)) as f64).sin()).collect())
            .collect();
        let d4 = data(cols);
        let s = build_symbol_series(&d4, 0, 1, &[2, 3], &spec(2, 1, 1), FutureMode::Terv).unwrap();
        assert_eq!(s.cardinalities[3], 4);
        assert!(s.confounders.unwrap().iter().all(|&z| z < 4));
    }

    #[test]
    fn symbol_series_errors() {
        let d = data(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0]]);
        assert!(matches!(
            build_symbol_series(&d, 0, 1, &[], &spec(3, 1, 1), FutureMode::Terv),
            Err(Error::EmbeddingRange(_))
        ));
        assert!(build_symbol_series(&d, 0, 0, &[], &spec(1, 1, 1), FutureMode::Terv).is_err());
        assert!(build_symbol_series(&d, 0, 1, &[], &spec(1, 1, 2), FutureMode::Ste).is_err());
    }

    #[test]
    fn streams_match_pointwise_definitions() {
        let x: Vec<f64> = (0..40).map(|t| ((t * 7 % 13) as f64).cos()).collect();
        let y: Vec<f64> = (0..40).map(|t| ((t * 5 % 11) as f64).sin()).collect();
        let d = data(vec![x.clone(), y.clone()]);
        let sp = spec(3, 2, 2);
        let terv = build_symbol_series(&d, 0, 1, &[], &sp, FutureMode::Terv).unwrap();
        let ste = build_symbol_series(&d, 0, 1, &[], &sp, FutureMode::Ste).unwrap();
        for i in 0..terv.len() {
            let t = terv.t0 + i;
            assert_eq!(terv.future[i], future_response_ranks(&y, &sp, t).unwrap().id);
            assert_eq!(ste.future[i], ste_shifted_symbol(&y, &sp, t).unwrap().id);
            let xr = rank_encode(&delay_embed(&x, &sp, t).unwrap()).unwrap();
            assert_eq!(terv.driver[i], permutation_index(&xr).id);
        }
    }

    #[test]
    fn overflow_rejected() {
        let cols: Vec<Vec<f64>> = (0..6).map(|j| (0..100).map(|t| (t + j) as f64).collect()).collect();
        let d = data(cols);
        let big = spec(12, 1, 1);
        assert!(matches!(
            build_symbol_series(&d, 0, 1, &[2, 3, 4, 5], &big, FutureMode::Terv),
            Err(Error::InvalidSpec(_))
        ));
    }

    proptest! {
        #[test]
        fn monotone_transform_keeps_symbols(
            raw in proptest::collection::vec(-5.0f64..5.0, 3 * 30),
            m in 1usize..4, tau in 1usize..3, h in 1usize..3,
        ) {
            let cols: Vec<Vec<f64>> = raw.chunks(30).map(|c| c.to_vec()).collect();
            let d = data(cols.clone());
            let g = data(cols.iter().map(|c| c.iter().map(|v| v.exp() * 3.0 - 1.0).collect()).collect());
            let sp = spec(m, tau, h);
            for mode in [FutureMode::Terv, FutureMode::Ste] {
                if mode == FutureMode::Ste && h > m * tau { continue; }
                let a = build_symbol_series(&d, 0, 1, &[2], &sp, mode).unwrap();
                let b = build_symbol_series(&g, 0, 1, &[2], &sp, mode).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn ties_follow_first_appearance(v in proptest::collection::vec(0u8..3, 1..8)) {
            let x: Vec<f64> = v.iter().map(|&b| f64::from(b)).collect();
            let r = rank_encode(&x).unwrap();
            prop_assert!(RankVector::new(r.ranks().to_vec()).is_ok());
            for i in 0..x.len() {
                for j in i + 1..x.len() {
                    if x[i] == x[j] {
                        prop_assert!(r.ranks()[i] < r.ranks()[j]);
                    }
                }
            }
            prop_assert_eq!(rank_encode(&x).unwrap(), r);
        }
    }
}
