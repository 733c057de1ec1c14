use rand_distr::{Distribution, StandardNormal};

use rankte::embedding::build_symbol_series;
use rankte::estimators::{cmi_plugin, JointCountTable};
use rankte::inference::randomization_test;
use rankte::rng::stream_rng;
use rankte::{EmbeddingSpec, FutureMode, MultivariateSeries, SurrogateSpec};

fn noise(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

// Under independence the rank of the observed statistic among M surrogates
// is uniform on 1..=M+1.
#[test]
fn observed_rank_is_uniform_under_the_null() {
    let runs = 1000;
    let m = 9;
    let spec = EmbeddingSpec::new(2, 1, 1).unwrap();
    let mut bins = vec![0usize; m + 1];
    for run in 0..runs {
        let data = MultivariateSeries::from_columns(vec![noise(300, run, 0), noise(300, run, 1)]).unwrap();
        let s = build_symbol_series(&data, 0, 1, &[], &spec, FutureMode::Terv).unwrap();
        let sur = SurrogateSpec::new(m, run ^ 0xABCD).unwrap();
        let out = randomization_test(
            |s| Ok(cmi_plugin(&JointCountTable::from_symbols(s)?)),
            &s,
            &sur,
        )
        .unwrap();
        bins[out.rank - 1] += 1;
    }
    let expected = runs as f64 / (m + 1) as f64;
    let chi2: f64 = bins.iter().map(|&b| (b as f64 - expected).powi(2) / expected).sum();
    // 0.999 quantile of chi-square with 9 degrees of freedom
    assert!(chi2 < 27.88, "chi2 = {chi2}, bins = {bins:?}");
}
