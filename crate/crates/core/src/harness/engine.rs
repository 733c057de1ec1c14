//! All-pairs analysis, Monte Carlo rejection counts and parameter sweeps.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig, Measure, SweepAxis, TestKind};
use crate::embedding::{build_symbol_series, FutureMode};
use crate::error::{Error, Result};
use crate::estimators::{cmi_plugin, delay_points, JointCountTable, KnnCmiEvaluator};
use crate::inference::{
    cmi_bias_variance, fdr_correct, gamma1_null, gamma2_null, gaussian_null, parametric_pvalue, randomization_test,
    randomization_test_with, NullModel, TestResult,
};
use crate::rng::split_seed;
use crate::series::MultivariateSeries;
use crate::simulators::{add_stochastic_trend, Detrend, GeneratedData};

/// Which version of a realization's data was analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// The data after any detrending; the only stage without trends.
    Analyzed,
    /// Trend-contaminated data before detrending.
    Drift,
}

/// Result of one measure on one ordered pair, with its FDR decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAnalysis {
    pub pair: String,
    pub driver: usize,
    pub response: usize,
    pub measure: Measure,
    #[serde(flatten)]
    pub result: TestResult,
    /// Rejection under FDR, per test run.
    pub fdr: BTreeMap<TestKind, bool>,
}

impl PairAnalysis {
    pub fn p_value(&self, test: TestKind) -> Option<f64> {
        match test {
            TestKind::Surrogate => self.result.p_surrogate,
            TestKind::Gaussian => self.result.p_gaussian,
            TestKind::Gamma1 => self.result.p_gamma1,
            TestKind::Gamma2 => self.result.p_gamma2,
        }
    }
}

/// One line of the per-realization record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub realization: usize,
    pub stage: Stage,
    #[serde(flatten)]
    pub analysis: PairAnalysis,
}

/// Ordered pairs in table order: `1->2, 2->1, 1->3, 3->1, ...`.
pub fn ordered_pairs(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(k * k.saturating_sub(1));
    for j in 1..k {
        for i in 0..j {
            out.push((i, j));
            out.push((j, i));
        }
    }
    out
}

fn pair_rank(driver: usize, response: usize) -> (usize, usize, bool) {
    (driver.max(response), driver.min(response), driver > response)
}

fn pair_label(data: &MultivariateSeries, driver: usize, response: usize) -> String {
    format!("{}->{}", data.labels()[driver], data.labels()[response])
}

/// Seed of the surrogate stream for one (pair, measure); independent of the
/// order in which pairs are evaluated.
fn pair_seed(seed: u64, driver: usize, response: usize, measure: Measure) -> u64 {
    split_seed(split_seed(seed, driver as u64), (response as u64) << 2 | measure.index())
}

fn pvalue_of(
    model: Result<NullModel>,
    statistic: f64,
    name: &str,
    unavailable: &mut Vec<String>,
) -> Result<Option<f64>> {
    match model {
        Ok(m) => Ok(Some(parametric_pvalue(&m, statistic))),
        Err(Error::ModelUnavailable(why)) => {
            log::debug!("{name}: {why}");
            unavailable.push(name.to_string());
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn symbolic_result(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    confounders: &[usize],
    cfg: &ExperimentConfig,
    mode: FutureMode,
    seed: u64,
) -> Result<TestResult> {
    let s = build_symbol_series(data, driver, response, confounders, &cfg.embedding, mode)?;
    let tbl = JointCountTable::from_symbols(&s)?;
    let statistic = cmi_plugin(&tbl);
    let mut out = TestResult {
        statistic,
        seed,
        ..TestResult::default()
    };
    if cfg.tests.contains(&TestKind::Surrogate) {
        let sur = randomization_test(
            |s| Ok(cmi_plugin(&JointCountTable::from_symbols(s)?)),
            &s,
            &cfg.surrogate_spec(seed),
        )?;
        out.p_surrogate = Some(sur.p_value);
        out.r0 = Some(sur.rank);
        out.surrogates = sur.values.len();
        out.degenerate = sur.degenerate;
    }
    let parametric = [TestKind::Gaussian, TestKind::Gamma2].iter().any(|t| cfg.tests.contains(t));
    let bv = parametric.then(|| cmi_bias_variance(&tbl));
    let mut unavailable = Vec::new();
    for test in &cfg.tests {
        match test {
            TestKind::Surrogate => {}
            TestKind::Gaussian => {
                out.p_gaussian = pvalue_of(gaussian_null(bv.unwrap()), statistic, "gaussian", &mut unavailable)?
            }
            TestKind::Gamma1 => out.p_gamma1 = pvalue_of(gamma1_null(&tbl), statistic, "gamma1", &mut unavailable)?,
            TestKind::Gamma2 => {
                out.p_gamma2 = pvalue_of(gamma2_null(bv.unwrap()), statistic, "gamma2", &mut unavailable)?
            }
        }
    }
    out.unavailable = unavailable;
    Ok(out)
}

fn knn_result(
    data: &MultivariateSeries,
    driver: usize,
    response: usize,
    confounders: &[usize],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TestResult> {
    let p = delay_points(data, driver, response, confounders, &cfg.embedding)?;
    let len = p.driver.len();
    let eval = KnnCmiEvaluator::new(p.future, p.cond, cfg.knn)?;
    let mut out = TestResult {
        seed,
        ..TestResult::default()
    };
    if cfg.tests.contains(&TestKind::Surrogate) {
        let driver_pts = &p.driver;
        let sur = randomization_test_with(len, &cfg.surrogate_spec(seed), |shift| match shift {
            None => eval.evaluate(driver_pts),
            Some(w) => eval.evaluate(&driver_pts.rotated(w)),
        })?;
        out.statistic = sur.statistic;
        out.p_surrogate = Some(sur.p_value);
        out.r0 = Some(sur.rank);
        out.surrogates = sur.values.len();
        out.degenerate = sur.degenerate;
    } else {
        out.statistic = eval.evaluate(&p.driver)?;
    }
    Ok(out)
}

/// Analyzes every requested ordered pair, conditioning on all remaining
/// variables, then applies FDR per (measure, test) across the pairs.
/// Unavailable p-values enter the FDR family as 1.
pub fn analyze_all_pairs(data: &MultivariateSeries, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<PairAnalysis>> {
    let k = data.num_vars();
    let pairs = match &cfg.pairs {
        Some(p) => p.clone(),
        None => ordered_pairs(k),
    };
    for &(a, b) in &pairs {
        if a >= k || b >= k {
            return Err(Error::Config(format!(
                "pair {}>{} refers to a variable beyond K = {k}",
                a + 1,
                b + 1
            )));
        }
    }
    let min_len = cfg.embedding.min_series_len() + 1;
    if data.len() < min_len {
        return Err(Error::Config(format!(
            "series of length {} is too short for m={}, tau={}, T={}; need N >= {min_len}",
            data.len(),
            cfg.embedding.m,
            cfg.embedding.tau,
            cfg.embedding.horizon
        )));
    }

    let mut results = Vec::with_capacity(pairs.len() * cfg.measures.len());
    for &(driver, response) in &pairs {
        let confounders: Vec<usize> = (0..k).filter(|&v| v != driver && v != response).collect();
        for &measure in &cfg.measures {
            let s = pair_seed(seed, driver, response, measure);
            let result = match measure {
                Measure::Pterv => symbolic_result(data, driver, response, &confounders, cfg, FutureMode::Terv, s)?,
                Measure::Pste => symbolic_result(data, driver, response, &confounders, cfg, FutureMode::Ste, s)?,
                Measure::Pte => knn_result(data, driver, response, &confounders, cfg, s)?,
            };
            results.push(PairAnalysis {
                pair: pair_label(data, driver, response),
                driver,
                response,
                measure,
                result,
                fdr: BTreeMap::new(),
            });
        }
    }
    apply_fdr(&mut results, cfg);
    Ok(results)
}

/// Recomputes the FDR decisions of one realization from its p-values.
pub fn apply_fdr(results: &mut [PairAnalysis], cfg: &ExperimentConfig) {
    for &measure in &cfg.measures {
        for &test in &cfg.tests {
            if !measure.supports(test) {
                continue;
            }
            let idx: Vec<usize> = (0..results.len()).filter(|&i| results[i].measure == measure).collect();
            let pvals: Vec<f64> = idx.iter().map(|&i| results[i].p_value(test).unwrap_or(1.0)).collect();
            for (&i, rej) in idx.iter().zip(fdr_correct(&pvals, cfg.fdr)) {
                results[i].fdr.insert(test, rej);
            }
        }
    }
}

/// Seed of realization `r`.
pub fn realization_seed(master: u64, r: usize) -> u64 {
    split_seed(master, r as u64)
}

/// Data of realization `r` for each stage to analyze.
pub fn realization_data(cfg: &ExperimentConfig, r: usize) -> Result<Vec<(Stage, MultivariateSeries)>> {
    let seed = realization_seed(cfg.seed, r);
    let raw = match &cfg.source {
        DataSource::Generator(g) => g.generate(split_seed(seed, 0))?.series,
        DataSource::Csv(path) => MultivariateSeries::read_csv_path(path)?,
    };
    let drifted = match &cfg.trend {
        Some(t) => add_stochastic_trend(&raw, t, split_seed(seed, 1))?.0,
        None => raw,
    };
    let mut out = Vec::new();
    if cfg.report_drift && cfg.detrend != Detrend::None {
        out.push((Stage::Drift, drifted.clone()));
    }
    out.push((Stage::Analyzed, cfg.detrend.apply(&drifted)?));
    Ok(out)
}

/// Data of realization 0 as analyzed, with the generator's true edges.
pub fn simulate(cfg: &ExperimentConfig) -> Result<GeneratedData> {
    let g = cfg
        .generator()
        .ok_or_else(|| Error::Config("simulate needs a generator source".into()))?;
    let edges = g.edges();
    let (_, series) = realization_data(cfg, 0)?
        .pop()
        .expect("the analyzed stage is always present");
    Ok(GeneratedData { series, edges })
}

/// Generates, preprocesses and analyzes realization `r`.
pub fn run_realization(cfg: &ExperimentConfig, r: usize) -> Result<Vec<RealizationRecord>> {
    let start = std::time::Instant::now();
    let seed = split_seed(realization_seed(cfg.seed, r), 2);
    let mut out = Vec::new();
    for (stage, data) in realization_data(cfg, r)? {
        for analysis in analyze_all_pairs(&data, cfg, seed)? {
            out.push(RealizationRecord {
                realization: r,
                stage,
                analysis,
            });
        }
    }
    log::info!("realization {r} done in {:.2?}", start.elapsed());
    Ok(out)
}

/// Rejection count of one (stage, pair, measure, test) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub stage: Stage,
    pub pair: String,
    pub driver: usize,
    pub response: usize,
    pub measure: Measure,
    pub test: TestKind,
    pub rejections: usize,
}

/// FDR rejection counts over `realizations` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub realizations: usize,
    pub rows: Vec<RejectionRow>,
}

impl RejectionTable {
    pub fn from_records(records: &[RealizationRecord], realizations: usize) -> Self {
        type Key = (Stage, (usize, usize, bool), Measure, TestKind);
        let mut cells: BTreeMap<Key, RejectionRow> = BTreeMap::new();
        for rec in records {
            let a = &rec.analysis;
            for (&test, &rej) in &a.fdr {
                let key = (rec.stage, pair_rank(a.driver, a.response), a.measure, test);
                let row = cells.entry(key).or_insert_with(|| RejectionRow {
                    stage: rec.stage,
                    pair: a.pair.clone(),
                    driver: a.driver,
                    response: a.response,
                    measure: a.measure,
                    test,
                    rejections: 0,
                });
                row.rejections += usize::from(rej);
            }
        }
        Self {
            realizations,
            rows: cells.into_values().collect(),
        }
    }

    pub fn get_stage(
        &self,
        stage: Stage,
        driver: usize,
        response: usize,
        measure: Measure,
        test: TestKind,
    ) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| {
                r.stage == stage && r.driver == driver && r.response == response && r.measure == measure && r.test == test
            })
            .map(|r| r.rejections)
    }

    /// Count for the analyzed stage, 0-based variable indices.
    pub fn get(&self, driver: usize, response: usize, measure: Measure, test: TestKind) -> Option<usize> {
        self.get_stage(Stage::Analyzed, driver, response, measure, test)
    }

    pub fn stages(&self) -> Vec<Stage> {
        let mut s: Vec<Stage> = self.rows.iter().map(|r| r.stage).collect();
        s.sort();
        s.dedup();
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub records: Vec<RealizationRecord>,
    pub table: RejectionTable,
}

/// Runs realizations `range` in parallel and returns their records in
/// realization order.
pub fn run_realizations(cfg: &ExperimentConfig, range: std::ops::Range<usize>) -> Result<Vec<RealizationRecord>> {
    let chunks: Vec<Vec<RealizationRecord>> = range
        .into_par_iter()
        .map(|r| run_realization(cfg, r))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Monte Carlo rejection counts without touching the file system.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<MonteCarloResult> {
    cfg.validate()?;
    let records = run_realizations(cfg, 0..cfg.realizations)?;
    let table = RejectionTable::from_records(&records, cfg.realizations);
    Ok(MonteCarloResult { records, table })
}

/// One sweep point for one (pair, measure, test).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub pair: String,
    pub driver: usize,
    pub response: usize,
    pub measure: Measure,
    pub mean_statistic: f64,
    pub test: TestKind,
    pub rejections: usize,
    pub realizations: usize,
}

/// Configuration for sweep point `i`.
pub fn sweep_config(cfg: &ExperimentConfig, axis: &SweepAxis, i: usize) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    c.sweep = None;
    match axis {
        SweepAxis::Coupling(v) => {
            let g = cfg
                .generator()
                .ok_or_else(|| Error::Config("a coupling sweep needs a generator source".into()))?;
            c.source = DataSource::Generator(g.with_coupling(v[i]));
        }
        SweepAxis::MovingAverage(v) => {
            c.detrend = match v[i] {
                0 => Detrend::None,
                order => Detrend::MovingAverage { order },
            };
            c.report_drift = false;
        }
    }
    Ok(c)
}

/// Mean statistic and rejection counts at every sweep value. All points use
/// the same master seed.
pub fn run_coupling_sweep(cfg: &ExperimentConfig, axis: &SweepAxis) -> Result<Vec<SweepRow>> {
    if axis.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for i in 0..axis.len() {
        let c = sweep_config(cfg, axis, i)?;
        let mc = run_monte_carlo(&c)?;
        let mut sums: BTreeMap<((usize, usize, bool), Measure), f64> = BTreeMap::new();
        for rec in mc.records.iter().filter(|r| r.stage == Stage::Analyzed) {
            let a = &rec.analysis;
            *sums.entry((pair_rank(a.driver, a.response), a.measure)).or_insert(0.0) += a.result.statistic;
        }
        for row in mc.table.rows.iter().filter(|r| r.stage == Stage::Analyzed) {
            let sum = sums[&(pair_rank(row.driver, row.response), row.measure)];
            rows.push(SweepRow {
                value: axis.label(i),
                pair: row.pair.clone(),
                driver: row.driver,
                response: row.response,
                measure: row.measure,
                mean_statistic: sum / c.realizations as f64,
                test: row.test,
                rejections: row.rejections,
                realizations: c.realizations,
            });
        }
        log::info!("sweep {} = {} done", axis.name(), axis.label(i));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_order_matches_tables() {
        assert_eq!(ordered_pairs(3), vec![(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
        assert_eq!(ordered_pairs(5).len(), 20);
        assert_eq!(ordered_pairs(2), vec![(0, 1), (1, 0)]);
        let mut ranks: Vec<_> = ordered_pairs(4).into_iter().map(|(a, b)| pair_rank(a, b)).collect();
        let sorted = {
            let mut s = ranks.clone();
            s.sort();
            s
        };
        assert_eq!(ranks, sorted);
        ranks.dedup();
        assert_eq!(ranks.len(), 12);
    }

    #[test]
    fn pair_seeds_are_distinct() {
        let mut seeds = Vec::new();
        for (a, b) in ordered_pairs(5) {
            for m in Measure::ALL {
                seeds.push(pair_seed(1, a, b, m));
            }
        }
        let n = seeds.len();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), n);
    }
}
