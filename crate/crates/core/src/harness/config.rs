//! Experiment configuration and its `key = value` text format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpec;
use crate::error::{Error, Result};
use crate::estimators::KnnSpec;
use crate::inference::{FdrSpec, SurrogateSpec};
use crate::simulators::{Detrend, HenonSpec, LinearSystemSpec, LorenzSpec, SystemSpec, TrendSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Measure {
    Pterv,
    Pste,
    Pte,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Pterv, Measure::Pste, Measure::Pte];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Pterv => "PTERV",
            Measure::Pste => "PSTE",
            Measure::Pte => "PTE",
        }
    }

    /// Only the symbolic measures have bias and variance approximations.
    pub fn supports(self, test: TestKind) -> bool {
        test == TestKind::Surrogate || self != Measure::Pte
    }

    pub(crate) fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pterv" => Ok(Measure::Pterv),
            "pste" => Ok(Measure::Pste),
            "pte" => Ok(Measure::Pte),
            other => Err(Error::Config(format!("unknown measure '{other}' (expected PTERV, PSTE or PTE)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Surrogate,
    Gaussian,
    Gamma1,
    Gamma2,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [TestKind::Surrogate, TestKind::Gaussian, TestKind::Gamma1, TestKind::Gamma2];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Surrogate => "surrogate",
            TestKind::Gaussian => "gaussian",
            TestKind::Gamma1 => "gamma1",
            TestKind::Gamma2 => "gamma2",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "surrogate" | "randomization" => Ok(TestKind::Surrogate),
            "gaussian" => Ok(TestKind::Gaussian),
            "gamma1" => Ok(TestKind::Gamma1),
            "gamma2" => Ok(TestKind::Gamma2),
            other => Err(Error::Config(format!(
                "unknown test '{other}' (expected surrogate, gaussian, gamma1 or gamma2)"
            ))),
        }
    }
}

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Csv(PathBuf),
    Generator(SystemSpec),
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    Coupling(Vec<f64>),
    MovingAverage(Vec<usize>),
}

impl SweepAxis {
    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Coupling(v) => v.len(),
            SweepAxis::MovingAverage(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Coupling(_) => "coupling",
            SweepAxis::MovingAverage(_) => "ma_order",
        }
    }

    pub fn label(&self, i: usize) -> String {
        match self {
            SweepAxis::Coupling(v) => v[i].to_string(),
            SweepAxis::MovingAverage(v) => v[i].to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub measures: Vec<Measure>,
    pub tests: Vec<TestKind>,
    pub embedding: EmbeddingSpec,
    pub knn: KnnSpec,
    pub surrogates: usize,
    pub shift_range: (f64, f64),
    pub fdr: FdrSpec,
    pub realizations: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub trend: Option<TrendSpec>,
    pub detrend: Detrend,
    /// Also analyze the data before detrending (the "with drift" block).
    pub report_drift: bool,
    /// Restrict analysis to these `(driver, response)` pairs; all ordered
    /// pairs otherwise. The FDR family is the set of analyzed pairs.
    pub pairs: Option<Vec<(usize, usize)>>,
    pub sweep: Option<SweepAxis>,
}

impl ExperimentConfig {
    pub fn new(source: DataSource) -> Self {
        Self {
            source,
            measures: Measure::ALL.to_vec(),
            tests: vec![TestKind::Surrogate],
            embedding: EmbeddingSpec {
                m: 2,
                tau: 1,
                horizon: 1,
            },
            knn: KnnSpec::default(),
            surrogates: 100,
            shift_range: SurrogateSpec::default().shift_range,
            fdr: FdrSpec::default(),
            realizations: 1,
            seed: 0,
            out_dir: None,
            trend: None,
            detrend: Detrend::None,
            report_drift: false,
            pairs: None,
            sweep: None,
        }
    }

    pub fn surrogate_spec(&self, seed: u64) -> SurrogateSpec {
        SurrogateSpec {
            count: self.surrogates,
            shift_range: self.shift_range,
            seed,
        }
    }

    pub fn generator(&self) -> Option<&SystemSpec> {
        match &self.source {
            DataSource::Generator(g) => Some(g),
            DataSource::Csv(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.measures.is_empty() {
            return Err(Error::Config("at least one measure is required".into()));
        }
        if self.tests.is_empty() {
            return Err(Error::Config("at least one test is required".into()));
        }
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be >= 1".into()));
        }
        EmbeddingSpec::new(self.embedding.m, self.embedding.tau, self.embedding.horizon)?;
        KnnSpec::new(self.knn.k)?;
        FdrSpec::new(self.fdr.alpha)?;
        self.surrogate_spec(0).validate()?;
        if let Some(t) = &self.trend {
            if !(t.multiplier >= 0.0) {
                return Err(Error::Config(format!("trend multiplier must be >= 0, got {}", t.multiplier)));
            }
        }
        if let Some(s) = &self.sweep {
            if s.is_empty() {
                return Err(Error::Config("sweep needs at least one value".into()));
            }
        }
        if let Some(p) = &self.pairs {
            if p.is_empty() {
                return Err(Error::Config("pair list is empty".into()));
            }
            if p.iter().any(|(a, b)| a == b) {
                return Err(Error::Config("a pair needs two distinct variables".into()));
            }
        }
        Ok(())
    }

    /// Parses the `key = value` format; `#` starts a comment. Unknown keys
    /// are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut builder = Builder::default();
        for (k, v) in &entries {
            builder.set(k, v)?;
        }
        let cfg = builder.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies one `key = value` override on top of this configuration.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut b = Builder::from_config(self.clone());
        b.set(key, value)?;
        *self = b.finish()?;
        Ok(())
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

/// Accumulates keys before the source kind is known.
#[derive(Default)]
struct Builder {
    system: Option<String>,
    data: Option<PathBuf>,
    k: Option<usize>,
    coupling: Option<f64>,
    n: Option<usize>,
    transient: Option<String>,
    abcd: [Option<f64>; 4],
    noise: Option<[f64; 3]>,
    dt: Option<f64>,
    rtol: Option<f64>,
    atol: Option<f64>,
    base: Option<ExperimentConfig>,
    trend_multiplier: Option<f64>,
    trend_order: Option<usize>,
    trend_on: Option<bool>,
    rest: Vec<(String, String)>,
}

impl Builder {
    fn from_config(cfg: ExperimentConfig) -> Self {
        let mut b = Builder::default();
        match &cfg.source {
            DataSource::Csv(p) => {
                b.system = Some("csv".into());
                b.data = Some(p.clone());
            }
            DataSource::Generator(SystemSpec::Henon(h)) => {
                b.system = Some("henon".into());
                b.k = Some(h.k);
                b.coupling = Some(h.coupling);
                b.n = Some(h.n);
                b.transient = Some(h.transient.to_string());
            }
            DataSource::Generator(SystemSpec::Lorenz(l)) => {
                b.system = Some("lorenz".into());
                b.coupling = Some(l.coupling);
                b.n = Some(l.n);
                b.dt = Some(l.dt);
                b.rtol = Some(l.rtol);
                b.atol = Some(l.atol);
                b.transient = Some(l.transient.to_string());
            }
            DataSource::Generator(SystemSpec::Linear(l)) => {
                b.system = Some("linear".into());
                b.abcd = [Some(l.a), Some(l.b), Some(l.c), Some(l.d)];
                b.n = Some(l.n);
                b.noise = Some(l.noise_sd);
                b.transient = Some(l.transient.to_string());
            }
        }
        b.base = Some(cfg);
        b
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "system" | "source" => self.system = Some(v.to_ascii_lowercase()),
            "data" | "csv" => {
                self.data = Some(PathBuf::from(v));
                self.system.get_or_insert_with(|| "csv".into());
            }
            "K" | "variables" => self.k = Some(parse_num(key, v)?),
            "C" | "coupling" => self.coupling = Some(parse_num(key, v)?),
            "N" | "n" | "length" => self.n = Some(parse_num(key, v)?),
            "transient" => self.transient = Some(v.to_string()),
            "a" => self.abcd[0] = Some(parse_num(key, v)?),
            "b" => self.abcd[1] = Some(parse_num(key, v)?),
            "c" => self.abcd[2] = Some(parse_num(key, v)?),
            "d" => self.abcd[3] = Some(parse_num(key, v)?),
            "noise_sd" => {
                let l: Vec<f64> = parse_list(key, v)?;
                let arr: [f64; 3] = l
                    .try_into()
                    .map_err(|_| Error::Config("noise_sd needs three values".into()))?;
                self.noise = Some(arr);
            }
            "dt" => self.dt = Some(parse_num(key, v)?),
            "rtol" => self.rtol = Some(parse_num(key, v)?),
            "atol" => self.atol = Some(parse_num(key, v)?),
            "trend" => self.trend_on = Some(parse_bool(key, v)?),
            "trend_multiplier" => {
                self.trend_multiplier = Some(parse_num(key, v)?);
                self.trend_on.get_or_insert(true);
            }
            "trend_order" => {
                self.trend_order = Some(parse_num(key, v)?);
                self.trend_on.get_or_insert(true);
            }
            _ => self.rest.push((key.to_string(), v.to_string())),
        }
        Ok(())
    }

    fn source(&self) -> Result<DataSource> {
        let system = self
            .system
            .as_deref()
            .ok_or_else(|| Error::Config("missing 'system' (csv, henon, lorenz or linear)".into()))?;
        let need_n = || self.n.ok_or_else(|| Error::Config(format!("{system}: missing 'N'")));
        Ok(match system {
            "csv" => DataSource::Csv(
                self.data
                    .clone()
                    .ok_or_else(|| Error::Config("csv source needs 'data = <path>'".into()))?,
            ),
            "henon" => {
                let mut s = HenonSpec::new(self.k.unwrap_or(3), self.coupling.unwrap_or(0.2), need_n()?);
                if let Some(t) = &self.transient {
                    s.transient = parse_num("transient", t)?;
                }
                DataSource::Generator(SystemSpec::Henon(s))
            }
            "lorenz" => {
                let mut s = LorenzSpec::new(self.coupling.unwrap_or(2.0), need_n()?);
                if let Some(t) = &self.transient {
                    s.transient = parse_num("transient", t)?;
                }
                s.dt = self.dt.unwrap_or(s.dt);
                s.rtol = self.rtol.unwrap_or(s.rtol);
                s.atol = self.atol.unwrap_or(s.atol);
                DataSource::Generator(SystemSpec::Lorenz(s))
            }
            "linear" => {
                let d = LinearSystemSpec::default();
                let [a, b, c, dd] = self.abcd;
                let mut s = LinearSystemSpec::new(
                    a.unwrap_or(d.a),
                    b.unwrap_or(d.b),
                    c.unwrap_or(d.c),
                    dd.unwrap_or(d.d),
                    self.n.unwrap_or(d.n),
                );
                if let Some(t) = &self.transient {
                    s.transient = parse_num("transient", t)?;
                }
                s.noise_sd = self.noise.unwrap_or(s.noise_sd);
                DataSource::Generator(SystemSpec::Linear(s))
            }
            other => return Err(Error::Config(format!("unknown system '{other}'"))),
        })
    }

    fn finish(self) -> Result<ExperimentConfig> {
        let source = self.source()?;
        let mut cfg = match self.base.clone() {
            Some(mut base) => {
                base.source = source;
                base
            }
            None => ExperimentConfig::new(source),
        };
        match self.trend_on {
            Some(false) => cfg.trend = None,
            Some(true) => {
                let mut t = cfg.trend.unwrap_or_default();
                t.multiplier = self.trend_multiplier.unwrap_or(t.multiplier);
                t.order = self.trend_order.unwrap_or(t.order);
                cfg.trend = Some(t);
            }
            None => {}
        }
        for (key, v) in &self.rest {
            let v = v.as_str();
            match key.as_str() {
                "measures" => cfg.measures = parse_list(key, v)?,
                "tests" => cfg.tests = parse_list(key, v)?,
                "m" => cfg.embedding.m = parse_num(key, v)?,
                "tau" => cfg.embedding.tau = parse_num(key, v)?,
                "T" | "horizon" => cfg.embedding.horizon = parse_num(key, v)?,
                "k" => cfg.knn.k = parse_num(key, v)?,
                "theiler" => cfg.knn.theiler = parse_num(key, v)?,
                "M" | "surrogates" => cfg.surrogates = parse_num(key, v)?,
                "shift_range" => {
                    let l: Vec<f64> = parse_list(key, v)?;
                    let [lo, hi]: [f64; 2] = l
                        .try_into()
                        .map_err(|_| Error::Config("shift_range needs two values".into()))?;
                    cfg.shift_range = (lo, hi);
                }
                "alpha" => cfg.fdr.alpha = parse_num(key, v)?,
                "R" | "realizations" => cfg.realizations = parse_num(key, v)?,
                "seed" => cfg.seed = parse_num(key, v)?,
                "out" | "out_dir" => cfg.out_dir = Some(PathBuf::from(v)),
                "detrend" => cfg.detrend = parse_detrend(v)?,
                "report_drift" => cfg.report_drift = parse_bool(key, v)?,
                "pairs" => cfg.pairs = Some(parse_pairs(v)?),
                "sweep" => cfg.sweep = Some(parse_sweep(v)?),
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        Ok(cfg)
    }
}

/// `none`, `polynomial:<degree>` or `moving_average:<order>` (`ma:<order>`).
pub fn parse_detrend(v: &str) -> Result<Detrend> {
    let v = v.trim().to_ascii_lowercase();
    let (kind, arg) = v.split_once(':').unwrap_or((v.as_str(), ""));
    match kind.trim() {
        "none" => Ok(Detrend::None),
        "polynomial" | "poly" => Ok(Detrend::Polynomial {
            degree: parse_num("detrend", arg.trim())?,
        }),
        "moving_average" | "ma" => Ok(Detrend::MovingAverage {
            order: parse_num("detrend", arg.trim())?,
        }),
        _ => Err(Error::Config(format!(
            "detrend: expected none, polynomial:<degree> or ma:<order>, got '{v}'"
        ))),
    }
}

/// Comma-separated `driver>response` pairs with 1-based variable numbers.
pub fn parse_pairs(v: &str) -> Result<Vec<(usize, usize)>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (a, b) = s
                .split_once('>')
                .ok_or_else(|| Error::Config(format!("pairs: expected 'i>j', got '{s}'")))?;
            let a: usize = parse_num("pairs", a.trim())?;
            let b: usize = parse_num("pairs", b.trim())?;
            if a == 0 || b == 0 {
                return Err(Error::Config("pairs: variables are numbered from 1".into()));
            }
            Ok((a - 1, b - 1))
        })
        .collect()
}

/// `coupling:0.1,0.2` or `ma:0,50,100`.
pub fn parse_sweep(v: &str) -> Result<SweepAxis> {
    let (axis, values) = v
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("sweep: expected '<axis>:<values>', got '{v}'")))?;
    match axis.trim().to_ascii_lowercase().as_str() {
        "coupling" | "c" => Ok(SweepAxis::Coupling(parse_list("sweep", values)?)),
        "ma" | "moving_average" => Ok(SweepAxis::MovingAverage(parse_list("sweep", values)?)),
        other => Err(Error::Config(format!("sweep: unknown axis '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HENON: &str = "
        # Hénon chain, K = 3
        system = henon
        K = 3
        C = 0.2
        N = 1024
        measures = PTERV, PTE
        tests = surrogate
        m = 2
        M = 100
        alpha = 0.05
        R = 20
        seed = 7
    ";

    #[test]
    fn parses_henon_config() {
        let cfg = ExperimentConfig::parse(HENON).unwrap();
        assert_eq!(cfg.measures, vec![Measure::Pterv, Measure::Pte]);
        assert_eq!(cfg.tests, vec![TestKind::Surrogate]);
        assert_eq!(cfg.realizations, 20);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.knn, KnnSpec::default());
        let windowed = ExperimentConfig::parse(&format!("{HENON}\ntheiler = 20")).unwrap();
        assert_eq!(windowed.knn.theiler, 20);
        match cfg.source {
            DataSource::Generator(SystemSpec::Henon(h)) => {
                assert_eq!((h.k, h.coupling, h.n, h.transient), (3, 0.2, 1024, 1000));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = |extra: &str| ExperimentConfig::parse(&format!("{HENON}\n{extra}")).unwrap_err();
        assert!(bad("measures =").is_config());
        assert!(bad("tests = ").is_config());
        assert!(bad("R = 0").is_config());
        assert!(bad("colour = blue").is_config());
        assert!(bad("alpha = 1.5").is_config());
        assert!(bad("m = x").is_config());
        assert!(ExperimentConfig::parse("N = 10").unwrap_err().is_config());
        assert!(ExperimentConfig::parse("system = henon\nnot a pair").unwrap_err().is_config());
    }

    #[test]
    fn detrend_pairs_and_sweeps() {
        assert_eq!(parse_detrend("polynomial:15").unwrap(), Detrend::Polynomial { degree: 15 });
        assert_eq!(parse_detrend("ma: 100").unwrap(), Detrend::MovingAverage { order: 100 });
        assert_eq!(parse_detrend("none").unwrap(), Detrend::None);
        assert!(parse_detrend("spline:3").is_err());
        assert_eq!(parse_pairs("1>2, 3>2").unwrap(), vec![(0, 1), (2, 1)]);
        assert!(parse_pairs("0>1").is_err());
        assert_eq!(
            parse_sweep("coupling:0.1,0.2").unwrap(),
            SweepAxis::Coupling(vec![0.1, 0.2])
        );
        assert_eq!(parse_sweep("ma:0,50").unwrap(), SweepAxis::MovingAverage(vec![0, 50]));
    }

    #[test]
    fn overrides_and_trend() {
        let mut cfg = ExperimentConfig::parse(&format!("{HENON}\ntrend_multiplier = 0.6")).unwrap();
        assert_eq!(
            cfg.trend,
            Some(TrendSpec {
                multiplier: 0.6,
                order: 100
            })
        );
        cfg.set("C", "0.4").unwrap();
        cfg.set("M", "50").unwrap();
        assert_eq!(cfg.generator().unwrap().coupling(), 0.4);
        assert_eq!(cfg.surrogates, 50);
        assert_eq!(cfg.trend.unwrap().multiplier, 0.6);
        cfg.set("trend", "off").unwrap();
        assert!(cfg.trend.is_none());
    }

    #[test]
    fn linear_and_csv_sources() {
        let cfg = ExperimentConfig::parse("system = linear\na = 0\nc = 1\nm = 3").unwrap();
        match cfg.source {
            DataSource::Generator(SystemSpec::Linear(l)) => {
                assert_eq!((l.a, l.b, l.c, l.d, l.n), (0.0, -1.0, 1.0, 0.8, 1024));
            }
            other => panic!("{other:?}"),
        }
        let cfg = ExperimentConfig::parse("data = x.csv").unwrap();
        assert_eq!(cfg.source, DataSource::Csv("x.csv".into()));
    }
}
