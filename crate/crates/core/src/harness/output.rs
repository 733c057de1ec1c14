//! Result files: rejection tables, per-realization records, the run manifest
//! and generated datasets.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepAxis};
use super::engine::{
    realization_seed, run_coupling_sweep, run_realizations, MonteCarloResult, RealizationRecord, RejectionTable,
    Stage, SweepRow,
};
use crate::error::{Error, Result};
use crate::simulators::{GeneratedData, SystemSpec};

pub const REJECTIONS_FILE: &str = "rejections.csv";
pub const DRIFT_REJECTIONS_FILE: &str = "rejections_drift.csv";
pub const RECORDS_FILE: &str = "realizations.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Partial,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub status: RunStatus,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub realization_seeds: Vec<u64>,
    /// Realizations `0..completed` are in the record file.
    pub completed: usize,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Manifest {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            status: RunStatus::Partial,
            config: cfg.clone(),
            master_seed: cfg.seed,
            realization_seeds: (0..cfg.realizations).map(|r| realization_seed(cfg.seed, r)).collect(),
            completed: 0,
            files: vec![RECORDS_FILE.to_string()],
            error: None,
        }
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg
        .out_dir
        .clone()
        .ok_or_else(|| Error::Config("no output directory configured".into()))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Reads every record of a record file.
pub fn read_records(path: &Path) -> Result<Vec<RealizationRecord>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn write_records(path: &Path, records: &[RealizationRecord], append: bool) -> Result<()> {
    let f = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the rows of one stage as `pair,measure,test,rejections,R`.
pub fn write_rejections(path: &Path, table: &RejectionTable, stage: Stage) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["pair", "measure", "test", "rejections", "R"])?;
    for row in table.rows.iter().filter(|r| r.stage == stage) {
        w.write_record([
            row.pair.as_str(),
            row.measure.name(),
            row.test.name(),
            &row.rejections.to_string(),
            &table.realizations.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs (or resumes) a Monte Carlo experiment and writes its files to the
/// configured output directory. A partial run with the same configuration is
/// picked up where it stopped.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloResult> {
    cfg.validate()?;
    let dir = out_dir(cfg)?;
    let records_path = dir.join(RECORDS_FILE);

    let mut manifest = Manifest::new(cfg);
    let mut records = Vec::new();
    if let Ok(prev) = Manifest::read(&dir) {
        if prev.status == RunStatus::Partial && prev.config == *cfg && prev.completed > 0 {
            records = read_records(&records_path)?;
            records.retain(|r| r.realization < prev.completed);
            manifest.completed = prev.completed;
            log::info!("resuming after {} completed realizations", prev.completed);
        }
    }
    write_records(&records_path, &records, false)?;
    manifest.write(&dir)?;

    let chunk = rayon::current_num_threads().max(1);
    while manifest.completed < cfg.realizations {
        let end = (manifest.completed + chunk).min(cfg.realizations);
        match run_realizations(cfg, manifest.completed..end) {
            Ok(new) => {
                write_records(&records_path, &new, true)?;
                records.extend(new);
                manifest.completed = end;
                manifest.write(&dir)?;
            }
            Err(e) => {
                manifest.error = Some(e.to_string());
                manifest.write(&dir)?;
                return Err(e);
            }
        }
    }

    let table = RejectionTable::from_records(&records, cfg.realizations);
    write_rejections(&dir.join(REJECTIONS_FILE), &table, Stage::Analyzed)?;
    manifest.files.push(REJECTIONS_FILE.into());
    if table.stages().contains(&Stage::Drift) {
        write_rejections(&dir.join(DRIFT_REJECTIONS_FILE), &table, Stage::Drift)?;
        manifest.files.push(DRIFT_REJECTIONS_FILE.into());
    }
    manifest.status = RunStatus::Complete;
    manifest.write(&dir)?;
    Ok(MonteCarloResult { records, table })
}

/// Runs a sweep and writes `sweep.csv` plus a manifest.
pub fn run_sweep(cfg: &ExperimentConfig, axis: &SweepAxis) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let dir = out_dir(cfg)?;
    let rows = run_coupling_sweep(cfg, axis)?;
    let path = dir.join(SWEEP_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([axis.name(), "pair", "measure", "mean_statistic", "test", "rejections", "R"])?;
    for r in &rows {
        w.write_record([
            r.value.as_str(),
            r.pair.as_str(),
            r.measure.name(),
            &r.mean_statistic.to_string(),
            r.test.name(),
            &r.rejections.to_string(),
            &r.realizations.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let mut manifest = Manifest::new(cfg);
    manifest.status = RunStatus::Complete;
    manifest.completed = cfg.realizations;
    manifest.files = vec![SWEEP_FILE.into()];
    manifest.write(&dir)?;
    Ok(rows)
}

#[derive(Serialize)]
struct EdgeLabel<'a> {
    source: &'a str,
    target: &'a str,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a SystemSpec,
    seed: u64,
    edges: Vec<EdgeLabel<'a>>,
}

/// Writes `<stem>.csv` and the `<stem>.json` sidecar with spec, seed and true
/// edges. Returns both paths.
pub fn write_generated(data: &GeneratedData, spec: &SystemSpec, seed: u64, csv_path: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    data.series.write_csv_path(csv_path)?;
    let labels = data.series.labels();
    let sidecar = Sidecar {
        spec,
        seed,
        edges: data
            .edges
            .iter()
            .map(|e| EdgeLabel {
                source: &labels[e.source],
                target: &labels[e.target],
            })
            .collect(),
    };
    let json_path = csv_path.with_extension("json");
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    Ok((csv_path.to_path_buf(), json_path))
}
