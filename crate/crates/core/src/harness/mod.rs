//! Experiment engine: configuration, all-pairs analysis, Monte Carlo tables,
//! sweeps and the files they produce.

pub mod config;
pub mod engine;
pub mod output;

pub use config::{DataSource, ExperimentConfig, Measure, SweepAxis, TestKind};
pub use engine::{
    analyze_all_pairs, apply_fdr, ordered_pairs, run_coupling_sweep, run_monte_carlo, run_realization, simulate,
    MonteCarloResult, PairAnalysis, RealizationRecord, RejectionTable, Stage, SweepRow,
};
pub use output::{
    read_records, run_experiment, run_sweep, write_generated, Manifest, RunStatus, MANIFEST_FILE, RECORDS_FILE,
    REJECTIONS_FILE,
};
