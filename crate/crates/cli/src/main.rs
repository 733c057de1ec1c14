use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rankte::harness::output::{write_generated, Manifest};
use rankte::harness::{run_experiment, run_sweep, simulate, ExperimentConfig, MonteCarloResult, Stage};
use rankte::{Error, Result};

#[derive(Parser)]
#[command(name = "rankte", version, about = "Direct causality tests with rank-vector transfer entropies")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze all ordered pairs of a CSV dataset.
    Analyze {
        /// Input CSV, one column per variable.
        data: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a dataset from one of the benchmark systems.
    Simulate {
        /// Output CSV; a JSON sidecar with spec, seed and true edges is
        /// written next to it.
        #[arg(long, default_value = "data.csv")]
        csv: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo rejection counts over generated realizations.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Rejection counts and mean statistics across coupling strengths or
    /// moving-average orders.
    Sweep {
        /// `coupling:0.1,0.2,...` or `ma:0,50,...`; overrides the config.
        #[arg(long)]
        values: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of PTERV, PSTE, PTE.
    #[arg(long)]
    measures: Option<String>,
    /// Comma-separated subset of surrogate, gaussian, gamma1, gamma2.
    #[arg(long)]
    tests: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    tau: Option<usize>,
    /// Future horizon.
    #[arg(long = "T")]
    horizon: Option<usize>,
    /// Neighbors for the nearest-neighbor estimator.
    #[arg(long)]
    k: Option<usize>,
    /// Number of surrogates.
    #[arg(long = "M")]
    surrogates: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    /// Config file text followed by the command-line overrides.
    fn config_text(&self, leading: &[(&str, String)]) -> Result<String> {
        let mut text = String::new();
        for (k, v) in leading {
            text.push_str(&format!("{k} = {v}\n"));
        }
        if let Some(path) = &self.config {
            text.push_str(&std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?);
            text.push('\n');
        }
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                text.push_str(&format!("{k} = {v}\n"));
            }
        };
        push("seed", self.seed.map(|v| v.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("measures", self.measures.clone());
        push("tests", self.tests.clone());
        push("m", self.m.map(|v| v.to_string()));
        push("tau", self.tau.map(|v| v.to_string()));
        push("T", self.horizon.map(|v| v.to_string()));
        push("k", self.k.map(|v| v.to_string()));
        push("M", self.surrogates.map(|v| v.to_string()));
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("realizations", self.realizations.map(|v| v.to_string()));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            text.push_str(&format!("{} = {}\n", k.trim(), v.trim()));
        }
        Ok(text)
    }

    fn load(&self, leading: &[(&str, String)]) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(&self.config_text(leading)?)
    }
}

fn require_out(cfg: &mut ExperimentConfig) {
    cfg.out_dir.get_or_insert_with(|| PathBuf::from("rankte-out"));
}

fn print_analysis(mc: &MonteCarloResult) {
    println!("pair\tmeasure\tstatistic\ttest\tp\tfdr_reject");
    for rec in &mc.records {
        let a = &rec.analysis;
        let stage = if rec.stage == Stage::Drift { " (before detrending)" } else { "" };
        for (test, rej) in &a.fdr {
            let p = a.p_value(*test).map_or("NA".to_string(), |p| format!("{p:.4}"));
            println!(
                "{}{stage}\t{}\t{:.5}\t{test}\t{p}\t{rej}",
                a.pair, a.measure, a.result.statistic
            );
        }
    }
}

fn print_table(mc: &MonteCarloResult) {
    println!("stage\tpair\tmeasure\ttest\trejections\tR");
    for row in &mc.table.rows {
        let stage = match row.stage {
            Stage::Analyzed => "analyzed",
            Stage::Drift => "drift",
        };
        println!(
            "{stage}\t{}\t{}\t{}\t{}\t{}",
            row.pair, row.measure, row.test, row.rejections, mc.table.realizations
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { data, common } => {
            let leading: Vec<(&str, String)> = data.iter().map(|p| ("data", p.display().to_string())).collect();
            let mut cfg = common.load(&leading)?;
            if cfg.generator().is_some() && data.is_none() {
                return Err(Error::Config("analyze needs a CSV input (positional or 'data = <path>')".into()));
            }
            require_out(&mut cfg);
            let mc = run_experiment(&cfg)?;
            print_analysis(&mc);
        }
        Command::Simulate { csv, common } => {
            let cfg = common.load(&[])?;
            let spec = cfg
                .generator()
                .ok_or_else(|| Error::Config("simulate needs 'system = henon|lorenz|linear'".into()))?;
            let data = simulate(&cfg)?;
            let (c, j) = write_generated(&data, spec, cfg.seed, &csv)?;
            println!("wrote {} and {}", c.display(), j.display());
        }
        Command::Experiment { common } => {
            let mut cfg = common.load(&[])?;
            if cfg.generator().is_none() {
                return Err(Error::Config("experiment needs a generator source".into()));
            }
            require_out(&mut cfg);
            let mc = run_experiment(&cfg)?;
            print_table(&mc);
            if let Some(dir) = &cfg.out_dir {
                let m = Manifest::read(dir)?;
                log::info!("{} realizations written to {}", m.completed, dir.display());
            }
        }
        Command::Sweep { values, common } => {
            let mut cfg = common.load(&[])?;
            if let Some(v) = values {
                cfg.sweep = Some(rankte::harness::config::parse_sweep(&v)?);
            }
            let axis = cfg
                .sweep
                .clone()
                .ok_or_else(|| Error::Config("sweep needs '--values' or 'sweep = ...' in the config".into()))?;
            require_out(&mut cfg);
            let rows = run_sweep(&cfg, &axis)?;
            println!("{}\tpair\tmeasure\tmean_statistic\ttest\trejections\tR", axis.name());
            for r in rows {
                println!(
                    "{}\t{}\t{}\t{:.5}\t{}\t{}\t{}",
                    r.value, r.pair, r.measure, r.mean_statistic, r.test, r.rejections, r.realizations
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
