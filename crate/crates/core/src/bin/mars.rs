use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mars_sim::detection::roc::{default_thresholds, roc_eval, Dataset, DetectorKind};
use mars_sim::harness::datasets::{write_datasets, DatasetPlan};
use mars_sim::harness::run_scenario;
use mars_sim::harness::sweep::{run_grid, write_grid, GridSpec};
use mars_sim::SimConfig;

#[derive(Parser)]
#[command(name = "mars", about = "Quadrotor IMU attack detection and recovery simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write timeseries.csv, events.jsonl, metrics.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep a detector's threshold over labeled datasets and write the ROC table.
    Roc {
        #[arg(long)]
        datasets: PathBuf,
        #[arg(long)]
        detector: DetectorKind,
        #[arg(long)]
        out: PathBuf,
        /// Overlay for detector and benchmark settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a grid of scenarios and write runs.csv and summary.csv.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fly the labeled hover datasets used by `roc`.
    Datasets {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: Option<&PathBuf>) -> mars_sim::Result<SimConfig> {
    path.map_or_else(|| Ok(SimConfig::default()), SimConfig::from_file)
}

fn run(cli: Cli) -> mars_sim::Result<()> {
    match cli.cmd {
        Cmd::Run { scenario, out, seed } => {
            let mut cfg = SimConfig::from_file(&scenario)?;
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            cfg.scenario.record_log = true;
            let res = run_scenario(&cfg)?;
            res.write_all(&out)?;
            println!("{}", serde_json::to_string_pretty(&res.metrics)?);
        }
        Cmd::Roc { datasets, detector, out, config } => {
            let cfg = load(config.as_ref())?;
            let sets = Dataset::load_dir(&datasets)?;
            let rep = roc_eval(&sets, detector, &default_thresholds(detector), &cfg.detector, &cfg.benchmark)?;
            rep.write_csv(&out)?;
            let op = rep.operating_point(0.01);
            println!(
                "{}: {} datasets, AUC {:.4}, TPR at FPR<=0.01 {:.4}, mean response {}",
                detector.name(),
                rep.datasets,
                rep.auc(),
                op.map_or(0.0, |p| p.tpr),
                op.and_then(|p| p.mean_response).map_or("-".into(), |r| format!("{r:.3} s"))
            );
        }
        Cmd::Sweep { grid, out } => {
            let spec = GridSpec::from_file(&grid)?;
            let rows = run_grid(&spec);
            write_grid(&spec, &rows, &out)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            println!("{} runs, {} failed", rows.len(), failed);
        }
        Cmd::Datasets { out, seeds, config } => {
            let cfg = load(config.as_ref())?;
            let plan = DatasetPlan { seeds: (1..=seeds).collect(), ..DatasetPlan::default() };
            let sets = plan.generate(&cfg)?;
            write_datasets(&sets, &out)?;
            println!("{} datasets written to {}", sets.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
