//! Detector calibration from attack-free flights: per-axis residual spread
//! (for the normalization scales), residual quantiles, and the point-alarm
//! rate and Brake count over a grid of drift and threshold values.
//!
//! cargo run --release --example calibrate_detector -- [seeds]

use mars_sim::detection::{DetectorConfig, MarsDetector};
use mars_sim::harness::{run_scenario, MissionKind, RecoveryMethod, RunResult};
use mars_sim::SimConfig;
use rayon::prelude::*;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

fn main() -> mars_sim::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let base = SimConfig::default();
    let jobs: Vec<(MissionKind, u64)> =
        MissionKind::ALL.iter().flat_map(|&m| (1..=seeds).map(move |s| (m, s))).collect();
    // Fly on the standard estimator so the residual is never fed back.
    let runs: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(m, s)| {
            let mut cfg = base.clone();
            cfg.mission.kind = m;
            cfg.scenario.seed = s;
            cfg.scenario.duration = 60.0;
            cfg.scenario.recovery = RecoveryMethod::None;
            cfg.scenario.record_log = true;
            run_scenario(&cfg)
        })
        .collect::<mars_sim::Result<_>>()?;

    let rows: Vec<_> = runs.iter().flat_map(|r| r.rows.iter().filter(|x| x.residual.is_some())).collect();
    let std = |f: &dyn Fn(&mars_sim::harness::LogRow) -> f64| {
        let v: Vec<f64> = rows.iter().map(|r| f(r)).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    println!(
        "accel residual std [{:.4} {:.4} {:.4}] m/s^2",
        std(&|r| r.accel_err_x),
        std(&|r| r.accel_err_y),
        std(&|r| r.accel_err_z)
    );
    println!(
        "gyro residual std  [{:.4} {:.4} {:.4}] rad/s",
        std(&|r| r.gyro_err_x),
        std(&|r| r.gyro_err_y),
        std(&|r| r.gyro_err_z)
    );
    let mut r: Vec<f64> = rows.iter().filter_map(|x| x.residual).collect();
    r.sort_by(f64::total_cmp);
    println!(
        "normalized residual: median {:.2}  p99 {:.2}  p99.99 {:.2}  max {:.2}  ({} samples)",
        quantile(&r, 0.5),
        quantile(&r, 0.99),
        quantile(&r, 0.9999),
        r.last().unwrap(),
        r.len()
    );

    println!("{:>6} {:>8} {:>14} {:>12}", "drift", "thresh", "alarm rate", "flag runs");
    for drift in [3.0, 4.0, 5.0] {
        for threshold in [10.0, 20.0, 40.0] {
            let mut alarms = 0usize;
            let mut flagged = 0usize;
            for run in &runs {
                let cfg = DetectorConfig { drift, threshold, ..base.detector.clone() };
                let mut det = MarsDetector::new(cfg)?;
                let mut any = false;
                for row in &run.rows {
                    let o = det.step(row.residual, row.t);
                    alarms += usize::from(o.alpha);
                    any |= o.flag;
                }
                flagged += usize::from(any);
            }
            println!(
                "{:>6} {:>8} {:>14.2e} {:>9}/{}",
                drift,
                threshold,
                alarms as f64 / r.len() as f64,
                flagged,
                runs.len()
            );
        }
    }
    Ok(())
}
