//! Tachometer-based thrust and torque estimation against the true wrench
//! over a long hover.
//!
//! cargo run --release --example wrench_estimation -- [seconds]

use mars_sim::harness::{run_scenario, RecoveryMethod};
use mars_sim::SimConfig;

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * q).round() as usize]
}

fn main() -> mars_sim::Result<()> {
    let secs: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100.0);
    let mut cfg = SimConfig::default();
    cfg.scenario.duration = secs;
    cfg.scenario.recovery = RecoveryMethod::None;
    let res = run_scenario(&cfg)?;

    let err = |j: usize| -> Vec<f64> {
        res.wrench.iter().zip(&res.wrench_estimate).map(|(w, e)| (w[j] - e[j]).abs()).collect()
    };
    let thrust = err(2);
    let names = ["torque x", "torque y", "torque z", "thrust"];
    let limits = [0.02, 0.02, 0.002, 0.03];
    for (k, e) in [err(3), err(4), err(5), thrust].into_iter().enumerate() {
        let within = e.iter().filter(|x| **x < limits[k]).count() as f64 / e.len() as f64;
        println!(
            "{:<9} p50 {:.2e}  p99 {:.2e}  max {:.2e}  within {:.3}: {:.4}",
            names[k],
            quantile(e.clone(), 0.5),
            quantile(e.clone(), 0.99),
            e.iter().cloned().fold(0.0, f64::max),
            limits[k],
            within
        );
    }
    Ok(())
}
