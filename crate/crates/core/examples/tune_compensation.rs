//! Grid search for the braking-torque compensation gains: fly the line
//! mission, trigger MARS mid-track and measure how far the vehicle runs past
//! the point where braking began.
//!
//! cargo run --release --example tune_compensation -- [seeds]

use mars_sim::attacks::{AttackKind, AttackProfile};
use mars_sim::harness::{run_scenario, MissionKind, RecoveryMethod};
use mars_sim::SimConfig;
use rayon::prelude::*;

/// Largest distance from the Brake entry point while braking and restoring
/// hover, m, and the number of Brake entries, both averaged over seeds.
fn brake_overshoot(k: f64, seeds: u64) -> mars_sim::Result<(f64, f64)> {
    let runs: Vec<(f64, f64)> = (1..=seeds)
        .into_par_iter()
        .map(|seed| {
            let mut cfg = SimConfig::default();
            cfg.mission.kind = MissionKind::LineTrack;
            cfg.scenario.duration = 20.0;
            cfg.scenario.seed = seed;
            cfg.scenario.recovery = RecoveryMethod::Mars;
            cfg.scenario.record_log = true;
            cfg.attack = AttackProfile::of_kind(AttackKind::ArDos, 8.0, 20.0);
            cfg.estimation.compensation.k_cp = [k, k, 0.0];
            let res = run_scenario(&cfg)?;
            let braking: Vec<_> = res.rows.iter().filter(|r| r.phase == "brake" || r.phase == "hover_restore").collect();
            let Some(first) = braking.first() else { return Ok((f64::NAN, 0.0)) };
            let peak = braking
                .iter()
                .map(|r| ((r.x - first.x).powi(2) + (r.y - first.y).powi(2) + (r.z - first.z).powi(2)).sqrt())
                .fold(0.0, f64::max);
            Ok((peak, res.metrics.brake_count as f64))
        })
        .collect::<mars_sim::Result<_>>()?;
    let n = runs.len() as f64;
    Ok((runs.iter().map(|r| r.0).sum::<f64>() / n, runs.iter().map(|r| r.1).sum::<f64>() / n))
}

fn main() -> mars_sim::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let grid = [0.0, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1];
    let mut best = (f64::INFINITY, 0.0);
    for k in grid {
        let (o, brakes) = brake_overshoot(k, seeds)?;
        println!("k_cp xy = {k:<6} overshoot {o:.4} m  brakes {brakes:.1}");
        if o < best.0 {
            best = (o, k);
        }
    }
    println!("best k_cp xy = {} ({:.4} m)", best.1, best.0);
    Ok(())
}
