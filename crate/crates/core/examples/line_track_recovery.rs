//! Fly the 10 m line-tracking mission under each attack with MARS recovery
//! and compare tracking error and completion time with the clean flight.
//!
//! cargo run --release --example line_track_recovery -- [seeds]

use mars_sim::attacks::{AttackKind, AttackProfile};
use mars_sim::harness::{run_scenario, MissionKind, RecoveryMethod};
use mars_sim::SimConfig;

fn config(kind: AttackKind, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.mission.kind = MissionKind::LineTrack;
    cfg.scenario.duration = 60.0;
    cfg.scenario.seed = seed;
    cfg.scenario.recovery = RecoveryMethod::Mars;
    cfg.attack = AttackProfile::of_kind(kind, 5.0, 25.0);
    cfg
}

fn main() -> mars_sim::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    println!("{:<15} {:>9} {:>10} {:>10} {:>7}", "attack", "complete", "rmse", "time", "brakes");
    for kind in std::iter::once(AttackKind::None).chain(AttackKind::BENCHMARK) {
        let runs = (1..=seeds).map(|s| run_scenario(&config(kind, s)).map(|r| r.metrics)).collect::<Result<Vec<_>, _>>()?;
        let done: Vec<f64> = runs.iter().filter_map(|m| m.completion_time).collect();
        let n = runs.len() as f64;
        println!(
            "{:<15} {:>6}/{:<2} {:>10.3} {:>10.2} {:>7.1}",
            kind.name(),
            done.len(),
            runs.len(),
            runs.iter().map(|m| m.lateral_rmse).sum::<f64>() / n,
            done.iter().sum::<f64>() / done.len().max(1) as f64,
            runs.iter().map(|m| m.brake_count as f64).sum::<f64>() / n,
        );
    }
    Ok(())
}
