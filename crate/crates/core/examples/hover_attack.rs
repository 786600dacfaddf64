//! Hover under an acoustic-resonance attack with each recovery method.
//!
//! cargo run --release --example hover_attack -- [attack] [seed]

use mars_sim::attacks::{AttackKind, AttackProfile};
use mars_sim::harness::{run_scenario, RecoveryMethod};
use mars_sim::SimConfig;

fn main() -> mars_sim::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let kind: AttackKind = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(AttackKind::ArDos);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    println!("{:<6} {:>9} {:>10} {:>10} {:>9} {:>9} {:>7}", "method", "survived", "t_surv", "rms_clean", "rms_atk", "response", "brakes");
    for method in RecoveryMethod::ALL {
        let mut cfg = SimConfig::default();
        cfg.attack = AttackProfile::of_kind(kind, 10.0, 30.0);
        cfg.scenario.duration = 40.0;
        cfg.scenario.seed = seed;
        cfg.scenario.recovery = method;
        let m = run_scenario(&cfg)?.metrics;
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        println!(
            "{:<6} {:>9} {:>10.2} {:>10} {:>9} {:>9} {:>7}",
            method.name(),
            m.survived,
            m.survival_time,
            f(m.rotor_rms_clean),
            f(m.rotor_rms_attack),
            f(m.detector_response_time),
            m.brake_count
        );
    }
    Ok(())
}
