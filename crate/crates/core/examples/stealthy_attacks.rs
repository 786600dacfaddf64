//! Scaled-down step and ramp attacks: how each detector's ROC holds up as
//! the injected amplitude shrinks.
//!
//! cargo run --release --example stealthy_attacks -- [step|ramp] [seeds]

use mars_sim::attacks::AttackKind;
use mars_sim::detection::roc::{default_thresholds, roc_eval, DetectorKind};
use mars_sim::harness::datasets::DatasetPlan;
use mars_sim::SimConfig;

fn main() -> mars_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind = match args.next().as_deref() {
        Some("ramp") => AttackKind::RampAmplitude,
        _ => AttackKind::StepAmplitude,
    };
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let cfg = SimConfig::default();

    println!("{:<5} {:<6} {:>9} {:>7}", "k", "det", "TPR@1%", "AUC");
    for k in [1.0, 0.5, 0.25] {
        let plan = DatasetPlan { attacks: vec![kind], seeds: (1..=seeds).collect(), scale_k: k, ..DatasetPlan::default() };
        let sets = plan.generate(&cfg)?;
        for det in [DetectorKind::Mars, DetectorKind::Cusum, DetectorKind::Chi2] {
            let rep = roc_eval(&sets, det, &default_thresholds(det), &cfg.detector, &cfg.benchmark)?;
            println!("{:<5} {:<6} {:>9.4} {:>7.4}", k, det.name(), rep.tpr_at(0.01), rep.auc());
        }
    }
    Ok(())
}
