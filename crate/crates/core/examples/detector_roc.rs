//! Offline detector comparison: fly the labeled hover datasets, then sweep
//! each detector's threshold and report TPR at 1% FPR, ROC area and
//! response time per attack.
//!
//! cargo run --release --example detector_roc -- [seeds] [dataset dir to write]

use mars_sim::attacks::AttackKind;
use mars_sim::detection::roc::{default_thresholds, roc_eval, DetectorKind};
use mars_sim::harness::datasets::{write_datasets, DatasetPlan};
use mars_sim::SimConfig;

fn main() -> mars_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let out = args.next();
    let cfg = SimConfig::default();
    let plan = DatasetPlan { seeds: (1..=seeds).collect(), ..DatasetPlan::default() };
    let sets = plan.generate(&cfg)?;
    if let Some(dir) = out {
        write_datasets(&sets, dir)?;
    }

    println!("{:<15} {:<6} {:>9} {:>7} {:>10}", "attack", "det", "TPR@1%", "AUC", "response");
    for kind in AttackKind::BENCHMARK {
        let subset: Vec<_> = sets.iter().filter(|d| d.name.starts_with(kind.name())).cloned().collect();
        for det in [DetectorKind::Mars, DetectorKind::Cusum, DetectorKind::Chi2] {
            let rep = roc_eval(&subset, det, &default_thresholds(det), &cfg.detector, &cfg.benchmark)?;
            let op = rep.operating_point(0.01);
            println!(
                "{:<15} {:<6} {:>9.4} {:>7.4} {:>10}",
                kind.name(),
                det.name(),
                op.map_or(0.0, |p| p.tpr),
                rep.auc(),
                op.and_then(|p| p.mean_response).map_or("-".into(), |r| format!("{r:.3}"))
            );
        }
    }
    Ok(())
}
