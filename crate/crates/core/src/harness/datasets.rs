//! Labeled detector datasets from closed-loop hover flights.

use std::path::Path;

use rayon::prelude::*;

use super::run::run_scenario;
use super::RecoveryMethod;
use crate::attacks::{AttackKind, AttackProfile};
use crate::config::SimConfig;
use crate::detection::roc::Dataset;
use crate::error::Result;
use crate::harness::MissionKind;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetPlan {
    pub attacks: Vec<AttackKind>,
    pub seeds: Vec<u64>,
    pub duration: f64,
    pub attack_start: f64,
    /// Amplitude scale for the step and ramp variants.
    pub scale_k: f64,
}

impl Default for DatasetPlan {
    fn default() -> Self {
        Self { attacks: AttackKind::BENCHMARK.to_vec(), seeds: (1..=10).collect(), duration: 40.0, attack_start: 20.0, scale_k: 1.0 }
    }
}

impl DatasetPlan {
    /// The hover scenario behind one dataset, with recovery active.
    pub fn config(&self, base: &SimConfig, kind: AttackKind, seed: u64) -> SimConfig {
        let mut cfg = base.clone();
        cfg.mission.kind = MissionKind::Hover;
        cfg.attack = AttackProfile { scale_k: self.scale_k, ..AttackProfile::of_kind(kind, self.attack_start, self.duration) };
        cfg.scenario.duration = self.duration;
        cfg.scenario.seed = seed;
        cfg.scenario.recovery = RecoveryMethod::Mars;
        cfg.scenario.record_log = false;
        cfg.scenario.name = if self.scale_k == 1.0 {
            format!("{}_seed{}", kind.name(), seed)
        } else {
            format!("{}_k{}_seed{}", kind.name(), self.scale_k, seed)
        };
        cfg
    }

    /// Fly every attack and seed. Flights that crash keep the samples they
    /// produced.
    pub fn generate(&self, base: &SimConfig) -> Result<Vec<Dataset>> {
        let jobs: Vec<(AttackKind, u64)> =
            self.attacks.iter().flat_map(|&k| self.seeds.iter().map(move |&s| (k, s))).collect();
        jobs.into_par_iter()
            .map(|(k, s)| {
                let cfg = self.config(base, k, s);
                let res = run_scenario(&cfg)?;
                Dataset::new(cfg.scenario.name, res.samples)
            })
            .collect()
    }
}

pub fn write_datasets(sets: &[Dataset], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    for d in sets {
        d.write_csv(dir.join(format!("{}.csv", d.name)))?;
    }
    Ok(())
}
