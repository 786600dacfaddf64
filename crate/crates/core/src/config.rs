//! Layered TOML configuration: the embedded defaults with a user file
//! deep-merged on top.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacks::AttackProfile;
use crate::dynamics::VehicleParams;
use crate::error::{Error, Result};
use crate::control::ControlConfig;
use crate::detection::{BenchmarkConfig, DetectorConfig};
use crate::estimation::EstimationConfig;
use crate::harness::{MissionConfig, ScenarioConfig};
use crate::sensors::{SensorNoiseSpec, SensorSchedule};

/// The built-in default configuration text.
pub const DEFAULT_TOML: &str = include_str!("../config/default.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub noise: SensorNoiseSpec,
    pub schedule: SensorSchedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub vehicle: VehicleParams,
    pub sensors: SensorConfig,
    pub attack: AttackProfile,
    pub estimation: EstimationConfig,
    pub detector: DetectorConfig,
    pub benchmark: BenchmarkConfig,
    pub control: ControlConfig,
    pub mission: MissionConfig,
    pub scenario: ScenarioConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        let value: toml::Value = toml::from_str(DEFAULT_TOML).expect("embedded default config parses");
        value.try_into().expect("embedded default config is well-formed")
    }
}

/// Recursively overlay `top` onto `base`. Tables merge key by key; any other
/// value (arrays included) replaces the base value wholesale.
pub fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(existing) => merge(existing, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// The default configuration as a raw TOML tree.
pub fn default_value() -> toml::Value {
    toml::from_str(DEFAULT_TOML).expect("embedded default config parses")
}

/// Parse `text` as an overlay on the defaults and deserialize to `T`.
pub fn from_overlay<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let mut base = default_value();
    let top: toml::Value = toml::from_str(text)?;
    merge(&mut base, top);
    base.try_into().map_err(Error::from)
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = from_overlay(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.sensors.noise.validate()?;
        crate::sensors::Scheduler::new(self.sensors.schedule.clone())?;
        self.attack.validate()?;
        self.estimation.validate()?;
        self.detector.validate()?;
        self.benchmark.validate()?;
        self.control.validate()?;
        crate::harness::Mission::from_config(&self.mission)?;
        self.scenario.validate()?;
        Ok(())
    }
}
