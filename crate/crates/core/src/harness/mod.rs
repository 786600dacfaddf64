//! Closed-loop scenarios, batch sweeps and detector datasets.

pub mod datasets;
pub mod lpf;
pub mod metrics;
pub mod mission;
pub mod run;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lpf::{Biquad, ImuLowPass};
pub use metrics::RunMetrics;
pub use mission::{Mission, MissionConfig, MissionKind, MissionTracker, Waypoint};
pub use run::{run_scenario, Event, FilterHealth, LogRow, RunResult};

/// How the vehicle responds to a corrupted IMU.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMethod {
    /// Detector plus recovery state machine.
    Mars,
    /// Low-pass filter the IMU ahead of the standard estimator.
    Lpf,
    /// Standard estimator only.
    None,
}

impl RecoveryMethod {
    pub const ALL: [RecoveryMethod; 3] = [RecoveryMethod::Mars, RecoveryMethod::Lpf, RecoveryMethod::None];

    pub fn name(&self) -> &'static str {
        match self {
            RecoveryMethod::Mars => "mars",
            RecoveryMethod::Lpf => "lpf",
            RecoveryMethod::None => "none",
        }
    }
}

impl std::str::FromStr for RecoveryMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown recovery method `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Simulated time, s.
    pub duration: f64,
    pub seed: u64,
    pub recovery: RecoveryMethod,
    /// Low-pass cutoff for the `lpf` method, Hz.
    pub lpf_cutoff: f64,
    /// Roll or pitch beyond this, rad, held for `crash_tilt_time`, is a crash.
    pub crash_tilt: f64,
    pub crash_tilt_time: f64,
    /// Keep the per-tick time series in memory.
    pub record_log: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        crate::config::SimConfig::default().scenario
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.duration > 0.0
            && self.duration.is_finite()
            && self.lpf_cutoff > 0.0
            && self.crash_tilt > 0.0
            && self.crash_tilt < std::f64::consts::PI
            && self.crash_tilt_time >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid scenario `{}`", self.name)))
        }
    }
}
