//! State estimation: the IMU-driven standard EKF and the resilient EKF that
//! never reads the IMU and instead propagates with tachometer-derived wrenches.

pub mod ekf;
pub mod resilient;
pub mod standard;
pub mod wrench;

use serde::{Deserialize, Serialize};

use crate::dynamics::state::{POS, QUAT, RATE, VEL};
use crate::dynamics::{StateMatrix, VehicleState};
use crate::error::{Error, Result};
use crate::sensors::SensorNoiseSpec;

pub use ekf::{
    ekf_predict, ekf_update, ekf_update_masked, observation_jacobian, observe, EkfBelief,
    Innovation, JacobianMode, ObsMask, ObsMatrix, ObsVector, OBS_DIM,
};
pub use resilient::ResilientEstimator;
pub use standard::StandardEstimator;
pub use wrench::{estimate_wrench, WrenchCompensation};

/// Per-block standard deviations of a 13-state diagonal covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockStd {
    pub pos: f64,
    pub vel: f64,
    /// Per quaternion component.
    pub att: f64,
    pub rate: f64,
}

impl BlockStd {
    pub fn covariance(&self) -> StateMatrix {
        let mut m = StateMatrix::zeros();
        let blocks = [(POS, 3, self.pos), (VEL, 3, self.vel), (QUAT, 4, self.att), (RATE, 3, self.rate)];
        for (start, len, s) in blocks {
            for i in start..start + len {
                m[(i, i)] = s * s;
            }
        }
        m
    }

    fn validate(&self, what: &str) -> Result<()> {
        if [self.pos, self.vel, self.att, self.rate].iter().all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!("estimation.{what}: standard deviations must be finite and >= 0")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    pub jacobian: JacobianMode,
    /// Process noise per predict step of the IMU-driven filter.
    pub standard_process: BlockStd,
    /// Process noise per predict step of the wrench-driven filter.
    pub resilient_process: BlockStd,
    /// Initial belief spread around the true state.
    pub initial: BlockStd,
    /// Multiplier on the sensor-derived observation covariance.
    pub measurement_scale: f64,
    pub compensation: WrenchCompensation,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        crate::config::SimConfig::default().estimation
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        self.standard_process.validate("standard_process")?;
        self.resilient_process.validate("resilient_process")?;
        self.initial.validate("initial")?;
        if !(self.measurement_scale.is_finite() && self.measurement_scale > 0.0) {
            return Err(Error::Config("estimation.measurement_scale must be positive".into()));
        }
        self.compensation.validate()
    }

    /// `R = scale · diag(σ_gps_pos², σ_gps_vel², σ_compass²)`, floored so a
    /// noiseless sensor model still gives an invertible innovation covariance.
    pub fn observation_covariance(&self, noise: &SensorNoiseSpec) -> ObsMatrix {
        let floor = 1e-10;
        let var = |s: f64| (s * s).max(floor) * self.measurement_scale;
        let mut r = ObsMatrix::zeros();
        for i in 0..3 {
            r[(i, i)] = var(noise.gps_pos_std);
            r[(i + 3, i + 3)] = var(noise.gps_vel_std);
        }
        r[(6, 6)] = var(noise.compass_std);
        r
    }

    pub(crate) fn initial_belief(&self, truth: &VehicleState, q: &BlockStd, noise: &SensorNoiseSpec) -> EkfBelief {
        EkfBelief::new(truth, self.initial.covariance(), q.covariance(), self.observation_covariance(noise))
    }
}
