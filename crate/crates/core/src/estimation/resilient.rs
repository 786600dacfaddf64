//! IMU-free estimator driven by tachometer wrench estimates.

use nalgebra::Vector3;

use super::ekf::{ekf_predict, ekf_update_masked, EkfBelief, Innovation, JacobianMode, ObsMask};
use super::wrench::{estimate_wrench, WrenchCompensation};
use super::EstimationConfig;
use crate::dynamics::{BodyWrench, RotorSpeeds, VehicleParams, VehicleState};
use crate::error::Result;
use crate::sensors::{SensorFrame, SensorNoiseSpec};

/// Each step predicts with the wrench computed on the previous step, fuses any
/// fresh GPS/compass sample, then evaluates the wrench for the next step from
/// the tachometers, the filter's own velocity and its posterior heading.
#[derive(Clone, Debug)]
pub struct ResilientEstimator {
    belief: EkfBelief,
    params: VehicleParams,
    comp: WrenchCompensation,
    mode: JacobianMode,
    last_t: Option<f64>,
    wrench: Option<BodyWrench>,
    innovation: Option<Innovation>,
}

impl ResilientEstimator {
    pub fn new(
        truth: &VehicleState,
        params: &VehicleParams,
        cfg: &EstimationConfig,
        noise: &SensorNoiseSpec,
    ) -> Self {
        Self {
            belief: cfg.initial_belief(truth, &cfg.resilient_process, noise),
            params: params.clone(),
            comp: cfg.compensation.clone(),
            mode: cfg.jacobian,
            last_t: None,
            wrench: None,
            innovation: None,
        }
    }

    pub fn belief(&self) -> &EkfBelief {
        &self.belief
    }

    /// Wrench evaluated on the latest step.
    pub fn wrench(&self) -> Option<&BodyWrench> {
        self.wrench.as_ref()
    }

    pub fn innovation(&self) -> Option<&Innovation> {
        self.innovation.as_ref()
    }

    pub fn compensation(&self) -> &WrenchCompensation {
        &self.comp
    }

    pub fn step(&mut self, frame: &SensorFrame) -> Result<&EkfBelief> {
        self.innovation = None;
        if let (Some(t0), Some(u)) = (self.last_t, self.wrench) {
            let dt = frame.t - t0;
            if dt > 0.0 {
                self.belief = ekf_predict(&self.belief, &u, dt, &self.params, self.mode)?;
            }
        }
        self.last_t = Some(frame.t);
        let mask = ObsMask { gps: frame.fresh.gps, compass: frame.fresh.compass };
        if mask.any() {
            let (b, innov) = ekf_update_masked(&self.belief, &frame.observation(), mask)?;
            self.belief = b;
            self.innovation = Some(innov);
        }
        let speeds = RotorSpeeds(frame.rotor_speeds.map(|w| w.clamp(0.0, self.params.speed_max)));
        let state = self.belief.state();
        let v: Vector3<f64> = state.velocity;
        self.wrench = Some(estimate_wrench(&speeds, &v, state.attitude.yaw(), &self.params, &self.comp)?);
        Ok(&self.belief)
    }
}
