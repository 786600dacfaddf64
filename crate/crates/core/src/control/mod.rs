//! Flight control: the PID cascade, control allocation, rotor lag and the
//! recovery phase machine.

pub mod cascade;
pub mod mixer;
pub mod recovery;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cascade::{attitude_controller, thrust_to_attitude, CascadeController, CascadeOutput};
pub use mixer::{allocation_matrix, mixer, motor_lag, MixerOutput};
pub use recovery::{EstimatorSelect, RecoveryCommand, RecoveryMachine, RecoveryPhase, Transition};

/// Position/heading target with optional velocity feed-forward (NED).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Setpoint {
    pub position: Vector3<f64>,
    pub yaw: f64,
    pub velocity: Vector3<f64>,
}

impl Setpoint {
    pub fn hold(position: Vector3<f64>, yaw: f64) -> Self {
        Self { position, yaw, velocity: Vector3::zeros() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    /// Position error → velocity demand, 1/s.
    pub pos_p: [f64; 3],
    pub vel_p: [f64; 3],
    pub vel_i: [f64; 3],
    pub vel_d: [f64; 3],
    pub vel_i_limit: f64,
    /// Attitude error → rate demand, 1/s.
    pub att_p: [f64; 3],
    /// Rate error → angular acceleration.
    pub rate_p: [f64; 3],
    pub rate_i: [f64; 3],
    pub rate_d: [f64; 3],
    pub rate_i_limit: f64,
    /// rad
    pub max_tilt: f64,
    /// N
    pub max_thrust: f64,
    /// rad/s
    pub max_rate: [f64; 3],
    /// m/s
    pub max_speed_xy: f64,
    /// m/s
    pub max_speed_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    /// When false an alarm never leaves the Normal phase.
    pub enabled: bool,
    /// Brake → HoverRestore below this speed, m/s.
    pub v_brake_exit: f64,
    /// Hover criterion speed, m/s.
    pub v_hover: f64,
    /// Hover criterion duration, s.
    pub t_hover: f64,
    /// Speed limit in RecoveredFlight, m/s.
    pub recovered_speed_cap: Option<f64>,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        crate::config::SimConfig::default().control.recovery
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub gains: ControllerGains,
    /// Position stage runs every this many ticks (5 at 250 Hz gives 50 Hz).
    pub position_divider: u64,
    /// Rotor first-order lag, s.
    pub motor_time_constant: f64,
    pub recovery: RecoveryConfig,
}

impl Default for ControlConfig {
    fn default() -> Self {
        crate::config::SimConfig::default().control
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.gains;
        let vecs = [g.pos_p, g.vel_p, g.vel_i, g.vel_d, g.att_p, g.rate_p, g.rate_i, g.rate_d, g.max_rate];
        if vecs.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("control gains must be finite and >= 0".into()));
        }
        let limits = [g.max_tilt, g.max_thrust, g.max_speed_xy, g.max_speed_z, g.vel_i_limit, g.rate_i_limit];
        if limits.iter().any(|v| !(v.is_finite() && *v > 0.0)) || g.max_rate.iter().any(|v| *v <= 0.0) {
            return Err(Error::Config("control limits must be positive".into()));
        }
        if g.max_tilt >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Config("max_tilt must be below 90 degrees".into()));
        }
        if self.position_divider == 0 || self.motor_time_constant < 0.0 {
            return Err(Error::Config("position_divider >= 1 and motor_time_constant >= 0 required".into()));
        }
        let r = &self.recovery;
        if !(r.v_brake_exit > 0.0 && r.v_hover > 0.0 && r.t_hover >= 0.0) || r.recovered_speed_cap.is_some_and(|c| c <= 0.0) {
            return Err(Error::Config("recovery thresholds must be positive".into()));
        }
        Ok(())
    }
}
