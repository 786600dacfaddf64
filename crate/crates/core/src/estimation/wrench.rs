//! Tachometer-driven wrench estimation with dynamic torque compensation.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{net_wrench, BodyWrench, Quaternion, RotorSpeeds, VehicleParams};
use crate::error::{ensure_finite, Error, Result};

/// `τ_cp = τ + K_cp ⊙ V_C^B + τ_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrenchCompensation {
    /// N·m per m/s, per body axis.
    pub k_cp: [f64; 3],
    /// N·m
    pub tau_b: [f64; 3],
}

impl WrenchCompensation {
    pub fn none() -> Self {
        Self { k_cp: [0.0; 3], tau_b: [0.0; 3] }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("wrench compensation", &[self.k_cp.as_slice(), self.tau_b.as_slice()].concat())?;
        if self.k_cp.iter().any(|k| *k < 0.0) {
            return Err(Error::Config("compensation gains k_cp must be >= 0".into()));
        }
        Ok(())
    }
}

/// Body wrench implied by the measured rotor speeds.
///
/// Every rotor sees the vehicle's earth-frame velocity and the body
/// projection uses the heading alone.
pub fn estimate_wrench(
    speeds: &RotorSpeeds,
    earth_velocity: &Vector3<f64>,
    yaw: f64,
    params: &VehicleParams,
    comp: &WrenchCompensation,
) -> Result<BodyWrench> {
    ensure_finite("earth velocity", earth_velocity.as_slice())?;
    ensure_finite("yaw", &[yaw])?;
    let heading = Quaternion::from_euler(0.0, 0.0, yaw);
    let mut w = net_wrench(speeds, &[*earth_velocity; 4], &heading, params)?;
    let v_body = heading.inverse_rotate_vector(earth_velocity);
    w.torque += Vector3::from(comp.k_cp).component_mul(&v_body) + Vector3::from(comp.tau_b);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hover_at_rest_is_pure_thrust() {
        let p = VehicleParams::default();
        let w_star = p.hover_speed();
        let comp = WrenchCompensation { k_cp: [0.3, 0.2, 0.1], tau_b: [0.0; 3] };
        let w = estimate_wrench(&RotorSpeeds::uniform(w_star), &Vector3::zeros(), 0.7, &p, &comp).unwrap();
        assert_relative_eq!(w.force, Vector3::new(0.0, 0.0, -4.0 * p.lift_coefficient * w_star * w_star), epsilon = 1e-9);
        assert_relative_eq!(w.torque, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn zero_compensation_is_raw_model() {
        let p = VehicleParams::default();
        let speeds = RotorSpeeds([600.0, 620.0, 590.0, 610.0]);
        let v = Vector3::new(1.0, -0.5, 0.2);
        let yaw = 1.1;
        let w = estimate_wrench(&speeds, &v, yaw, &p, &WrenchCompensation::none()).unwrap();
        let raw = net_wrench(&speeds, &[v; 4], &Quaternion::from_euler(0.0, 0.0, yaw), &p).unwrap();
        assert_eq!(w, raw);
    }

    #[test]
    fn compensation_acts_on_heading_frame_velocity() {
        let p = VehicleParams::default();
        let speeds = RotorSpeeds::uniform(600.0);
        let v = Vector3::new(0.0, 1.0, 0.0);
        let comp = WrenchCompensation { k_cp: [0.5, 0.25, 0.0], tau_b: [0.0, 0.0, 0.01] };
        let base = estimate_wrench(&speeds, &v, std::f64::consts::FRAC_PI_2, &p, &WrenchCompensation::none()).unwrap();
        let w = estimate_wrench(&speeds, &v, std::f64::consts::FRAC_PI_2, &p, &comp).unwrap();
        // Facing east, an eastward velocity is purely forward in the heading frame.
        assert_relative_eq!(w.torque - base.torque, Vector3::new(0.5, 0.0, 0.01), epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = VehicleParams::default();
        let comp = WrenchCompensation::none();
        let s = RotorSpeeds::uniform(600.0);
        assert!(estimate_wrench(&s, &Vector3::new(f64::NAN, 0.0, 0.0), 0.0, &p, &comp).is_err());
        assert!(estimate_wrench(&RotorSpeeds([-1.0, 600.0, 600.0, 600.0]), &Vector3::zeros(), 0.0, &p, &comp).is_err());
        assert!(WrenchCompensation { k_cp: [-1.0, 0.0, 0.0], tau_b: [0.0; 3] }.validate().is_err());
    }
}
