//! Per-rotor aerodynamic force/moment model and the net body wrench.
//!
//! Every vector is expressed in the body frame. Earth-frame rotor velocities are
//! rotated into the body frame first, then split into the component along the
//! body-down axis `k_b` and the in-plane (perpendicular) part.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::params::VehicleParams;
use super::quaternion::Quaternion;
use super::state::VehicleState;
use crate::error::{ensure_finite, Error, Result};

const K_B: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

/// Rotor angular speeds, rad/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotorSpeeds(pub [f64; 4]);

impl RotorSpeeds {
    pub fn uniform(speed: f64) -> Self {
        RotorSpeeds([speed; 4])
    }

    pub fn validate(&self, params: &VehicleParams) -> Result<()> {
        ensure_finite("rotor speeds", &self.0)?;
        if self.0.iter().any(|&w| w < 0.0 || w > params.speed_max + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "rotor speeds {:?} outside [0, {}]",
                self.0, params.speed_max
            )));
        }
        Ok(())
    }
}

/// Net thrust and torque applied at the center of mass, body frame.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyWrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl BodyWrench {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }
}

/// Force and moment of a single rotor.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RotorWrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

fn perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    v - K_B * v.dot(&K_B)
}

fn check_inputs(omega: f64, spin: f64, v: &Vector3<f64>, extra: &[f64]) -> Result<()> {
    ensure_finite("rotor inputs", &[omega, spin, v.x, v.y, v.z])?;
    ensure_finite("rotor inputs", extra)?;
    if omega < 0.0 {
        return Err(Error::InvalidInput(format!("negative rotor speed {omega}")));
    }
    Ok(())
}

/// Full rotor model with body-rate coupling and in-plane projections.
///
/// `rotor_velocity` is the earth-frame velocity of the rotor hub, `attitude`
/// rotates it into the body frame.
pub fn rotor_wrench_full(
    omega: f64,
    spin: f64,
    rotor_velocity: &Vector3<f64>,
    body_rates: &Vector3<f64>,
    attitude: &Quaternion,
    params: &VehicleParams,
) -> Result<RotorWrench> {
    check_inputs(
        omega,
        spin,
        rotor_velocity,
        &[body_rates.x, body_rates.y, body_rates.z, attitude.w, attitude.x, attitude.y, attitude.z],
    )?;
    let [l1, l2, l3, l4] = params.lambda;
    let [m1, m2, m3, m4] = params.mu;
    let v = attitude.inverse_rotate_vector(rotor_velocity);
    let v_perp = perpendicular(&v);
    let w_perp = perpendicular(body_rates);
    let v_cross_k = v.cross(&K_B);
    let w_cross_k = body_rates.cross(&K_B);
    let w2 = omega * omega;

    let force = -K_B * (params.lift_coefficient * w2) - (v_perp * l1 - w_cross_k * l2) * omega
        + (v_cross_k * l3 - w_perp * l4) * (spin * omega);
    let moment = -K_B * (params.torque_coefficient * spin * w2)
        - (v_perp * m1 + w_cross_k * m2) * omega
        - (v_cross_k * m3 + w_perp * m4) * (spin * omega);
    Ok(RotorWrench { force, moment })
}

/// Near-hover rotor model: body-rate terms dropped.
pub fn rotor_wrench_near_hover(
    omega: f64,
    spin: f64,
    rotor_velocity: &Vector3<f64>,
    attitude: &Quaternion,
    params: &VehicleParams,
) -> Result<RotorWrench> {
    check_inputs(omega, spin, rotor_velocity, &[attitude.w, attitude.x, attitude.y, attitude.z])?;
    let [l1, _, l3, _] = params.lambda;
    let [m1, _, m3, _] = params.mu;
    let v = attitude.inverse_rotate_vector(rotor_velocity);
    let v_perp = perpendicular(&v);
    let v_cross_k = v.cross(&K_B);
    let w2 = omega * omega;

    let force = -K_B * (params.lift_coefficient * w2) - v_perp * (omega * l1)
        + v_cross_k * (spin * omega * l3);
    let moment = -K_B * (params.torque_coefficient * spin * w2)
        - v_perp * (omega * m1)
        - v_cross_k * (spin * omega * m3);
    Ok(RotorWrench { force, moment })
}

/// Sum per-rotor contributions: `f = Σ F_i`, `τ = Σ CA_i × F_i + M_i`.
pub fn sum_rotor_wrenches(rotors: &[RotorWrench; 4], params: &VehicleParams) -> BodyWrench {
    let mut w = BodyWrench::zero();
    for (rw, geom) in rotors.iter().zip(params.rotors.iter()) {
        w.force += rw.force;
        w.torque += geom.arm_vector().cross(&rw.force) + rw.moment;
    }
    w
}

/// Net wrench from the near-hover rotor model.
pub fn net_wrench(
    speeds: &RotorSpeeds,
    rotor_velocities: &[Vector3<f64>; 4],
    attitude: &Quaternion,
    params: &VehicleParams,
) -> Result<BodyWrench> {
    speeds.validate(params)?;
    let mut per_rotor = [RotorWrench::default(); 4];
    for i in 0..4 {
        per_rotor[i] = rotor_wrench_near_hover(
            speeds.0[i],
            params.rotors[i].spin,
            &rotor_velocities[i],
            attitude,
            params,
        )?;
    }
    Ok(sum_rotor_wrenches(&per_rotor, params))
}

/// Ground-truth wrench acting on the plant: full rotor model, with hub
/// velocities `v + R (Ω × CA_i)` when rotor-rate coupling is enabled.
pub fn plant_wrench(
    speeds: &RotorSpeeds,
    state: &VehicleState,
    params: &VehicleParams,
) -> Result<BodyWrench> {
    speeds.validate(params)?;
    let mut per_rotor = [RotorWrench::default(); 4];
    for (i, geom) in params.rotors.iter().enumerate() {
        let mut hub_velocity = state.velocity;
        if params.rotor_rate_coupling {
            hub_velocity += state
                .attitude
                .rotate_vector(&state.angular_velocity.cross(&geom.arm_vector()));
        }
        per_rotor[i] = rotor_wrench_full(
            speeds.0[i],
            geom.spin,
            &hub_velocity,
            &state.angular_velocity,
            &state.attitude,
            params,
        )?;
    }
    Ok(sum_rotor_wrenches(&per_rotor, params))
}
