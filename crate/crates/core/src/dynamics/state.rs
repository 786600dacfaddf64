use nalgebra::{SMatrix, SVector, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::quaternion::Quaternion;

pub const STATE_DIM: usize = 13;

/// `[x, y, z, vx, vy, vz, qw, qx, qy, qz, Ωx, Ωy, Ωz]`
pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;

pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const QUAT: usize = 6;
pub const RATE: usize = 10;

/// Ground-truth rigid-body state. Position and velocity are NED earth-frame,
/// the attitude rotates body (FRD) vectors into the earth frame, and the
/// angular velocity is expressed in the body frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: Quaternion,
    pub angular_velocity: Vector3<f64>,
}

impl Default for VehicleState {
    fn default() -> Self {
        Self {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            attitude: Quaternion::IDENTITY,
            angular_velocity: Vector3::zeros(),
        }
    }
}

impl VehicleState {
    /// Level, motionless state at `position` facing `yaw`.
    pub fn hover_at(position: Vector3<f64>, yaw: f64) -> Self {
        Self {
            position,
            attitude: Quaternion::from_euler(0.0, 0.0, yaw),
            ..Self::default()
        }
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(POS).copy_from(&self.position);
        x.fixed_rows_mut::<3>(VEL).copy_from(&self.velocity);
        x.fixed_rows_mut::<4>(QUAT).copy_from(&self.attitude.to_vector());
        x.fixed_rows_mut::<3>(RATE).copy_from(&self.angular_velocity);
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            position: x.fixed_rows::<3>(POS).into_owned(),
            velocity: x.fixed_rows::<3>(VEL).into_owned(),
            attitude: Quaternion::from_vector(&Vector4::from(x.fixed_rows::<4>(QUAT))),
            angular_velocity: x.fixed_rows::<3>(RATE).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

pub(crate) fn quaternion_of(x: &StateVector) -> Quaternion {
    Quaternion::new(x[QUAT], x[QUAT + 1], x[QUAT + 2], x[QUAT + 3])
}

/// Renormalize the quaternion block of a state vector in place.
pub(crate) fn normalize_quaternion(x: &mut StateVector) {
    let n = x.fixed_rows::<4>(QUAT).norm();
    if n > 0.0 {
        x.fixed_rows_mut::<4>(QUAT).unscale_mut(n);
    }
}
