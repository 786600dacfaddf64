use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Earth-frame aerodynamic drag: `f_a = [-kdx vx, -kdy vy, -kdz vz + kh (vx² + vy²)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragCoefficients {
    /// N·s/m
    pub kdx: f64,
    /// N·s/m
    pub kdy: f64,
    /// N·s/m
    pub kdz: f64,
    /// N·s²/m²
    pub kh: f64,
}

impl DragCoefficients {
    pub fn zero() -> Self {
        Self { kdx: 0.0, kdy: 0.0, kdz: 0.0, kh: 0.0 }
    }

    pub fn force(&self, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            -self.kdx * v.x,
            -self.kdy * v.y,
            -self.kdz * v.z + self.kh * (v.x * v.x + v.y * v.y),
        )
    }

    /// ∂f_a/∂v
    pub fn jacobian(&self, v: &Vector3<f64>) -> Matrix3<f64> {
        Matrix3::new(
            -self.kdx,
            0.0,
            0.0,
            0.0,
            -self.kdy,
            0.0,
            2.0 * self.kh * v.x,
            2.0 * self.kh * v.y,
            -self.kdz,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotorGeometry {
    /// Rotor hub position relative to the center of mass, body frame, m.
    pub arm: [f64; 3],
    /// +1 counter-clockwise, −1 clockwise.
    pub spin: f64,
}

impl RotorGeometry {
    pub fn arm_vector(&self) -> Vector3<f64> {
        Vector3::from(self.arm)
    }
}

/// Rigid-body and rotor-aerodynamic constants of the airframe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// kg·m², body frame
    pub inertia: [[f64; 3]; 3],
    /// m/s², positive down
    pub gravity: f64,
    pub drag: DragCoefficients,
    /// Rotor lift coefficient `a`, N·s²/rad².
    pub lift_coefficient: f64,
    /// Rotor drag-torque coefficient `b`, N·m·s²/rad².
    pub torque_coefficient: f64,
    /// Force cross-coupling coefficients λ1..λ4.
    pub lambda: [f64; 4],
    /// Moment cross-coupling coefficients μ1..μ4.
    pub mu: [f64; 4],
    pub rotors: [RotorGeometry; 4],
    /// rad/s
    pub speed_min: f64,
    /// rad/s
    pub speed_max: f64,
    /// When set, the plant adds `Ω × CA_i` to each rotor's velocity.
    #[serde(default = "default_true")]
    pub rotor_rate_coupling: bool,
}

fn default_true() -> bool {
    true
}

impl Default for VehicleParams {
    fn default() -> Self {
        crate::config::SimConfig::default().vehicle
    }
}

impl VehicleParams {
    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.inertia[r][c])
    }

    pub fn gravity_vector(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.gravity)
    }

    /// Equal rotor speed producing `m·g` of lift.
    pub fn hover_speed(&self) -> f64 {
        (self.mass * self.gravity / (4.0 * self.lift_coefficient)).sqrt()
    }

    /// True when the rotor arms sum to zero.
    pub fn is_symmetric(&self) -> bool {
        let sum: Vector3<f64> = self.rotors.iter().map(RotorGeometry::arm_vector).sum();
        sum.norm() < 1e-9
    }

    pub fn validate(&self) -> Result<()> {
        let mut scalars = vec![
            self.mass,
            self.gravity,
            self.lift_coefficient,
            self.torque_coefficient,
            self.speed_min,
            self.speed_max,
            self.drag.kdx,
            self.drag.kdy,
            self.drag.kdz,
            self.drag.kh,
        ];
        scalars.extend(self.lambda);
        scalars.extend(self.mu);
        scalars.extend(self.inertia.iter().flatten());
        for r in &self.rotors {
            scalars.extend(r.arm);
            scalars.push(r.spin);
        }
        ensure_finite("vehicle parameters", &scalars).map_err(|e| Error::Config(e.to_string()))?;

        if self.mass <= 0.0 {
            return Err(Error::Config("vehicle.mass must be positive".into()));
        }
        if self.lift_coefficient <= 0.0 || self.torque_coefficient <= 0.0 {
            return Err(Error::Config(
                "vehicle.lift_coefficient and vehicle.torque_coefficient must be positive".into(),
            ));
        }
        let inertia = self.inertia_matrix();
        if (inertia - inertia.transpose()).abs().max() > 1e-12 || inertia.cholesky().is_none() {
            return Err(Error::Config(
                "vehicle.inertia must be symmetric positive-definite".into(),
            ));
        }
        let ccw = self.rotors.iter().filter(|r| r.spin == 1.0).count();
        let cw = self.rotors.iter().filter(|r| r.spin == -1.0).count();
        if ccw != 2 || cw != 2 {
            return Err(Error::Config(
                "vehicle.rotors needs exactly two spin = +1 and two spin = -1".into(),
            ));
        }
        if !(0.0 <= self.speed_min && self.speed_min < self.speed_max) {
            return Err(Error::Config("vehicle speed limits must satisfy 0 <= min < max".into()));
        }
        Ok(())
    }
}
