//! GPS/IMU fusion by strapdown mechanization.

use nalgebra::Vector3;

use super::ekf::{ekf_update_masked, predict_with, EkfBelief, Innovation, ObsMask};
use super::EstimationConfig;
use crate::dynamics::state::{normalize_quaternion, quaternion_of, POS, QUAT, RATE, VEL};
use crate::dynamics::{Quaternion, StateVector, VehicleState};
use crate::error::Result;
use crate::sensors::{SensorFrame, SensorNoiseSpec};

/// One mechanization step: the accelerometer (rotated to earth, gravity
/// restored) drives velocity and the gyroscope drives attitude.
pub fn mechanize(
    x: &StateVector,
    accel: &Vector3<f64>,
    gyro: &Vector3<f64>,
    gravity: &Vector3<f64>,
    dt: f64,
) -> StateVector {
    let q = quaternion_of(x);
    let a = q.rotate_vector(accel) + gravity;
    let v = x.fixed_rows::<3>(VEL).into_owned();
    let mut out = *x;
    out.fixed_rows_mut::<3>(POS).copy_from(&(x.fixed_rows::<3>(POS) + v * dt + a * (0.5 * dt * dt)));
    out.fixed_rows_mut::<3>(VEL).copy_from(&(v + a * dt));
    let q_next = q.multiply(&Quaternion::from_rotation_vector(&(gyro * dt)));
    out.fixed_rows_mut::<4>(QUAT).copy_from(&q_next.to_vector());
    out.fixed_rows_mut::<3>(RATE).copy_from(gyro);
    normalize_quaternion(&mut out);
    out
}

#[derive(Clone, Debug)]
pub struct StandardEstimator {
    belief: EkfBelief,
    gravity: Vector3<f64>,
    last_t: Option<f64>,
    innovation: Option<Innovation>,
}

impl StandardEstimator {
    pub fn new(truth: &VehicleState, gravity: f64, cfg: &EstimationConfig, noise: &SensorNoiseSpec) -> Self {
        Self {
            belief: cfg.initial_belief(truth, &cfg.standard_process, noise),
            gravity: Vector3::new(0.0, 0.0, gravity),
            last_t: None,
            innovation: None,
        }
    }

    pub fn belief(&self) -> &EkfBelief {
        &self.belief
    }

    /// Innovation of the update performed on the latest step, if any.
    pub fn innovation(&self) -> Option<&Innovation> {
        self.innovation.as_ref()
    }

    /// Restart from another estimate's state with covariance `p`.
    pub fn reinitialize(&mut self, state: &VehicleState, p: crate::dynamics::StateMatrix) {
        self.belief.x = state.to_vector();
        self.belief.p = p;
        self.innovation = None;
    }

    pub fn step(&mut self, frame: &SensorFrame) -> Result<&EkfBelief> {
        self.innovation = None;
        if let Some(t0) = self.last_t {
            let dt = frame.t - t0;
            if dt > 0.0 {
                let (a, g, grav) = (frame.accel, frame.gyro, self.gravity);
                self.belief = predict_with(&self.belief, |x| mechanize(x, &a, &g, &grav, dt), None)?;
            }
        }
        self.last_t = Some(frame.t);
        let mask = ObsMask { gps: frame.fresh.gps, compass: frame.fresh.compass };
        if mask.any() {
            let (b, innov) = ekf_update_masked(&self.belief, &frame.observation(), mask)?;
            self.belief = b;
            self.innovation = Some(innov);
        }
        Ok(&self.belief)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::VehicleParams;
    use approx::assert_relative_eq;

    #[test]
    fn mechanization_at_rest_is_stationary() {
        let s = VehicleState::hover_at(Vector3::new(0.0, 0.0, -5.0), 0.4);
        let g = Vector3::new(0.0, 0.0, 9.81);
        let x = mechanize(&s.to_vector(), &Vector3::new(0.0, 0.0, -9.81), &Vector3::zeros(), &g, 0.004);
        assert_relative_eq!(x, s.to_vector(), epsilon = 1e-12);
    }

    #[test]
    fn gps_updates_converge_on_stationary_truth() {
        use crate::sensors::{sample_compass, sample_gps};
        use rand::SeedableRng;
        let cfg = EstimationConfig::default();
        let noise = crate::config::SimConfig::default().sensors.noise;
        let params = VehicleParams::default();
        let truth = VehicleState::hover_at(Vector3::new(2.0, -1.0, -5.0), 0.0);
        let mut start = truth;
        start.position += Vector3::new(1.0, -1.0, 0.5);
        let mut est = StandardEstimator::new(&start, params.gravity, &cfg, &noise);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for k in 0..50 {
            let mut f = SensorFrame::empty(k as f64 * 0.05);
            f.accel = Vector3::new(0.0, 0.0, -params.gravity);
            let (p, v) = sample_gps(&truth, &noise, &mut rng);
            f.gps_position = p;
            f.gps_velocity = v;
            f.yaw = sample_compass(&truth, &noise, &mut rng);
            f.fresh.gps = true;
            f.fresh.compass = true;
            est.step(&f).unwrap();
        }
        let err = (est.belief().state().position - truth.position).amax();
        assert!(err < 5.0 * noise.gps_pos_std, "{err}");
    }
}
