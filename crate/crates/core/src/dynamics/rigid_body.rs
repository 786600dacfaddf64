//! Newton–Euler rigid-body model and its RK4 discretization.
//!
//! ```text
//! ξ̈ = (R f_B + f_a) / m + g
//! q̇ = ½ q ⊗ (0, Ω)
//! I Ω̇ = −Ω × IΩ + τ_B
//! ```

use nalgebra::{Matrix3, Matrix3x4, Vector3};

use super::params::VehicleParams;
use super::quaternion::{hat, Quaternion};
use super::rotor::BodyWrench;
use super::state::{
    normalize_quaternion, quaternion_of, StateMatrix, StateVector, VehicleState, POS, QUAT, RATE,
    VEL,
};
use crate::error::{Error, Result};

/// Largest step accepted by [`step_dynamics`].
pub const MAX_STEP: f64 = 0.01;

/// Time derivative of the 13-state. The quaternion is used as-is (not
/// normalized) so the derivative is smooth for the Jacobian.
pub fn state_derivative(x: &StateVector, u: &BodyWrench, params: &VehicleParams) -> StateVector {
    let q = quaternion_of(x);
    let v = x.fixed_rows::<3>(VEL).into_owned();
    let omega = x.fixed_rows::<3>(RATE).into_owned();
    let inertia = params.inertia_matrix();
    let inertia_inv = inertia.try_inverse().unwrap_or_else(Matrix3::zeros);

    let accel = (q.rotate_vector(&u.force) + params.drag.force(&v)) / params.mass
        + params.gravity_vector();
    let q_dot = q.multiply(&Quaternion::new(0.0, omega.x, omega.y, omega.z)).to_vector() * 0.5;
    let omega_dot = inertia_inv * (u.torque - omega.cross(&(inertia * omega)));

    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<3>(POS).copy_from(&v);
    dx.fixed_rows_mut::<3>(VEL).copy_from(&accel);
    dx.fixed_rows_mut::<4>(QUAT).copy_from(&q_dot);
    dx.fixed_rows_mut::<3>(RATE).copy_from(&omega_dot);
    dx
}

/// ∂(q ⊙ f)/∂q for the homogeneous rotation `(w² − u·u) f + 2 (u·f) u + 2 w u × f`.
pub fn rotated_vector_jacobian(q: &Quaternion, f: &Vector3<f64>) -> Matrix3x4<f64> {
    let u = q.vector_part();
    let w = q.w;
    let d_w = f * (2.0 * w) + u.cross(f) * 2.0;
    let d_u = -f * u.transpose() * 2.0 + (u * f.transpose() + Matrix3::identity() * u.dot(f)) * 2.0
        - hat(f) * (2.0 * w);
    let mut j = Matrix3x4::zeros();
    j.set_column(0, &d_w);
    j.fixed_columns_mut::<3>(1).copy_from(&d_u);
    j
}

/// Analytic ∂ẋ/∂x of [`state_derivative`].
pub fn continuous_jacobian(x: &StateVector, u: &BodyWrench, params: &VehicleParams) -> StateMatrix {
    let q = quaternion_of(x);
    let v = x.fixed_rows::<3>(VEL).into_owned();
    let omega = x.fixed_rows::<3>(RATE).into_owned();
    let inertia = params.inertia_matrix();
    let inertia_inv = inertia.try_inverse().unwrap_or_else(Matrix3::zeros);

    let mut a = StateMatrix::zeros();
    a.fixed_view_mut::<3, 3>(POS, VEL).copy_from(&Matrix3::identity());
    a.fixed_view_mut::<3, 3>(VEL, VEL)
        .copy_from(&(params.drag.jacobian(&v) / params.mass));
    a.fixed_view_mut::<3, 4>(VEL, QUAT)
        .copy_from(&(rotated_vector_jacobian(&q, &u.force) / params.mass));

    let rate_quat = Quaternion::new(0.0, omega.x, omega.y, omega.z);
    a.fixed_view_mut::<4, 4>(QUAT, QUAT)
        .copy_from(&(rate_quat.right_matrix() * 0.5));
    a.fixed_view_mut::<4, 3>(QUAT, RATE)
        .copy_from(&(q.left_matrix().fixed_columns::<3>(1) * 0.5));

    let gyro = -hat(&omega) * inertia + hat(&(inertia * omega));
    a.fixed_view_mut::<3, 3>(RATE, RATE).copy_from(&(inertia_inv * gyro));
    a
}

/// One classical RK4 step followed by quaternion renormalization.
pub fn rk4_step(x: &StateVector, u: &BodyWrench, params: &VehicleParams, dt: f64) -> StateVector {
    let k1 = state_derivative(x, u, params);
    let k2 = state_derivative(&(x + k1 * (dt / 2.0)), u, params);
    let k3 = state_derivative(&(x + k2 * (dt / 2.0)), u, params);
    let k4 = state_derivative(&(x + k3 * dt), u, params);
    let mut next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    normalize_quaternion(&mut next);
    next
}

/// RK4 step together with its exact Jacobian with respect to the initial state,
/// obtained by propagating tangents through each stage and the renormalization.
pub fn rk4_step_with_jacobian(
    x: &StateVector,
    u: &BodyWrench,
    params: &VehicleParams,
    dt: f64,
) -> (StateVector, StateMatrix) {
    let eye = StateMatrix::identity();
    let k1 = state_derivative(x, u, params);
    let j1 = continuous_jacobian(x, u, params);
    let x2 = x + k1 * (dt / 2.0);
    let k2 = state_derivative(&x2, u, params);
    let j2 = continuous_jacobian(&x2, u, params) * (eye + j1 * (dt / 2.0));
    let x3 = x + k2 * (dt / 2.0);
    let k3 = state_derivative(&x3, u, params);
    let j3 = continuous_jacobian(&x3, u, params) * (eye + j2 * (dt / 2.0));
    let x4 = x + k3 * dt;
    let k4 = state_derivative(&x4, u, params);
    let j4 = continuous_jacobian(&x4, u, params) * (eye + j3 * dt);

    let raw = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    let phi = eye + (j1 + j2 * 2.0 + j3 * 2.0 + j4) * (dt / 6.0);

    let q = raw.fixed_rows::<4>(QUAT).into_owned();
    let n = q.norm();
    let qn = q / n;
    let norm_jac = (nalgebra::Matrix4::identity() - qn * qn.transpose()) / n;
    let mut normalize = StateMatrix::identity();
    normalize.fixed_view_mut::<4, 4>(QUAT, QUAT).copy_from(&norm_jac);

    let mut next = raw;
    next.fixed_rows_mut::<4>(QUAT).copy_from(&qn);
    (next, normalize * phi)
}

/// Advance the plant by `dt` seconds under a constant body wrench.
pub fn step_dynamics(
    state: &VehicleState,
    wrench: &BodyWrench,
    params: &VehicleParams,
    dt: f64,
) -> Result<VehicleState> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(Error::InvalidInput(format!(
            "step size {dt} s outside (0, {MAX_STEP}]"
        )));
    }
    if !state.is_finite() || !wrench.is_finite() {
        return Err(Error::IntegrationDiverged {
            step: None,
            detail: "non-finite state or wrench entering the step".into(),
        });
    }
    let next = rk4_step(&state.to_vector(), wrench, params, dt);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationDiverged {
            step: None,
            detail: "non-finite state after the step".into(),
        });
    }
    Ok(VehicleState::from_vector(&next))
}

pub fn rotational_energy(state: &VehicleState, params: &VehicleParams) -> f64 {
    let w = state.angular_velocity;
    0.5 * w.dot(&(params.inertia_matrix() * w))
}

/// Central-difference Jacobian of a state map.
pub fn numerical_jacobian<F>(f: F, x: &StateVector, step: f64) -> StateMatrix
where
    F: Fn(&StateVector) -> StateVector,
{
    let mut j = StateMatrix::zeros();
    for c in 0..x.len() {
        let mut xp = *x;
        let mut xm = *x;
        xp[c] += step;
        xm[c] -= step;
        let d = (f(&xp) - f(&xm)) / (2.0 * step);
        j.set_column(c, &d);
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::params::DragCoefficients;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng) -> VehicleState {
        let mut r = |s: f64| rng.gen_range(-s..s);
        VehicleState {
            position: Vector3::new(r(10.0), r(10.0), r(10.0)),
            velocity: Vector3::new(r(3.0), r(3.0), r(2.0)),
            attitude: Quaternion::from_euler(r(0.6), r(0.6), r(3.0)),
            angular_velocity: Vector3::new(r(2.0), r(2.0), r(1.0)),
        }
    }

    fn random_wrench(rng: &mut ChaCha8Rng) -> BodyWrench {
        let mut r = |s: f64| rng.gen_range(-s..s);
        BodyWrench {
            force: Vector3::new(r(2.0), r(2.0), -14.7 + r(5.0)),
            torque: Vector3::new(r(0.3), r(0.3), r(0.05)),
        }
    }

    #[test]
    fn free_fall_from_rest() {
        let p = VehicleParams { drag: DragCoefficients::zero(), ..VehicleParams::default() };
        let s0 = VehicleState::hover_at(Vector3::new(0.0, 0.0, -10.0), 0.2);
        let dt = 0.004;
        let s1 = step_dynamics(&s0, &BodyWrench::zero(), &p, dt).unwrap();
        assert_relative_eq!(s1.velocity, Vector3::new(0.0, 0.0, p.gravity * dt), epsilon = 1e-12);
        assert_relative_eq!(s1.attitude.to_vector(), s0.attitude.to_vector(), epsilon = 1e-15);
    }

    #[test]
    fn hover_equilibrium_is_stationary() {
        let p = VehicleParams::default();
        let s0 = VehicleState::hover_at(Vector3::new(1.0, 2.0, -5.0), 0.0);
        let w = BodyWrench {
            force: Vector3::new(0.0, 0.0, -p.mass * p.gravity),
            torque: Vector3::zeros(),
        };
        let mut s = s0;
        for _ in 0..250 {
            s = step_dynamics(&s, &w, &p, 0.004).unwrap();
        }
        assert!((s.to_vector() - s0.to_vector()).amax() < 1e-10);
    }

    #[test]
    fn rejects_out_of_range_step() {
        let p = VehicleParams::default();
        let s = VehicleState::default();
        assert!(matches!(
            step_dynamics(&s, &BodyWrench::zero(), &p, 0.02),
            Err(Error::InvalidInput(_))
        ));
        assert!(step_dynamics(&s, &BodyWrench::zero(), &p, 0.0).is_err());
    }

    #[test]
    fn nan_wrench_is_reported_as_divergence() {
        let p = VehicleParams::default();
        let w = BodyWrench { force: Vector3::new(f64::NAN, 0.0, 0.0), torque: Vector3::zeros() };
        assert!(matches!(
            step_dynamics(&VehicleState::default(), &w, &p, 0.004),
            Err(Error::IntegrationDiverged { .. })
        ));
    }

    #[test]
    fn rk4_agrees_with_fine_euler() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let s = random_state(&mut rng);
            let u = random_wrench(&mut rng);
            let coarse = rk4_step(&s.to_vector(), &u, &p, 0.004);
            let mut fine = s.to_vector();
            let h = 0.004 / 1000.0;
            for _ in 0..1000 {
                fine += state_derivative(&fine, &u, &p) * h;
                normalize_quaternion(&mut fine);
            }
            let diff = (coarse - fine).amax();
            assert!(diff < 1e-6, "max difference {diff}");
        }
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = random_state(&mut rng).to_vector();
            let u = random_wrench(&mut rng);
            let (next, analytic) = rk4_step_with_jacobian(&x, &u, &p, 0.004);
            assert_relative_eq!(next, rk4_step(&x, &u, &p, 0.004), epsilon = 1e-14);
            let numeric = numerical_jacobian(|s| rk4_step(s, &u, &p, 0.004), &x, 1e-6);
            for (a, n) in analytic.iter().zip(numeric.iter()) {
                assert!((a - n).abs() / n.abs().max(1.0) < 1e-4, "{a} vs {n}");
            }
        }
    }

    #[test]
    fn torque_free_motion_conserves_rotational_energy() {
        let mut p = VehicleParams::default();
        p.drag = DragCoefficients::zero();
        p.inertia = [[0.029, 0.0, 0.0], [0.0, 0.031, 0.0], [0.0, 0.0, 0.055]];
        let mut s = VehicleState::hover_at(Vector3::zeros(), 0.0);
        s.angular_velocity = Vector3::new(1.2, -0.7, 0.9);
        let e0 = rotational_energy(&s, &p);
        for _ in 0..2500 {
            s = step_dynamics(&s, &BodyWrench::zero(), &p, 0.004).unwrap();
            assert!((s.attitude.norm() - 1.0).abs() < 1e-9);
        }
        let drift = (rotational_energy(&s, &p) - e0).abs() / e0;
        assert!(drift < 1e-6, "relative energy drift {drift}");
    }

    #[test]
    fn step_is_bitwise_deterministic() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_state(&mut rng);
        let u = random_wrench(&mut rng);
        let a = step_dynamics(&s, &u, &p, 0.004).unwrap();
        let b = step_dynamics(&s, &u, &p, 0.004).unwrap();
        assert_eq!(a.to_vector().as_slice(), b.to_vector().as_slice());
    }
}
