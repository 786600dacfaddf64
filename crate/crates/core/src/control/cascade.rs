//! Position → velocity → attitude → rate cascade.

use nalgebra::{Matrix3, Vector3};

use super::{ControlConfig, Setpoint};
use crate::dynamics::{Quaternion, VehicleParams, VehicleState};

/// Attitude whose body z axis is `z_body` (earth frame) and whose Z-Y-X yaw
/// is `yaw`: the body x axis is kept perpendicular to the heading's lateral
/// direction.
pub fn attitude_from_thrust_axis(z_body: &Vector3<f64>, yaw: f64) -> Quaternion {
    let z = z_body.normalize();
    let lateral = Vector3::new(-yaw.sin(), yaw.cos(), 0.0);
    let mut x = lateral.cross(&z);
    if x.norm() < 1e-9 {
        x = Vector3::new(yaw.cos(), yaw.sin(), 0.0);
    }
    let x = x.normalize();
    let y = z.cross(&x);
    Quaternion::from_rotation_matrix(&Matrix3::from_columns(&[x, y, z]))
}

/// Desired earth-frame force `m (a − g)` turned into an attitude and thrust,
/// with the tilt from vertical limited to `max_tilt`.
pub fn thrust_to_attitude(force: &Vector3<f64>, yaw: f64, max_tilt: f64) -> (Quaternion, f64) {
    let mut f = *force;
    if f.z > -1e-6 {
        f.z = -1e-6;
    }
    let horiz = (f.x * f.x + f.y * f.y).sqrt();
    let max_h = -f.z * max_tilt.tan();
    if horiz > max_h {
        let s = max_h / horiz;
        f.x *= s;
        f.y *= s;
    }
    let q = attitude_from_thrust_axis(&(-f), yaw);
    (q, force.norm())
}

/// Body-rate demand proportional to the shortest rotation from `q_hat` to `q_ref`.
pub fn attitude_controller(q_hat: &Quaternion, q_ref: &Quaternion, kp: &Vector3<f64>, max_rate: &Vector3<f64>) -> Vector3<f64> {
    let err = q_hat.conjugate().multiply(q_ref);
    let rv = err.to_rotation_vector();
    let w = kp.component_mul(&rv);
    w.zip_map(max_rate, |v, m| v.clamp(-m, m))
}

#[derive(Clone, Debug, Default)]
struct Pid3 {
    integral: Vector3<f64>,
    prev: Option<Vector3<f64>>,
}

impl Pid3 {
    fn reset(&mut self) {
        *self = Self::default();
    }

    /// PID with derivative on the measurement and a clamped integrator.
    fn step(
        &mut self,
        err: Vector3<f64>,
        meas: Vector3<f64>,
        kp: &Vector3<f64>,
        ki: &Vector3<f64>,
        kd: &Vector3<f64>,
        i_limit: f64,
        dt: f64,
    ) -> Vector3<f64> {
        self.integral = (self.integral + err * dt).map(|v| v.clamp(-i_limit, i_limit));
        let d = self.prev.map_or(Vector3::zeros(), |p| -(meas - p) / dt);
        self.prev = Some(meas);
        kp.component_mul(&err) + ki.component_mul(&self.integral) + kd.component_mul(&d)
    }
}

/// Outputs of one controller tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeOutput {
    pub q_ref: Quaternion,
    pub thrust: f64,
    pub rate_ref: Vector3<f64>,
    pub torque: Vector3<f64>,
}

/// The full cascade with its integrator state. The position stage runs every
/// `position_divider` ticks and its output is held in between.
#[derive(Clone, Debug)]
pub struct CascadeController {
    cfg: ControlConfig,
    velocity_pid: Pid3,
    rate_pid: Pid3,
    held: Option<(Quaternion, f64)>,
    tick: u64,
}

impl CascadeController {
    pub fn new(cfg: ControlConfig) -> Self {
        Self { cfg, velocity_pid: Pid3::default(), rate_pid: Pid3::default(), held: None, tick: 0 }
    }

    pub fn config(&self) -> &ControlConfig {
        &self.cfg
    }

    pub fn reset_integrators(&mut self) {
        self.velocity_pid.reset();
        self.rate_pid.reset();
    }

    /// Position and velocity stages: `(q_ref, T_ref)`.
    pub fn position_stage(
        &mut self,
        est: &VehicleState,
        sp: &Setpoint,
        speed_cap: Option<f64>,
        params: &VehicleParams,
        dt: f64,
    ) -> (Quaternion, f64) {
        let g = &self.cfg.gains;
        let mut v_sp = Vector3::from(g.pos_p).component_mul(&(sp.position - est.position)) + sp.velocity;
        let cap_xy = speed_cap.map_or(g.max_speed_xy, |c| c.min(g.max_speed_xy));
        let h = (v_sp.x * v_sp.x + v_sp.y * v_sp.y).sqrt();
        if h > cap_xy {
            v_sp.x *= cap_xy / h;
            v_sp.y *= cap_xy / h;
        }
        v_sp.z = v_sp.z.clamp(-g.max_speed_z, g.max_speed_z);
        let a = self.velocity_pid.step(
            v_sp - est.velocity,
            est.velocity,
            &Vector3::from(g.vel_p),
            &Vector3::from(g.vel_i),
            &Vector3::from(g.vel_d),
            g.vel_i_limit,
            dt,
        );
        let force = (a - params.gravity_vector()) * params.mass;
        let (q, t) = thrust_to_attitude(&force, sp.yaw, g.max_tilt);
        (q, t.min(g.max_thrust))
    }

    /// Attitude and rate stages: `(Ω_ref, τ)`.
    pub fn attitude_stage(&mut self, est: &VehicleState, q_ref: &Quaternion, params: &VehicleParams, dt: f64) -> (Vector3<f64>, Vector3<f64>) {
        let g = &self.cfg.gains;
        let w_ref = attitude_controller(&est.attitude, q_ref, &Vector3::from(g.att_p), &Vector3::from(g.max_rate));
        let w = est.angular_velocity;
        let alpha = self.rate_pid.step(
            w_ref - w,
            w,
            &Vector3::from(g.rate_p),
            &Vector3::from(g.rate_i),
            &Vector3::from(g.rate_d),
            g.rate_i_limit,
            dt,
        );
        let inertia = params.inertia_matrix();
        (w_ref, inertia * alpha + w.cross(&(inertia * w)))
    }

    /// One tick of the cascade at period `dt`.
    pub fn step(
        &mut self,
        est: &VehicleState,
        sp: &Setpoint,
        speed_cap: Option<f64>,
        params: &VehicleParams,
        dt: f64,
    ) -> CascadeOutput {
        let div = self.cfg.position_divider.max(1);
        if self.held.is_none() || self.tick % div == 0 {
            self.held = Some(self.position_stage(est, sp, speed_cap, params, dt * div as f64));
        }
        self.tick += 1;
        let (q_ref, thrust) = self.held.expect("position stage ran");
        let (rate_ref, torque) = self.attitude_stage(est, &q_ref, params, dt);
        CascadeOutput { q_ref, thrust, rate_ref, torque }
    }
}
