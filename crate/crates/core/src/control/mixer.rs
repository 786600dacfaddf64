//! Control allocation and rotor response.

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::dynamics::{RotorSpeeds, VehicleParams};

/// `[T, τx, τy, τz]ᵀ = A · [ω₁², ω₂², ω₃², ω₄²]ᵀ` for a motionless vehicle.
pub fn allocation_matrix(params: &VehicleParams) -> Matrix4<f64> {
    let a = params.lift_coefficient;
    let b = params.torque_coefficient;
    let mut m = Matrix4::zeros();
    for (i, r) in params.rotors.iter().enumerate() {
        let [x, y, _] = r.arm;
        m[(0, i)] = a;
        m[(1, i)] = -y * a;
        m[(2, i)] = x * a;
        m[(3, i)] = -b * r.spin;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixerOutput {
    pub speeds: RotorSpeeds,
    /// Set when any rotor needed clamping.
    pub saturated: bool,
}

/// Largest `s` in `[0, 1]` keeping `base + s·dir` inside `[lo, hi]`.
/// `base` must already be inside.
fn headroom(base: &Vector4<f64>, dir: &Vector4<f64>, lo: f64, hi: f64) -> f64 {
    let mut s: f64 = 1.0;
    for i in 0..4 {
        if dir[i] > 0.0 {
            s = s.min((hi - base[i]) / dir[i]);
        } else if dir[i] < 0.0 {
            s = s.min((lo - base[i]) / dir[i]);
        }
    }
    s.max(0.0)
}

/// Shift along `u` (all positive) bringing `x` inside `[lo, hi]`, the one
/// closest to zero, if any exists.
fn shift_into(x: &Vector4<f64>, u: &Vector4<f64>, lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..4 {
        a = a.max((lo - x[i]) / u[i]);
        b = b.min((hi - x[i]) / u[i]);
    }
    (a <= b).then(|| 0.0f64.clamp(a, b))
}

/// Rotor speeds realizing thrust `T` and body torque `τ` within the rotor
/// limits. When they cannot all be met, roll and pitch torque win over
/// collective thrust, and yaw torque gets whatever headroom is left.
pub fn mixer(torque: &Vector3<f64>, thrust: f64, params: &VehicleParams) -> MixerOutput {
    let a_inv = allocation_matrix(params)
        .try_inverse()
        .expect("allocation matrix of a validated frame is invertible");
    let (lo, hi) = (params.speed_min.powi(2), params.speed_max.powi(2));
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    let u = a_inv * Vector4::new(1.0, 0.0, 0.0, 0.0);
    let rp = a_inv * Vector4::new(0.0, finite(torque.x), finite(torque.y), 0.0);
    let yaw = a_inv * Vector4::new(0.0, 0.0, 0.0, finite(torque.z));

    let mut saturated = false;
    let t_lo = (0..4).map(|i| lo / u[i]).fold(f64::NEG_INFINITY, f64::max);
    let t_hi = (0..4).map(|i| hi / u[i]).fold(f64::INFINITY, f64::min);
    let t = finite(thrust).clamp(t_lo, t_hi);
    saturated |= t != thrust;
    let mut w2 = u * t;

    let full = w2 + rp;
    match shift_into(&full, &u, lo, hi) {
        Some(d) => {
            saturated |= d != 0.0;
            w2 = full + u * d;
        }
        None => {
            saturated = true;
            w2 += rp * headroom(&w2, &rp, lo, hi);
        }
    }
    let s = headroom(&w2, &yaw, lo, hi);
    saturated |= s < 1.0;
    w2 += yaw * s;

    let speeds = w2.map(|v| v.max(0.0).sqrt().clamp(params.speed_min, params.speed_max));
    MixerOutput { speeds: RotorSpeeds([speeds[0], speeds[1], speeds[2], speeds[3]]), saturated }
}

/// First-order lag toward the commanded speeds, exact for piecewise-constant
/// commands. A zero time constant passes the command through.
pub fn motor_lag(commanded: &RotorSpeeds, actual: &RotorSpeeds, time_constant: f64, dt: f64) -> RotorSpeeds {
    if time_constant <= 0.0 {
        return *commanded;
    }
    let k = 1.0 - (-dt / time_constant).exp();
    let mut out = *actual;
    for i in 0..4 {
        out.0[i] += (commanded.0[i] - actual.0[i]) * k;
    }
    out
}
