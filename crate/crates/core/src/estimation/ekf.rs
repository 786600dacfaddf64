//! Extended Kalman filter over the 13-state `[ξ, v, q, Ω]` with the
//! `[pos, vel, ψ]` observation.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::state::{normalize_quaternion, quaternion_of, QUAT};
use crate::dynamics::{
    numerical_jacobian, rk4_step, rk4_step_with_jacobian, wrap_angle, BodyWrench, StateMatrix,
    StateVector, VehicleParams, VehicleState, STATE_DIM,
};
use crate::error::{Error, Result};

pub const OBS_DIM: usize = 7;
pub type ObsVector = SVector<f64, OBS_DIM>;
pub type ObsMatrix = SMatrix<f64, OBS_DIM, OBS_DIM>;

const YAW_ROW: usize = 6;

/// How the discrete transition Jacobian `F` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// Central differences of the discrete step.
    Numerical,
    /// Tangent propagation through the RK4 stages.
    Analytic,
}

/// Which observation rows are present in an update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObsMask {
    pub gps: bool,
    pub compass: bool,
}

impl ObsMask {
    pub const ALL: ObsMask = ObsMask { gps: true, compass: true };

    pub fn any(&self) -> bool {
        self.gps || self.compass
    }

    fn rows(&self) -> Vec<usize> {
        let mut rows = Vec::with_capacity(OBS_DIM);
        if self.gps {
            rows.extend(0..6);
        }
        if self.compass {
            rows.push(YAW_ROW);
        }
        rows
    }
}

/// Innovation statistics of one update, kept for the benchmark detectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Innovation {
    /// `s̃` over the present rows (yaw row wrapped).
    pub residual: DVector<f64>,
    /// `S = H P Hᵀ + R` over the present rows.
    pub covariance: DMatrix<f64>,
    /// Mahalanobis distance `s̃ᵀ S⁻¹ s̃`.
    pub mahalanobis: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EkfBelief {
    pub x: StateVector,
    pub p: StateMatrix,
    /// Per-step process-noise covariance.
    pub q: StateMatrix,
    pub r: ObsMatrix,
}

impl EkfBelief {
    pub fn new(state: &VehicleState, p: StateMatrix, q: StateMatrix, r: ObsMatrix) -> Self {
        Self { x: state.to_vector(), p, q, r }
    }

    pub fn state(&self) -> VehicleState {
        VehicleState::from_vector(&self.x)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }

    /// CSV trace row: `t, x̂₁..x̂₁₃, diag(P)`.
    pub fn trace_row(&self, t: f64) -> Vec<f64> {
        let mut row = Vec::with_capacity(1 + 2 * STATE_DIM);
        row.push(t);
        row.extend(self.x.iter());
        row.extend(self.p.diagonal().iter());
        row
    }

    pub fn trace_header() -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=STATE_DIM).map(|i| format!("x{i}")));
        h.extend((1..=STATE_DIM).map(|i| format!("p{i}")));
        h
    }
}

pub(crate) fn symmetrize(p: &mut StateMatrix) {
    *p = (*p + p.transpose()) * 0.5;
}

/// Symmetrize and clip negative eigenvalues to zero. Fails when the most
/// negative eigenvalue is beyond round-off relative to the trace.
pub(crate) fn repair_psd(p: &mut StateMatrix) -> Result<()> {
    symmetrize(p);
    if p.cholesky().is_some() {
        return Ok(());
    }
    let eig = p.symmetric_eigen();
    let min = eig.eigenvalues.min();
    let scale = p.trace().abs().max(1.0);
    if !min.is_finite() || min < -1e-6 * scale {
        return Err(Error::Numerical(format!(
            "covariance lost positive semi-definiteness (min eigenvalue {min:.3e})"
        )));
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    *p = eig.eigenvectors * StateMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    symmetrize(p);
    Ok(())
}

/// Discrete transition Jacobian of `x ↦ step(x)`.
pub fn transition_jacobian<F>(step: F, x: &StateVector) -> StateMatrix
where
    F: Fn(&StateVector) -> StateVector,
{
    numerical_jacobian(step, x, 1e-6)
}

/// Generic EKF predict with a caller-supplied process model.
pub fn predict_with<F>(belief: &EkfBelief, step: F, f: Option<StateMatrix>) -> Result<EkfBelief>
where
    F: Fn(&StateVector) -> StateVector,
{
    let f = f.unwrap_or_else(|| transition_jacobian(&step, &belief.x));
    let mut x = step(&belief.x);
    normalize_quaternion(&mut x);
    let mut p = f * belief.p * f.transpose() + belief.q;
    symmetrize(&mut p);
    let out = EkfBelief { x, p, q: belief.q, r: belief.r };
    if !out.is_finite() {
        return Err(Error::Numerical("non-finite belief after predict".into()));
    }
    Ok(out)
}

/// Propagate the belief through the rigid-body model under wrench `u`.
pub fn ekf_predict(
    belief: &EkfBelief,
    u: &BodyWrench,
    dt: f64,
    params: &VehicleParams,
    mode: JacobianMode,
) -> Result<EkfBelief> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("predict step {dt} must be positive")));
    }
    match mode {
        JacobianMode::Numerical => predict_with(belief, |x| rk4_step(x, u, params, dt), None),
        JacobianMode::Analytic => {
            let (_, f) = rk4_step_with_jacobian(&belief.x, u, params, dt);
            predict_with(belief, |x| rk4_step(x, u, params, dt), Some(f))
        }
    }
}

/// Yaw of a possibly non-unit quaternion state, scale invariant.
fn yaw_of(x: &StateVector) -> f64 {
    let q = quaternion_of(x);
    let n = 2.0 * (q.w * q.z + q.x * q.y);
    let d = q.w * q.w + q.x * q.x - q.y * q.y - q.z * q.z;
    n.atan2(d)
}

/// `h(x) = [ξ, v, ψ(q)]`.
pub fn observe(x: &StateVector) -> ObsVector {
    let mut y = ObsVector::zeros();
    y.fixed_rows_mut::<6>(0).copy_from(&x.fixed_rows::<6>(0));
    y[YAW_ROW] = yaw_of(x);
    y
}

/// `∂h/∂x`.
pub fn observation_jacobian(x: &StateVector) -> SMatrix<f64, OBS_DIM, STATE_DIM> {
    let mut h = SMatrix::<f64, OBS_DIM, STATE_DIM>::zeros();
    for i in 0..6 {
        h[(i, i)] = 1.0;
    }
    let q = quaternion_of(x);
    let (w, a, b, c) = (q.w, q.x, q.y, q.z);
    let n = 2.0 * (w * c + a * b);
    let d = w * w + a * a - b * b - c * c;
    let den = n * n + d * d;
    if den > 0.0 {
        let dn = [2.0 * c, 2.0 * b, 2.0 * a, 2.0 * w];
        let dd = [2.0 * w, 2.0 * a, -2.0 * b, -2.0 * c];
        for k in 0..4 {
            h[(YAW_ROW, QUAT + k)] = (d * dn[k] - n * dd[k]) / den;
        }
    }
    h
}

/// Full-observation update.
pub fn ekf_update(belief: &EkfBelief, y: &ObsVector) -> Result<(EkfBelief, Innovation)> {
    ekf_update_masked(belief, y, ObsMask::ALL)
}

/// Update using only the rows selected by `mask` (Joseph form).
pub fn ekf_update_masked(
    belief: &EkfBelief,
    y: &ObsVector,
    mask: ObsMask,
) -> Result<(EkfBelief, Innovation)> {
    let rows = mask.rows();
    if rows.is_empty() {
        return Err(Error::InvalidInput("update with no observation rows".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("observation contains non-finite values".into()));
    }
    let m = rows.len();
    let h_full = observation_jacobian(&belief.x);
    let y_hat = observe(&belief.x);

    let mut h = DMatrix::<f64>::zeros(m, STATE_DIM);
    let mut r = DMatrix::<f64>::zeros(m, m);
    let mut s_res = DVector::<f64>::zeros(m);
    for (i, &ri) in rows.iter().enumerate() {
        h.set_row(i, &h_full.row(ri));
        for (j, &rj) in rows.iter().enumerate() {
            r[(i, j)] = belief.r[(ri, rj)];
        }
        let d = y[ri] - y_hat[ri];
        s_res[i] = if ri == YAW_ROW { wrap_angle(d) } else { d };
    }

    let p = DMatrix::from_column_slice(STATE_DIM, STATE_DIM, belief.p.as_slice());
    let s = &h * &p * h.transpose() + &r;
    let s = (&s + s.transpose()) * 0.5;
    let chol = s.clone().cholesky().ok_or_else(|| {
        let eig = s.clone().symmetric_eigen().eigenvalues;
        Error::Numerical(format!(
            "innovation covariance not invertible (eigenvalues in [{:.3e}, {:.3e}])",
            eig.min(),
            eig.max()
        ))
    })?;
    let s_inv = chol.inverse();
    let k = &p * h.transpose() * &s_inv;

    let dx = &k * &s_res;
    let mut x = belief.x;
    for i in 0..STATE_DIM {
        x[i] += dx[i];
    }
    normalize_quaternion(&mut x);

    let ikh = DMatrix::<f64>::identity(STATE_DIM, STATE_DIM) - &k * &h;
    let p_new = &ikh * &p * ikh.transpose() + &k * &r * k.transpose();
    let mut p_out = StateMatrix::from_column_slice(p_new.as_slice());
    repair_psd(&mut p_out)?;

    let mahalanobis = (s_res.transpose() * &s_inv * &s_res)[(0, 0)];
    let out = EkfBelief { x, p: p_out, q: belief.q, r: belief.r };
    if !out.is_finite() {
        return Err(Error::Numerical("non-finite belief after update".into()));
    }
    Ok((out, Innovation { residual: s_res, covariance: s, mahalanobis }))
}
