//! Run-level performance metrics.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::mission::lateral_distance;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub survived: bool,
    /// s
    pub survival_time: f64,
    /// Rotor speed fluctuation before the attack, rad/s.
    pub rotor_rms_clean: Option<f64>,
    /// Rotor speed fluctuation while the attack is on, rad/s.
    pub rotor_rms_attack: Option<f64>,
    /// m
    pub lateral_rmse: f64,
    /// s, absent when the mission did not finish.
    pub completion_time: Option<f64>,
    /// First latched alarm after the attack started, s after the start.
    pub detector_response_time: Option<f64>,
    /// rad
    pub max_tilt: f64,
    /// rad
    pub tilt_std: f64,
    /// Largest 3-D distance from the reference path, m.
    pub max_position_deviation: f64,
    /// Number of Normal → Brake switches.
    pub brake_count: usize,
}

/// RMS of rotor speeds about their per-window means, pooled over rotors.
/// The series is cut into consecutive windows of `window` samples; a
/// trailing partial window is included.
pub fn rotor_rms(speeds: &[[f64; 4]], window: usize) -> f64 {
    if speeds.is_empty() {
        return 0.0;
    }
    let window = window.max(1);
    let (mut sum, mut n) = (0.0, 0usize);
    for chunk in speeds.chunks(window) {
        for i in 0..4 {
            let mean = chunk.iter().map(|s| s[i]).sum::<f64>() / chunk.len() as f64;
            for s in chunk {
                sum += (s[i] - mean).powi(2);
                n += 1;
            }
        }
    }
    (sum / n as f64).sqrt()
}

/// RMS horizontal distance from the reference polyline.
pub fn lateral_rmse(positions: &[Vector3<f64>], path: &[Vector3<f64>]) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let s: f64 = positions.iter().map(|p| lateral_distance(p, path).powi(2)).sum();
    (s / positions.len() as f64).sqrt()
}

/// 3-D distance from `p` to the polyline.
pub fn path_distance(p: &Vector3<f64>, path: &[Vector3<f64>]) -> f64 {
    if path.len() == 1 {
        return (p - path[0]).norm();
    }
    path.windows(2)
        .map(|w| {
            let ab = w[1] - w[0];
            let len2 = ab.norm_squared();
            let s = if len2 > 0.0 { ((p - w[0]).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            (p - (w[0] + ab * s)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_speeds_have_zero_rms() {
        let s = vec![[600.0, 610.0, 590.0, 605.0]; 1000];
        assert_eq!(rotor_rms(&s, 250), 0.0);
    }

    #[test]
    fn alternating_speeds_rms() {
        let s: Vec<[f64; 4]> = (0..1000).map(|k| [600.0 + if k % 2 == 0 { 3.0 } else { -3.0 }; 4]).collect();
        assert_relative_eq!(rotor_rms(&s, 250), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn on_path_has_zero_lateral_error() {
        let path = vec![Vector3::new(0.0, 0.0, -5.0), Vector3::new(10.0, 0.0, -5.0)];
        let pos: Vec<_> = (0..50).map(|k| Vector3::new(k as f64 * 0.2, 0.0, -5.0)).collect();
        assert!(lateral_rmse(&pos, &path) < 1e-12);
        let off: Vec<_> = pos.iter().map(|p| p + Vector3::new(0.0, 0.3, 0.0)).collect();
        assert_relative_eq!(lateral_rmse(&off, &path), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn path_distance_includes_altitude() {
        let path = vec![Vector3::new(0.0, 0.0, -5.0)];
        assert_relative_eq!(path_distance(&Vector3::new(0.0, 3.0, -1.0), &path), 5.0);
    }
}
