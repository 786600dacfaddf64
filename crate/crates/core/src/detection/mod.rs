//! Anomaly detection on the IMU residual of the resilient estimate, the two
//! innovation-based benchmark detectors, and offline ROC evaluation.

pub mod cusum;
pub mod roc;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{BodyWrench, VehicleParams};
use crate::error::{Error, Result};
use crate::estimation::EkfBelief;
use crate::sensors::SensorFrame;

pub use cusum::{Cusum, SlidingWindow};
pub use roc::{roc_eval, Dataset, DetectorKind, RocPoint, RocReport};

/// How the six residual axes are folded into one number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualReduction {
    /// Euclidean norm of the scale-normalized axes.
    NormSum,
    /// Largest scale-normalized axis magnitude.
    PerAxisMax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// CUSUM drift `b`.
    pub drift: f64,
    /// CUSUM threshold `λ`.
    pub threshold: f64,
    /// Sliding-window length `l`, samples.
    pub window_length: usize,
    /// Detection-rate threshold `p`.
    pub rate_threshold: f64,
    pub reduction: ResidualReduction,
    /// Accelerometer axis normalization, m/s².
    pub accel_scale: f64,
    /// Gyroscope axis normalization, rad/s.
    pub gyro_scale: f64,
    /// The latched flag clears after `DR ≤ p` has held this long, s.
    pub clearance_time: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        crate::config::SimConfig::default().detector
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("detector: {m}")));
        if !(self.drift >= 0.0) {
            return bad("drift must be >= 0");
        }
        if !(self.threshold > 0.0) {
            return bad("threshold must be > 0");
        }
        if self.window_length < 1 {
            return bad("window_length must be >= 1");
        }
        if !(self.rate_threshold > 0.0 && self.rate_threshold < 1.0) {
            return bad("rate_threshold must lie in (0, 1)");
        }
        if !(self.accel_scale > 0.0 && self.gyro_scale > 0.0) {
            return bad("axis scales must be positive");
        }
        if !(self.clearance_time >= 0.0) {
            return bad("clearance_time must be >= 0");
        }
        Ok(())
    }
}

/// Settings of the innovation-based benchmark detectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// χ² gate on the Mahalanobis distance.
    pub chi2_threshold: f64,
    pub cusum_drift: f64,
    pub cusum_threshold: f64,
    /// Window length in innovation samples.
    pub window_length: usize,
    pub rate_threshold: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        crate::config::SimConfig::default().benchmark
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi2_threshold > 0.0 && self.cusum_threshold > 0.0 && self.cusum_drift >= 0.0) {
            return Err(Error::Config("benchmark: thresholds must be > 0 and drift >= 0".into()));
        }
        if self.window_length < 1 || !(self.rate_threshold > 0.0 && self.rate_threshold < 1.0) {
            return Err(Error::Config("benchmark: invalid window settings".into()));
        }
        Ok(())
    }
}

/// IMU measurements the resilient belief predicts: specific force
/// `f̂_B/m + R̂ᵀ f_a(v̂)/m` and body rates `Ω̂`.
pub fn predicted_imu(belief: &EkfBelief, wrench: &BodyWrench, params: &VehicleParams) -> (Vector3<f64>, Vector3<f64>) {
    let s = belief.state();
    let drag = s.attitude.inverse_rotate_vector(&params.drag.force(&s.velocity));
    ((wrench.force + drag) / params.mass, s.angular_velocity)
}

/// Scalar residual between the frame's IMU sample and the resilient
/// prediction, or `None` when the IMU sample is stale.
pub fn residual(
    frame: &SensorFrame,
    belief: &EkfBelief,
    wrench: &BodyWrench,
    params: &VehicleParams,
    cfg: &DetectorConfig,
) -> Option<f64> {
    if !frame.fresh.imu {
        return None;
    }
    let (a_hat, g_hat) = predicted_imu(belief, wrench, params);
    let da = (frame.accel - a_hat) / cfg.accel_scale;
    let dg = (frame.gyro - g_hat) / cfg.gyro_scale;
    Some(match cfg.reduction {
        ResidualReduction::NormSum => (da.norm_squared() + dg.norm_squared()).sqrt(),
        ResidualReduction::PerAxisMax => da.amax().max(dg.amax()),
    })
}

/// `d = s̃ᵀ S⁻¹ s̃`.
pub fn mahalanobis(innovation: &DVector<f64>, s: &DMatrix<f64>) -> Result<f64> {
    let chol = s.clone().cholesky().ok_or_else(|| {
        Error::Numerical("innovation covariance is singular or indefinite".into())
    })?;
    Ok(innovation.dot(&chol.solve(innovation)))
}

/// One tick of detector output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DetectorOutput {
    pub statistic: f64,
    /// Point anomaly on this sample.
    pub alpha: bool,
    pub rate: f64,
    /// Window decision `DR > p` on this sample.
    pub raw: bool,
    /// Latched system anomaly flag with clearance hysteresis.
    pub flag: bool,
}

/// Point test plus window decision plus clearance latch.
#[derive(Clone, Debug)]
pub struct WindowedDetector {
    cusum: Cusum,
    window: SlidingWindow,
    rate_threshold: f64,
    clearance_time: f64,
    flag: bool,
    quiet_since: Option<f64>,
    last: DetectorOutput,
}

impl WindowedDetector {
    pub fn new(window_length: usize, rate_threshold: f64, clearance_time: f64) -> Self {
        Self {
            cusum: Cusum::new(),
            window: SlidingWindow::new(window_length),
            rate_threshold,
            clearance_time,
            flag: false,
            quiet_since: None,
            last: DetectorOutput::default(),
        }
    }

    pub fn last(&self) -> DetectorOutput {
        self.last
    }

    pub fn cusum_mut(&mut self) -> &mut Cusum {
        &mut self.cusum
    }

    /// Feed a point decision at time `t`.
    pub fn decide(&mut self, alpha: bool, t: f64) -> DetectorOutput {
        let rate = self.window.push(alpha);
        let raw = rate > self.rate_threshold;
        if raw {
            self.flag = true;
            self.quiet_since = None;
        } else if self.flag {
            let since = *self.quiet_since.get_or_insert(t);
            if t - since >= self.clearance_time {
                self.flag = false;
                self.quiet_since = None;
            }
        }
        self.last = DetectorOutput { statistic: self.cusum.statistic(), alpha, rate, raw, flag: self.flag };
        self.last
    }
}

/// The residual-CUSUM detector run onboard.
#[derive(Clone, Debug)]
pub struct MarsDetector {
    cfg: DetectorConfig,
    inner: WindowedDetector,
}

impl MarsDetector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let inner = WindowedDetector::new(cfg.window_length, cfg.rate_threshold, cfg.clearance_time);
        Ok(Self { cfg, inner })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn last(&self) -> DetectorOutput {
        self.inner.last()
    }

    /// Consume one residual; a missing residual holds the previous output.
    pub fn step(&mut self, r: Option<f64>, t: f64) -> DetectorOutput {
        match r {
            Some(r) => {
                let a = self.inner.cusum_mut().step(r, self.cfg.drift, self.cfg.threshold);
                self.inner.decide(a, t)
            }
            None => self.inner.last(),
        }
    }
}

/// χ² gate on each Mahalanobis distance.
#[derive(Clone, Debug)]
pub struct Chi2Detector {
    threshold: f64,
    inner: WindowedDetector,
}

impl Chi2Detector {
    pub fn new(cfg: &BenchmarkConfig, clearance_time: f64) -> Self {
        Self {
            threshold: cfg.chi2_threshold,
            inner: WindowedDetector::new(cfg.window_length, cfg.rate_threshold, clearance_time),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn step(&mut self, d: Option<f64>, t: f64) -> DetectorOutput {
        match d {
            Some(d) => self.inner.decide(d > self.threshold, t),
            None => self.inner.last(),
        }
    }
}

/// CUSUM over the Mahalanobis distance.
#[derive(Clone, Debug)]
pub struct InnovationCusumDetector {
    drift: f64,
    threshold: f64,
    inner: WindowedDetector,
}

impl InnovationCusumDetector {
    pub fn new(cfg: &BenchmarkConfig, clearance_time: f64) -> Self {
        Self {
            drift: cfg.cusum_drift,
            threshold: cfg.cusum_threshold,
            inner: WindowedDetector::new(cfg.window_length, cfg.rate_threshold, clearance_time),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn step(&mut self, d: Option<f64>, t: f64) -> DetectorOutput {
        match d {
            Some(d) => {
                let a = self.inner.cusum_mut().step(d, self.drift, self.threshold);
                self.inner.decide(a, t)
            }
            None => self.inner.last(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{StateMatrix, VehicleState};
    use crate::estimation::ObsMatrix;
    use crate::sensors::Freshness;

    fn hover_belief() -> (EkfBelief, BodyWrench, VehicleParams) {
        let p = VehicleParams::default();
        let s = VehicleState::hover_at(Vector3::new(0.0, 0.0, -5.0), 0.2);
        let b = EkfBelief::new(&s, StateMatrix::identity(), StateMatrix::zeros(), ObsMatrix::identity());
        let w = BodyWrench { force: Vector3::new(0.0, 0.0, -p.mass * p.gravity), torque: Vector3::zeros() };
        (b, w, p)
    }

    fn imu_frame(accel: Vector3<f64>, gyro: Vector3<f64>) -> SensorFrame {
        let mut f = SensorFrame::empty(0.0);
        f.accel = accel;
        f.gyro = gyro;
        f.fresh = Freshness { imu: true, ..Default::default() };
        f
    }

    #[test]
    fn predicted_measurement_gives_zero_residual() {
        let (b, w, p) = hover_belief();
        let cfg = DetectorConfig::default();
        let (a, g) = predicted_imu(&b, &w, &p);
        assert_eq!(residual(&imu_frame(a, g), &b, &w, &p, &cfg), Some(0.0));
    }

    #[test]
    fn saturated_imu_gives_huge_residual() {
        let (b, w, p) = hover_belief();
        let cfg = DetectorConfig::default();
        let r = residual(&imu_frame(Vector3::repeat(300.0), Vector3::repeat(70.0)), &b, &w, &p, &cfg).unwrap();
        assert!(r > 100.0, "{r}");
    }

    #[test]
    fn stale_imu_gives_no_residual() {
        let (b, w, p) = hover_belief();
        let mut f = imu_frame(Vector3::zeros(), Vector3::zeros());
        f.fresh.imu = false;
        assert_eq!(residual(&f, &b, &w, &p, &DetectorConfig::default()), None);
    }

    #[test]
    fn mahalanobis_arithmetic() {
        let s = DMatrix::identity(3, 3);
        assert_eq!(mahalanobis(&DVector::zeros(3), &s).unwrap(), 0.0);
        let d = mahalanobis(&DVector::from_vec(vec![2.0, 2.0, 1.0]), &s).unwrap();
        assert!((d - 9.0).abs() < 1e-12);
        let cfg = BenchmarkConfig { chi2_threshold: 7.8, ..BenchmarkConfig::default() };
        let mut det = Chi2Detector::new(&cfg, 0.0);
        assert!(det.step(Some(d), 0.0).alpha);
        assert!(mahalanobis(&DVector::zeros(2), &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn latch_clears_after_quiet_period() {
        let mut w = WindowedDetector::new(10, 0.05, 1.0);
        let dt = 0.1;
        assert!(w.decide(true, 0.0).flag);
        let mut cleared_at = None;
        for k in 1..40 {
            let t = k as f64 * dt;
            let out = w.decide(false, t);
            if !out.flag && cleared_at.is_none() {
                cleared_at = Some(t);
            }
        }
        // The alarm bit leaves the window after 10 samples, then 1 s of quiet.
        let t = cleared_at.unwrap();
        assert!(t >= 1.0 + 0.9 && t < 2.1, "{t}");
    }

    #[test]
    fn held_output_between_samples() {
        let mut det = MarsDetector::new(DetectorConfig::default()).unwrap();
        let a = det.step(Some(1.0), 0.0);
        assert_eq!(det.step(None, 0.004), a);
    }
}
