//! Multi-rate onboard sensing: IMU, GPS, compass and rotor tachometers.
//!
//! Each group samples ground truth with additive zero-mean Gaussian noise on
//! its own schedule. Between samples a group's fields hold their last value and
//! the corresponding freshness flag is cleared.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{wrap_angle, BodyWrench, RotorSpeeds, VehicleParams, VehicleState};
use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorNoiseSpec {
    /// m/s² per axis
    pub accel_std: f64,
    /// rad/s per axis
    pub gyro_std: f64,
    /// m per axis
    pub gps_pos_std: f64,
    /// m/s per axis
    pub gps_vel_std: f64,
    /// rad
    pub compass_std: f64,
    /// rad/s per rotor
    pub tach_std: f64,
}

impl SensorNoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            accel_std: 0.0,
            gyro_std: 0.0,
            gps_pos_std: 0.0,
            gps_vel_std: 0.0,
            compass_std: 0.0,
            tach_std: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.accel_std,
            self.gyro_std,
            self.gps_pos_std,
            self.gps_vel_std,
            self.compass_std,
            self.tach_std,
        ];
        if all.iter().all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(Error::Config("sensor noise standard deviations must be finite and >= 0".into()))
        }
    }
}

/// How rates that do not divide the simulation tick rate are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePolicy {
    /// Reject non-dividing rates at startup.
    Strict,
    /// Spread samples over ticks so the long-run average rate is exact
    /// (20 Hz on a 250 Hz loop fires on alternating 13/12-tick intervals).
    Interleaved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSchedule {
    /// Simulation tick rate, Hz.
    pub tick_rate: u32,
    pub imu_rate: u32,
    pub tach_rate: u32,
    pub gps_rate: u32,
    pub compass_rate: u32,
    pub policy: SchedulePolicy,
}

impl SensorSchedule {
    pub fn base_tick(&self) -> f64 {
        1.0 / self.tick_rate as f64
    }

    fn rates(&self) -> [(SensorGroup, u32); 4] {
        [
            (SensorGroup::Imu, self.imu_rate),
            (SensorGroup::Tachometer, self.tach_rate),
            (SensorGroup::Gps, self.gps_rate),
            (SensorGroup::Compass, self.compass_rate),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensorGroup {
    Imu,
    Tachometer,
    Gps,
    Compass,
}

impl std::fmt::Display for SensorGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SensorGroup::Imu => "imu",
            SensorGroup::Tachometer => "tachometer",
            SensorGroup::Gps => "gps",
            SensorGroup::Compass => "compass",
        };
        f.write_str(s)
    }
}

/// Which sensor groups deliver a fresh sample on a tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Freshness {
    pub imu: bool,
    pub tach: bool,
    pub gps: bool,
    pub compass: bool,
}

#[derive(Clone, Debug)]
pub struct Scheduler {
    schedule: SensorSchedule,
}

impl Scheduler {
    pub fn new(schedule: SensorSchedule) -> Result<Self> {
        if schedule.tick_rate == 0 {
            return Err(Error::Config("sensors.schedule.tick_rate must be positive".into()));
        }
        for (group, rate) in schedule.rates() {
            if rate == 0 || rate > schedule.tick_rate {
                return Err(Error::Config(format!(
                    "{group} rate {rate} Hz must be in 1..={} Hz",
                    schedule.tick_rate
                )));
            }
            if schedule.policy == SchedulePolicy::Strict && schedule.tick_rate % rate != 0 {
                return Err(Error::Config(format!(
                    "{group} rate {rate} Hz does not divide the {} Hz simulation rate",
                    schedule.tick_rate
                )));
            }
        }
        Ok(Self { schedule })
    }

    pub fn schedule(&self) -> &SensorSchedule {
        &self.schedule
    }

    fn fires(&self, tick: u64, rate: u32) -> bool {
        let tick_rate = self.schedule.tick_rate as u64;
        (tick * rate as u64) % tick_rate < rate as u64
    }

    pub fn tick(&self, tick: u64) -> Freshness {
        let s = &self.schedule;
        Freshness {
            imu: self.fires(tick, s.imu_rate),
            tach: self.fires(tick, s.tach_rate),
            gps: self.fires(tick, s.gps_rate),
            compass: self.fires(tick, s.compass_rate),
        }
    }
}

/// One tick's bundle of (possibly held) sensor readings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub t: f64,
    /// Specific force, body frame, m/s².
    pub accel: Vector3<f64>,
    /// Body rates, rad/s.
    pub gyro: Vector3<f64>,
    /// Compass heading, rad, in (−π, π].
    pub yaw: f64,
    pub gps_position: Vector3<f64>,
    pub gps_velocity: Vector3<f64>,
    pub rotor_speeds: [f64; 4],
    pub fresh: Freshness,
}

impl SensorFrame {
    pub fn empty(t: f64) -> Self {
        Self {
            t,
            accel: Vector3::zeros(),
            gyro: Vector3::zeros(),
            yaw: 0.0,
            gps_position: Vector3::zeros(),
            gps_velocity: Vector3::zeros(),
            rotor_speeds: [0.0; 4],
            fresh: Freshness::default(),
        }
    }

    /// `[pos, vel, ψ]` observation used by both estimators.
    pub fn observation(&self) -> nalgebra::SVector<f64, 7> {
        let mut y = nalgebra::SVector::<f64, 7>::zeros();
        y.fixed_rows_mut::<3>(0).copy_from(&self.gps_position);
        y.fixed_rows_mut::<3>(3).copy_from(&self.gps_velocity);
        y[6] = self.yaw;
        y
    }
}

fn gaussian<R: Rng>(rng: &mut R, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        let z: f64 = rng.sample(StandardNormal);
        std * z
    }
}

fn gaussian3<R: Rng>(rng: &mut R, std: f64) -> Vector3<f64> {
    Vector3::new(gaussian(rng, std), gaussian(rng, std), gaussian(rng, std))
}

/// Body-frame specific force `(f_B + Rᵀ f_a) / m` (gravity is not sensed).
pub fn specific_force(state: &VehicleState, wrench: &BodyWrench, params: &VehicleParams) -> Vector3<f64> {
    let drag_body = state
        .attitude
        .inverse_rotate_vector(&params.drag.force(&state.velocity));
    (wrench.force + drag_body) / params.mass
}

/// Accelerometer and gyroscope readings.
pub fn sample_imu<A: Rng, G: Rng>(
    state: &VehicleState,
    wrench: &BodyWrench,
    params: &VehicleParams,
    noise: &SensorNoiseSpec,
    accel_rng: &mut A,
    gyro_rng: &mut G,
) -> (Vector3<f64>, Vector3<f64>) {
    let accel = specific_force(state, wrench, params) + gaussian3(accel_rng, noise.accel_std);
    let gyro = state.angular_velocity + gaussian3(gyro_rng, noise.gyro_std);
    (accel, gyro)
}

pub fn sample_gps<R: Rng>(
    state: &VehicleState,
    noise: &SensorNoiseSpec,
    rng: &mut R,
) -> (Vector3<f64>, Vector3<f64>) {
    let p = state.position + gaussian3(rng, noise.gps_pos_std);
    let v = state.velocity + gaussian3(rng, noise.gps_vel_std);
    (p, v)
}

pub fn sample_compass<R: Rng>(state: &VehicleState, noise: &SensorNoiseSpec, rng: &mut R) -> f64 {
    wrap_angle(state.attitude.to_euler().yaw + gaussian(rng, noise.compass_std))
}

pub fn sample_tach<R: Rng>(speeds: &RotorSpeeds, noise: &SensorNoiseSpec, rng: &mut R) -> [f64; 4] {
    let mut out = speeds.0;
    for w in out.iter_mut() {
        *w += gaussian(rng, noise.tach_std);
    }
    out
}

/// Stateful sensor suite owned by one simulation instance.
#[derive(Clone, Debug)]
pub struct SensorSuite {
    noise: SensorNoiseSpec,
    scheduler: Scheduler,
    accel_rng: ChaCha8Rng,
    gyro_rng: ChaCha8Rng,
    gps_rng: ChaCha8Rng,
    compass_rng: ChaCha8Rng,
    tach_rng: ChaCha8Rng,
    held: SensorFrame,
}

impl SensorSuite {
    pub fn new(noise: SensorNoiseSpec, schedule: SensorSchedule, seed: u64) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            noise,
            scheduler: Scheduler::new(schedule)?,
            accel_rng: substream(seed, 10),
            gyro_rng: substream(seed, 11),
            gps_rng: substream(seed, 12),
            compass_rng: substream(seed, 13),
            tach_rng: substream(seed, 14),
            held: SensorFrame::empty(0.0),
        })
    }

    pub fn noise(&self) -> &SensorNoiseSpec {
        &self.noise
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    /// Sample every group due on `tick`; other groups repeat their last value.
    pub fn sample(
        &mut self,
        tick: u64,
        state: &VehicleState,
        wrench: &BodyWrench,
        speeds: &RotorSpeeds,
        params: &VehicleParams,
    ) -> SensorFrame {
        let due = self.scheduler.tick(tick);
        let mut frame = self.held.clone();
        frame.t = tick as f64 * self.scheduler.schedule().base_tick();
        frame.fresh = due;
        if due.imu {
            let (a, g) = sample_imu(
                state,
                wrench,
                params,
                &self.noise,
                &mut self.accel_rng,
                &mut self.gyro_rng,
            );
            frame.accel = a;
            frame.gyro = g;
        }
        if due.tach {
            frame.rotor_speeds = sample_tach(speeds, &self.noise, &mut self.tach_rng);
        }
        if due.gps {
            let (p, v) = sample_gps(state, &self.noise, &mut self.gps_rng);
            frame.gps_position = p;
            frame.gps_velocity = v;
        }
        if due.compass {
            frame.yaw = sample_compass(state, &self.noise, &mut self.compass_rng);
        }
        self.held = frame.clone();
        frame
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn default_schedule() -> SensorSchedule {
        crate::config::SimConfig::default().sensors.schedule
    }

    fn hover() -> (VehicleState, BodyWrench, VehicleParams) {
        let p = VehicleParams::default();
        let s = VehicleState::hover_at(Vector3::new(0.0, 0.0, -5.0), 0.3);
        let w = BodyWrench {
            force: Vector3::new(0.0, 0.0, -p.mass * p.gravity),
            torque: Vector3::zeros(),
        };
        (s, w, p)
    }

    #[test]
    fn hover_accelerometer_reads_minus_g() {
        let (s, w, p) = hover();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, g) = sample_imu(&s, &w, &p, &SensorNoiseSpec::noiseless(), &mut rng.clone(), &mut rng);
        assert_relative_eq!(a, Vector3::new(0.0, 0.0, -p.gravity), epsilon = 1e-12);
        assert_eq!(g, Vector3::zeros());
    }

    #[test]
    fn free_fall_accelerometer_reads_zero() {
        let (s, _, mut p) = hover();
        p.drag = crate::dynamics::DragCoefficients::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, _) = sample_imu(
            &s,
            &BodyWrench::zero(),
            &p,
            &SensorNoiseSpec::noiseless(),
            &mut rng.clone(),
            &mut rng,
        );
        assert_eq!(a, Vector3::zeros());
    }

    #[test]
    fn imu_noise_statistics() {
        let (s, w, p) = hover();
        let mut noise = SensorNoiseSpec::noiseless();
        noise.accel_std = 0.05;
        let mut ra = substream(3, 1);
        let mut rg = substream(3, 2);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| sample_imu(&s, &w, &p, &noise, &mut ra, &mut rg).0.x)
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 5.0 * 0.05 / (n as f64).sqrt());
        assert!((var.sqrt() - 0.05).abs() < 0.05 * 0.05);
    }

    #[test]
    fn zero_noise_gives_truth() {
        let (mut s, _, _) = hover();
        s.velocity = Vector3::new(0.3, -0.1, 0.2);
        let noise = SensorNoiseSpec::noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (p, v) = sample_gps(&s, &noise, &mut rng);
        assert_eq!(p, s.position);
        assert_eq!(v, s.velocity);
        assert_relative_eq!(sample_compass(&s, &noise, &mut rng), 0.3, epsilon = 1e-12);
        let speeds = RotorSpeeds([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(sample_tach(&speeds, &noise, &mut rng), speeds.0);
    }

    #[test]
    fn compass_wraps_near_pi() {
        let s = VehicleState::hover_at(Vector3::zeros(), PI - 1e-4);
        let mut noise = SensorNoiseSpec::noiseless();
        noise.compass_std = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let y = sample_compass(&s, &noise, &mut rng);
            assert!(y > -PI && y <= PI);
        }
    }

    #[test]
    fn tach_noise_is_unbiased() {
        let mut noise = SensorNoiseSpec::noiseless();
        noise.tach_std = 1.0;
        let hover = VehicleParams::default().hover_speed();
        let mut rng = substream(8, 0);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| sample_tach(&RotorSpeeds::uniform(hover), &noise, &mut rng)[2])
            .sum::<f64>()
            / n as f64;
        assert!((mean - hover).abs() < 0.01 * hover);
    }

    #[test]
    fn strict_policy_rejects_non_dividing_rate() {
        let mut s = default_schedule();
        s.policy = SchedulePolicy::Strict;
        let err = Scheduler::new(s).unwrap_err().to_string();
        assert!(err.contains("gps"), "{err}");
    }

    #[test]
    fn one_second_of_default_schedule() {
        let sched = Scheduler::new(default_schedule()).unwrap();
        let due: Vec<Freshness> = (0..250).map(|k| sched.tick(k)).collect();
        assert!(due.iter().all(|d| d.imu && d.tach));
        assert_eq!(due.iter().filter(|d| d.gps).count(), 20);
        assert_eq!(due.iter().filter(|d| d.compass).count(), 20);
        let gps_ticks: Vec<usize> = (0..250).filter(|&k| due[k].gps).collect();
        for pair in gps_ticks.windows(2) {
            let gap = pair[1] - pair[0];
            assert!(gap == 12 || gap == 13, "gap {gap}");
        }
    }

    #[test]
    fn held_values_between_gps_samples() {
        let (s, w, p) = hover();
        let mut noise = SensorNoiseSpec::noiseless();
        noise.gps_pos_std = 0.1;
        let mut suite = SensorSuite::new(noise, default_schedule(), 4).unwrap();
        let speeds = RotorSpeeds::uniform(p.hover_speed());
        let f0 = suite.sample(0, &s, &w, &speeds, &p);
        assert!(f0.fresh.gps);
        for k in 1..13 {
            let f = suite.sample(k, &s, &w, &speeds, &p);
            assert!(!f.fresh.gps);
            assert_eq!(f.gps_position, f0.gps_position);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let (s, w, p) = hover();
        let noise = crate::config::SimConfig::default().sensors.noise;
        let speeds = RotorSpeeds::uniform(p.hover_speed());
        let mut a = SensorSuite::new(noise.clone(), default_schedule(), 77).unwrap();
        let mut b = SensorSuite::new(noise, default_schedule(), 77).unwrap();
        for k in 0..500 {
            assert_eq!(a.sample(k, &s, &w, &speeds, &p), b.sample(k, &s, &w, &speeds, &p));
        }
    }
}
