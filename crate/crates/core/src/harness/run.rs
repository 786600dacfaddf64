//! The synchronous simulation loop and its logs.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::lpf::ImuLowPass;
use super::metrics::{lateral_rmse, mean_std, path_distance, rotor_rms, RunMetrics};
use super::mission::{Mission, MissionTracker};
use super::RecoveryMethod;
use crate::attacks::AttackInjector;
use crate::config::SimConfig;
use crate::control::{mixer, motor_lag, CascadeController, EstimatorSelect, RecoveryConfig, RecoveryMachine, RecoveryPhase};
use crate::detection::roc::Sample;
use crate::detection::{predicted_imu, residual, Chi2Detector, DetectorOutput, InnovationCusumDetector, MarsDetector};
use crate::dynamics::{plant_wrench, step_dynamics, RotorSpeeds, VehicleState};
use crate::error::{Error, Result};
use crate::estimation::{ResilientEstimator, StandardEstimator};
use crate::sensors::SensorSuite;

/// One row of the per-tick time series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub std_x: f64,
    pub std_y: f64,
    pub std_z: f64,
    pub std_vx: f64,
    pub std_vy: f64,
    pub std_vz: f64,
    pub std_roll: f64,
    pub std_pitch: f64,
    pub std_yaw: f64,
    pub rse_x: f64,
    pub rse_y: f64,
    pub rse_z: f64,
    pub rse_vx: f64,
    pub rse_vy: f64,
    pub rse_vz: f64,
    pub rse_roll: f64,
    pub rse_pitch: f64,
    pub rse_yaw: f64,
    pub rse_p: f64,
    pub rse_q: f64,
    pub rse_r: f64,
    pub accel_x: f64,
    pub accel_y: f64,
    pub accel_z: f64,
    pub gyro_x: f64,
    pub gyro_y: f64,
    pub gyro_z: f64,
    /// IMU minus resilient prediction, raw units.
    pub accel_err_x: f64,
    pub accel_err_y: f64,
    pub accel_err_z: f64,
    pub gyro_err_x: f64,
    pub gyro_err_y: f64,
    pub gyro_err_z: f64,
    pub residual: Option<f64>,
    pub cusum: f64,
    pub rate: f64,
    pub alpha: u8,
    pub alarm: u8,
    pub flag: u8,
    pub mahalanobis: Option<f64>,
    pub attack: u8,
    pub phase: &'static str,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    AttackStart { t: f64 },
    AttackStop { t: f64 },
    AlarmRaised { t: f64 },
    AlarmCleared { t: f64 },
    Phase { t: f64, from: RecoveryPhase, to: RecoveryPhase },
    EstimatorFailure { t: f64, estimator: &'static str, detail: String },
    MissionComplete { t: f64 },
    Crash { t: f64, reason: String },
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub metrics: RunMetrics,
    /// Empty unless logging was requested.
    pub rows: Vec<LogRow>,
    pub events: Vec<Event>,
    /// Labeled detector inputs for offline evaluation.
    pub samples: Vec<Sample>,
    /// Ground truth per tick.
    pub truth: Vec<VehicleState>,
    /// True wrench per tick (force x/y/z, torque x/y/z).
    pub wrench: Vec<[f64; 6]>,
    /// Resilient wrench estimate per tick, same layout.
    pub wrench_estimate: Vec<[f64; 6]>,
    /// Standard and resilient attitude estimates per tick.
    pub attitude_estimates: Vec<(crate::dynamics::Quaternion, crate::dynamics::Quaternion)>,
    pub filter_health: FilterHealth,
}

/// Worst numerical drift of either filter over all steps of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FilterHealth {
    /// Largest `|‖q̂‖ − 1|`.
    pub quaternion_norm_error: f64,
    /// Largest `|P − Pᵀ|` entry.
    pub covariance_asymmetry: f64,
    pub steps: usize,
}

impl FilterHealth {
    fn observe(&mut self, b: &crate::estimation::EkfBelief) {
        use crate::dynamics::state::QUAT;
        let n = b.x.fixed_rows::<4>(QUAT).norm();
        self.quaternion_norm_error = self.quaternion_norm_error.max((n - 1.0).abs());
        self.covariance_asymmetry = self.covariance_asymmetry.max((b.p - b.p.transpose()).amax());
        self.steps += 1;
    }
}

impl RunResult {
    pub fn write_timeseries(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_events(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for e in &self.events {
            serde_json::to_writer(&mut f, e)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        Ok(())
    }

    /// `timeseries.csv`, `events.jsonl` and `metrics.json` under `dir`.
    pub fn write_all(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_timeseries(dir.join("timeseries.csv"))?;
        self.write_events(dir.join("events.jsonl"))?;
        std::fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&self.metrics)?)?;
        Ok(())
    }
}

fn wrench6(w: &crate::dynamics::BodyWrench) -> [f64; 6] {
    [w.force.x, w.force.y, w.force.z, w.torque.x, w.torque.y, w.torque.z]
}

/// Run a scenario to its duration or until the vehicle crashes.
pub fn run_scenario(cfg: &SimConfig) -> Result<RunResult> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let params = &cfg.vehicle;
    let dt = cfg.sensors.schedule.base_tick();
    let ticks = (sc.duration / dt).round() as u64;

    let mission = Mission::from_config(&cfg.mission)?;
    let path = mission.path();
    let start_yaw = mission.waypoints[0].yaw;
    let mut tracker = MissionTracker::new(mission.clone());
    let mut truth = VehicleState::hover_at(mission.start(), start_yaw);
    let mut actual = RotorSpeeds::uniform(params.hover_speed());

    let mut sensors = SensorSuite::new(cfg.sensors.noise.clone(), cfg.sensors.schedule.clone(), sc.seed)?;
    let mut injector = AttackInjector::new(cfg.attack.clone(), sc.seed)?;
    let mut lpf = match sc.recovery {
        RecoveryMethod::Lpf => Some(ImuLowPass::new(sc.lpf_cutoff, cfg.sensors.schedule.imu_rate as f64)?),
        _ => None,
    };
    let mut standard = StandardEstimator::new(&truth, params.gravity, &cfg.estimation, &cfg.sensors.noise);
    let mut resilient = ResilientEstimator::new(&truth, params, &cfg.estimation, &cfg.sensors.noise);
    let mut detector = MarsDetector::new(cfg.detector.clone())?;
    let mut chi2 = Chi2Detector::new(&cfg.benchmark, cfg.detector.clearance_time);
    let mut icusum = InnovationCusumDetector::new(&cfg.benchmark, cfg.detector.clearance_time);
    let recovery_cfg = RecoveryConfig {
        enabled: cfg.control.recovery.enabled && sc.recovery == RecoveryMethod::Mars,
        ..cfg.control.recovery.clone()
    };
    let mut recovery = RecoveryMachine::new(recovery_cfg);
    let mut controller = CascadeController::new(cfg.control.clone());
    let p0 = cfg.estimation.initial.covariance();

    let mut rows = Vec::new();
    let mut events = Vec::new();
    let mut samples = Vec::with_capacity(ticks as usize);
    let mut truth_log = Vec::with_capacity(ticks as usize);
    let mut wrench_log = Vec::with_capacity(ticks as usize);
    let mut wrench_est_log = Vec::with_capacity(ticks as usize);
    let mut att_log = Vec::with_capacity(ticks as usize);
    let mut health = FilterHealth::default();
    let mut positions = Vec::with_capacity(ticks as usize);
    let mut speeds_clean = Vec::new();
    let mut speeds_attack = Vec::new();
    let mut tilts = Vec::new();
    let mut tilts_attack = Vec::new();
    let mut max_dev: f64 = 0.0;

    let mut selected = EstimatorSelect::Standard;
    let mut standard_failed = false;
    let mut was_attacked = false;
    let mut prev_flag = false;
    let mut seen_transitions = 0;
    let mut tilt_since: Option<f64> = None;
    let mut crash: Option<(f64, String)> = None;
    let mut response: Option<f64> = None;
    let mut attack_start: Option<f64> = None;
    let mut last_det = DetectorOutput::default();

    for k in 0..ticks {
        let t = k as f64 * dt;
        let wrench = match plant_wrench(&actual, &truth, params) {
            Ok(w) => w,
            Err(e) => {
                crash = Some((t, format!("plant diverged: {e}")));
                break;
            }
        };
        let frame = sensors.sample(k, &truth, &wrench, &actual, params);
        let attacked = injector.inject(&frame, t);
        let active = injector.is_active(t);
        if active != was_attacked {
            events.push(if active { Event::AttackStart { t } } else { Event::AttackStop { t } });
            if active && attack_start.is_none() {
                attack_start = Some(t);
            }
            was_attacked = active;
        }

        let std_input = match lpf.as_mut() {
            Some(f) => f.apply(&attacked),
            None => attacked.clone(),
        };
        if !standard_failed {
            if let Err(e) = standard.step(&std_input) {
                standard_failed = true;
                events.push(Event::EstimatorFailure { t, estimator: "standard", detail: e.to_string() });
            }
        }
        if let Err(e) = resilient.step(&attacked) {
            events.push(Event::EstimatorFailure { t, estimator: "resilient", detail: e.to_string() });
            crash = Some((t, "resilient estimator diverged".into()));
            break;
        }
        if !standard_failed {
            health.observe(standard.belief());
        }
        health.observe(resilient.belief());
        let rse_wrench = *resilient.wrench().expect("wrench set by step");
        let r = residual(&attacked, resilient.belief(), &rse_wrench, params, &cfg.detector);
        let det = detector.step(r, t);
        let d = if standard_failed { None } else { standard.innovation().map(|i| i.mahalanobis) };
        chi2.step(d, t);
        icusum.step(d, t);
        if det.flag != prev_flag {
            events.push(if det.flag { Event::AlarmRaised { t } } else { Event::AlarmCleared { t } });
            prev_flag = det.flag;
        }
        if let Some(start) = attack_start {
            if response.is_none() && det.flag && t >= start {
                response = Some(t - start);
            }
        }
        last_det = det;

        let rse_state = resilient.belief().state();
        let cmd = recovery.step(det.flag, &rse_state.position, &rse_state.velocity, rse_state.attitude.yaw(), t);
        for tr in &recovery.transitions()[seen_transitions..] {
            events.push(Event::Phase { t: tr.t, from: tr.from, to: tr.to });
        }
        seen_transitions = recovery.transitions().len();
        if cmd.estimator != selected {
            controller.reset_integrators();
            if cmd.estimator == EstimatorSelect::Standard {
                standard.reinitialize(&rse_state, p0);
                standard_failed = false;
            }
            selected = cmd.estimator;
        }
        let est = match selected {
            EstimatorSelect::Standard => {
                if standard_failed {
                    crash = Some((t, "standard estimator diverged".into()));
                    break;
                }
                standard.belief().state()
            }
            EstimatorSelect::Resilient => rse_state,
        };

        let sp = match cmd.hold {
            Some(h) => h,
            None => {
                let was_done = tracker.completed_at().is_some();
                let sp = tracker.update(&est.position, cmd.mission_active, t, dt);
                if !was_done {
                    if let Some(tc) = tracker.completed_at() {
                        events.push(Event::MissionComplete { t: tc });
                    }
                }
                sp
            }
        };
        let out = controller.step(&est, &sp, cmd.speed_cap, params, dt);
        let mix = mixer(&out.torque, out.thrust, params);
        let next_speeds = motor_lag(&mix.speeds, &actual, cfg.control.motor_time_constant, dt);

        let euler = truth.attitude.to_euler();
        let tilt = truth.attitude.tilt();
        samples.push(Sample { t, r, label: active, d });
        truth_log.push(truth);
        wrench_log.push(wrench6(&wrench));
        wrench_est_log.push(wrench6(&rse_wrench));
        att_log.push((standard.belief().state().attitude, rse_state.attitude));
        positions.push(truth.position);
        tilts.push(tilt);
        max_dev = max_dev.max(path_distance(&truth.position, &path));
        if active {
            speeds_attack.push(actual.0);
            tilts_attack.push(tilt);
        } else if attack_start.is_none() {
            speeds_clean.push(actual.0);
        }
        if sc.record_log {
            let s = standard.belief().state();
            let se = s.attitude.to_euler();
            let re = rse_state.attitude.to_euler();
            let (a_hat, g_hat) = predicted_imu(resilient.belief(), &rse_wrench, params);
            let (a_err, g_err) = (attacked.accel - a_hat, attacked.gyro - g_hat);
            rows.push(LogRow {
                t,
                x: truth.position.x,
                y: truth.position.y,
                z: truth.position.z,
                vx: truth.velocity.x,
                vy: truth.velocity.y,
                vz: truth.velocity.z,
                roll: euler.roll,
                pitch: euler.pitch,
                yaw: euler.yaw,
                p: truth.angular_velocity.x,
                q: truth.angular_velocity.y,
                r: truth.angular_velocity.z,
                std_x: s.position.x,
                std_y: s.position.y,
                std_z: s.position.z,
                std_vx: s.velocity.x,
                std_vy: s.velocity.y,
                std_vz: s.velocity.z,
                std_roll: se.roll,
                std_pitch: se.pitch,
                std_yaw: se.yaw,
                rse_x: rse_state.position.x,
                rse_y: rse_state.position.y,
                rse_z: rse_state.position.z,
                rse_vx: rse_state.velocity.x,
                rse_vy: rse_state.velocity.y,
                rse_vz: rse_state.velocity.z,
                rse_roll: re.roll,
                rse_pitch: re.pitch,
                rse_yaw: re.yaw,
                rse_p: rse_state.angular_velocity.x,
                rse_q: rse_state.angular_velocity.y,
                rse_r: rse_state.angular_velocity.z,
                accel_x: attacked.accel.x,
                accel_y: attacked.accel.y,
                accel_z: attacked.accel.z,
                gyro_x: attacked.gyro.x,
                gyro_y: attacked.gyro.y,
                gyro_z: attacked.gyro.z,
                accel_err_x: a_err.x,
                accel_err_y: a_err.y,
                accel_err_z: a_err.z,
                gyro_err_x: g_err.x,
                gyro_err_y: g_err.y,
                gyro_err_z: g_err.z,
                residual: r,
                cusum: det.statistic,
                rate: det.rate,
                alpha: det.alpha.into(),
                alarm: det.raw.into(),
                flag: det.flag.into(),
                mahalanobis: d,
                attack: active.into(),
                phase: cmd.phase.name(),
                w1: actual.0[0],
                w2: actual.0[1],
                w3: actual.0[2],
                w4: actual.0[3],
            });
        }

        let t_next = t + dt;
        // Rotor speeds are held over the tick, so the wrench the sensors saw
        // drives the step.
        match step_dynamics(&truth, &wrench, params, dt) {
            Ok(s) => truth = s,
            Err(e) => {
                crash = Some((t_next, format!("plant diverged: {e}")));
                break;
            }
        }
        actual = next_speeds;

        if truth.position.z >= 0.0 {
            crash = Some((t_next, "ground impact".into()));
            break;
        }
        let e = truth.attitude.to_euler();
        if e.roll.abs() > sc.crash_tilt || e.pitch.abs() > sc.crash_tilt {
            let since = *tilt_since.get_or_insert(t_next);
            if t_next - since >= sc.crash_tilt_time {
                crash = Some((t_next, "attitude beyond limit".into()));
                break;
            }
        } else {
            tilt_since = None;
        }
    }
    let _ = last_det;

    if let Some((t, reason)) = &crash {
        events.push(Event::Crash { t: *t, reason: reason.clone() });
    }
    let survival_time = crash.as_ref().map_or(sc.duration, |(t, _)| t.min(sc.duration));
    let rms_window = cfg.sensors.schedule.tick_rate as usize;
    let (_, tilt_std) = mean_std(if tilts_attack.is_empty() { &tilts } else { &tilts_attack });
    let metrics = RunMetrics {
        survived: crash.is_none(),
        survival_time,
        rotor_rms_clean: (!speeds_clean.is_empty()).then(|| rotor_rms(&speeds_clean, rms_window)),
        rotor_rms_attack: (!speeds_attack.is_empty()).then(|| rotor_rms(&speeds_attack, rms_window)),
        lateral_rmse: lateral_rmse(&positions, &path),
        completion_time: if mission.waypoints.len() > 1 { tracker.completed_at() } else { None },
        detector_response_time: response,
        max_tilt: tilts.iter().cloned().fold(0.0, f64::max),
        tilt_std,
        max_position_deviation: max_dev,
        brake_count: recovery.transitions().iter().filter(|t| t.to == RecoveryPhase::Brake).count(),
    };
    Ok(RunResult {
        metrics,
        rows,
        events,
        samples,
        truth: truth_log,
        wrench: wrench_log,
        wrench_estimate: wrench_est_log,
        attitude_estimates: att_log,
        filter_health: health,
    })
}

/// Convenience for examples and tests: error out when the scenario crashed.
pub fn expect_survival(res: &RunResult) -> Result<()> {
    if res.metrics.survived {
        Ok(())
    } else {
        Err(Error::IntegrationDiverged { step: None, detail: format!("crashed at {:.3} s", res.metrics.survival_time) })
    }
}
