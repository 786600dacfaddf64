//! IMU attack injection: acoustic-resonance tones (with sampling drift and
//! half-wave modulations), EMI saturation, and amplitude-scaled stealthy variants.
//!
//! Only the accelerometer and gyroscope fields of a frame are ever modified.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::sensors::SensorFrame;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    ArDos,
    ArSideSwing,
    ArSwitch,
    EmiSaturation,
    StepAmplitude,
    RampAmplitude,
}

impl AttackKind {
    /// The four profiles of the hover/detection benchmarks.
    pub const BENCHMARK: [AttackKind; 4] = [
        AttackKind::ArDos,
        AttackKind::ArSideSwing,
        AttackKind::ArSwitch,
        AttackKind::EmiSaturation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::ArDos => "ar_dos",
            AttackKind::ArSideSwing => "ar_side_swing",
            AttackKind::ArSwitch => "ar_switch",
            AttackKind::EmiSaturation => "emi_saturation",
            AttackKind::StepAmplitude => "step_amplitude",
            AttackKind::RampAmplitude => "ramp_amplitude",
        }
    }

    pub fn is_resonant(&self) -> bool {
        matches!(
            self,
            AttackKind::ArDos
                | AttackKind::ArSideSwing
                | AttackKind::ArSwitch
                | AttackKind::StepAmplitude
                | AttackKind::RampAmplitude
        )
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            AttackKind::None,
            AttackKind::ArDos,
            AttackKind::ArSideSwing,
            AttackKind::ArSwitch,
            AttackKind::EmiSaturation,
            AttackKind::StepAmplitude,
            AttackKind::RampAmplitude,
        ];
        all.into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown attack kind '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackProfile {
    pub kind: AttackKind,
    /// m/s²
    pub accel_amplitude: f64,
    /// rad/s
    pub gyro_amplitude: f64,
    /// Aliased tone frequency on the accelerometer, Hz.
    pub accel_frequency: f64,
    /// Aliased tone frequency on the gyroscope, Hz.
    pub gyro_frequency: f64,
    /// rad
    pub initial_phase: f64,
    /// Standard deviation of the per-sample interval jitter, s.
    pub sampling_drift: f64,
    /// Retained half for side-swing, direction for switch (+1 or −1).
    pub sideswing_sign: f64,
    /// Amplitude scale for the step/ramp variants.
    pub scale_k: f64,
    /// s
    pub ramp_duration: f64,
    /// s
    pub start_time: f64,
    /// s
    pub stop_time: f64,
    /// Accelerometer full range, m/s².
    pub accel_saturation: f64,
    /// Gyroscope full range, rad/s.
    pub gyro_saturation: f64,
    /// Sign of the saturated EMI value.
    pub emi_sign: f64,
    /// IMU sampling rate the tone is aliased against, Hz.
    pub sample_rate: f64,
    /// Number of attack windows (impulsive sequences use > 1).
    pub repeat_count: u32,
    /// Spacing between window starts, s.
    pub repeat_period: f64,
}

impl Default for AttackProfile {
    fn default() -> Self {
        crate::config::SimConfig::default().attack
    }
}

impl AttackProfile {
    pub fn none() -> Self {
        Self { kind: AttackKind::None, ..Self::default() }
    }

    /// Default amplitudes for `kind` active on `[start, stop)`.
    pub fn of_kind(kind: AttackKind, start: f64, stop: f64) -> Self {
        Self { kind, start_time: start, stop_time: stop, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == AttackKind::None {
            return Ok(());
        }
        let bad = |m: &str| Err(Error::Config(format!("attack: {m}")));
        if self.accel_amplitude < 0.0 || self.gyro_amplitude < 0.0 {
            return bad("amplitudes must be >= 0");
        }
        if self.start_time >= self.stop_time {
            return bad("start_time must precede stop_time");
        }
        if self.kind.is_resonant() {
            let nyquist = self.sample_rate / 2.0;
            for f in [self.accel_frequency, self.gyro_frequency] {
                if !(f > 0.0 && f < nyquist) {
                    return bad("induced frequency must lie in (0, sample_rate / 2)");
                }
            }
            if self.sampling_drift < 0.0 {
                return bad("sampling_drift must be >= 0");
            }
        }
        if self.kind == AttackKind::RampAmplitude && self.ramp_duration <= 0.0 {
            return bad("ramp_duration must be positive");
        }
        if self.repeat_count == 0 {
            return bad("repeat_count must be >= 1");
        }
        if self.repeat_count > 1 && self.repeat_period < self.stop_time - self.start_time {
            return bad("repeat_period shorter than one attack window");
        }
        if self.accel_saturation <= 0.0 || self.gyro_saturation <= 0.0 {
            return bad("saturation limits must be positive");
        }
        Ok(())
    }

    /// Start time of the attack window containing `t`, if any.
    pub fn active_window(&self, t: f64) -> Option<f64> {
        if self.kind == AttackKind::None {
            return None;
        }
        let width = self.stop_time - self.start_time;
        (0..self.repeat_count)
            .map(|j| self.start_time + j as f64 * self.repeat_period)
            .find(|&s| t >= s && t < s + width)
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.active_window(t).is_some()
    }
}

/// Phase-accumulating resonant tone. Every sample advances the phase by
/// `2πν (1/F_S + jitter)`, so interval jitter compounds into phase wander and
/// disperses the aliased tone around ν.
#[derive(Clone, Debug)]
pub struct ResonantOscillator {
    accel_phase: f64,
    gyro_phase: f64,
}

impl ResonantOscillator {
    pub fn new(initial_phase: f64) -> Self {
        Self { accel_phase: initial_phase, gyro_phase: initial_phase }
    }

    /// Unit-amplitude `(accel, gyro)` tone values for the current sample, then
    /// advance both phases by one jittered interval (shared draw).
    pub fn next<R: Rng>(&mut self, profile: &AttackProfile, rng: &mut R) -> (f64, f64) {
        let out = (self.accel_phase.sin(), self.gyro_phase.sin());
        let mut dt = 1.0 / profile.sample_rate;
        if profile.sampling_drift > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            dt += profile.sampling_drift * z;
        }
        self.accel_phase = (self.accel_phase + TAU * profile.accel_frequency * dt).rem_euclid(TAU);
        self.gyro_phase = (self.gyro_phase + TAU * profile.gyro_frequency * dt).rem_euclid(TAU);
        out
    }
}

/// Additive resonant value `(accel, gyro)` for one sample, before modulation.
pub fn resonant_signal<R: Rng>(
    profile: &AttackProfile,
    osc: &mut ResonantOscillator,
    rng: &mut R,
) -> (f64, f64) {
    let (a, g) = osc.next(profile, rng);
    (profile.accel_amplitude * a, profile.gyro_amplitude * g)
}

/// Apply the attack kind's amplitude/phase manipulation to a raw tone value.
/// `elapsed` is the time since the window opened (used by the ramp).
pub fn modulate(profile: &AttackProfile, value: f64, elapsed: f64) -> f64 {
    let s = profile.sideswing_sign;
    match profile.kind {
        AttackKind::ArSideSwing => (s * value).max(0.0) * s,
        AttackKind::ArSwitch => s * value.abs(),
        AttackKind::StepAmplitude => profile.scale_k * value,
        AttackKind::RampAmplitude => {
            value * profile.scale_k * (elapsed / profile.ramp_duration).clamp(0.0, 1.0)
        }
        AttackKind::None | AttackKind::ArDos | AttackKind::EmiSaturation => value,
    }
}

fn clamp3(v: Vector3<f64>, limit: f64) -> Vector3<f64> {
    v.map(|c| c.clamp(-limit, limit))
}

/// Attack state owned by one simulation run.
#[derive(Clone, Debug)]
pub struct AttackInjector {
    profile: AttackProfile,
    rng: ChaCha8Rng,
    osc: ResonantOscillator,
    window: Option<f64>,
}

impl AttackInjector {
    pub fn new(profile: AttackProfile, seed: u64) -> Result<Self> {
        profile.validate()?;
        let osc = ResonantOscillator::new(profile.initial_phase);
        Ok(Self { profile, rng: substream(seed, 20), osc, window: None })
    }

    pub fn profile(&self) -> &AttackProfile {
        &self.profile
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.profile.is_active(t)
    }

    /// Corrupt the IMU fields of `frame` if an attack window is open at `t`.
    pub fn inject(&mut self, frame: &SensorFrame, t: f64) -> SensorFrame {
        let Some(window_start) = self.profile.active_window(t) else {
            self.window = None;
            return frame.clone();
        };
        if self.window != Some(window_start) {
            self.window = Some(window_start);
            self.osc = ResonantOscillator::new(self.profile.initial_phase);
        }
        let mut out = frame.clone();
        let p = &self.profile;
        match p.kind {
            AttackKind::None => {}
            AttackKind::EmiSaturation => {
                out.accel = Vector3::repeat(p.emi_sign * p.accel_saturation);
                out.gyro = Vector3::repeat(p.emi_sign * p.gyro_saturation);
            }
            _ => {
                if !frame.fresh.imu {
                    return out;
                }
                let (a, g) = resonant_signal(p, &mut self.osc, &mut self.rng);
                let elapsed = t - window_start;
                let a = modulate(p, a, elapsed);
                let g = modulate(p, g, elapsed);
                out.accel = clamp3(frame.accel.add_scalar(a), p.accel_saturation);
                out.gyro = clamp3(frame.gyro.add_scalar(g), p.gyro_saturation);
            }
        }
        out
    }
}
