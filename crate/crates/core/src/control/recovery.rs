//! Multi-stage recovery after a system anomaly: brake, restore near-hover,
//! then fly on under the resilient estimate until the alarm clears.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{RecoveryConfig, Setpoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryPhase {
    Normal,
    Brake,
    HoverRestore,
    RecoveredFlight,
}

impl RecoveryPhase {
    pub fn name(&self) -> &'static str {
        match self {
            RecoveryPhase::Normal => "normal",
            RecoveryPhase::Brake => "brake",
            RecoveryPhase::HoverRestore => "hover_restore",
            RecoveryPhase::RecoveredFlight => "recovered_flight",
        }
    }

    pub fn index(&self) -> u8 {
        *self as u8
    }

    /// Which estimate the controller consumes in this phase.
    pub fn estimator(&self) -> EstimatorSelect {
        match self {
            RecoveryPhase::Normal => EstimatorSelect::Standard,
            _ => EstimatorSelect::Resilient,
        }
    }

    pub fn is_legal(from: RecoveryPhase, to: RecoveryPhase) -> bool {
        use RecoveryPhase::*;
        matches!(
            (from, to),
            (Normal, Brake) | (Brake, HoverRestore) | (HoverRestore, RecoveredFlight) | (RecoveredFlight, Normal)
        ) || (to == Brake && from != Brake)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorSelect {
    Standard,
    Resilient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub t: f64,
    pub from: RecoveryPhase,
    pub to: RecoveryPhase,
}

/// What the controller should do on this tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryCommand {
    pub phase: RecoveryPhase,
    pub estimator: EstimatorSelect,
    /// Frozen hold point while braking or restoring hover; `None` means
    /// follow the mission.
    pub hold: Option<Setpoint>,
    /// Mission progress may advance.
    pub mission_active: bool,
    pub speed_cap: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RecoveryMachine {
    cfg: RecoveryConfig,
    phase: RecoveryPhase,
    entered: f64,
    slow_since: Option<f64>,
    hold: Option<Setpoint>,
    prev_flag: bool,
    log: Vec<Transition>,
}

impl RecoveryMachine {
    pub fn new(cfg: RecoveryConfig) -> Self {
        Self {
            cfg,
            phase: RecoveryPhase::Normal,
            entered: 0.0,
            slow_since: None,
            hold: None,
            prev_flag: false,
            log: Vec::new(),
        }
    }

    pub fn phase(&self) -> RecoveryPhase {
        self.phase
    }

    pub fn phase_entry_time(&self) -> f64 {
        self.entered
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.log
    }

    fn enter(&mut self, to: RecoveryPhase, t: f64) {
        debug_assert!(RecoveryPhase::is_legal(self.phase, to));
        self.log.push(Transition { t, from: self.phase, to });
        self.phase = to;
        self.entered = t;
        self.slow_since = None;
    }

    /// Advance on the detector's latched flag. `position`, `velocity` and
    /// `yaw` come from the resilient estimate.
    pub fn step(&mut self, flag: bool, position: &Vector3<f64>, velocity: &Vector3<f64>, yaw: f64, t: f64) -> RecoveryCommand {
        let rising = flag && !self.prev_flag;
        self.prev_flag = flag;

        if self.cfg.enabled && rising && self.phase != RecoveryPhase::Brake {
            self.hold = Some(Setpoint::hold(*position, yaw));
            self.enter(RecoveryPhase::Brake, t);
        } else {
            self.advance(flag, velocity.norm(), t);
        }
        let holding = matches!(self.phase, RecoveryPhase::Brake | RecoveryPhase::HoverRestore);
        RecoveryCommand {
            phase: self.phase,
            estimator: self.phase.estimator(),
            hold: if holding { self.hold } else { None },
            mission_active: !holding,
            speed_cap: if self.phase == RecoveryPhase::RecoveredFlight { self.cfg.recovered_speed_cap } else { None },
        }
    }

    fn advance(&mut self, flag: bool, speed: f64, t: f64) {
        match self.phase {
            RecoveryPhase::Normal => {}
            RecoveryPhase::Brake => {
                if speed < self.cfg.v_brake_exit {
                    self.enter(RecoveryPhase::HoverRestore, t);
                }
            }
            RecoveryPhase::HoverRestore => {
                if speed < self.cfg.v_hover {
                    let since = *self.slow_since.get_or_insert(t);
                    if t - since >= self.cfg.t_hover {
                        self.enter(RecoveryPhase::RecoveredFlight, t);
                    }
                } else {
                    self.slow_since = None;
                }
            }
            RecoveryPhase::RecoveredFlight => {
                if !flag {
                    self.hold = None;
                    self.enter(RecoveryPhase::Normal, t);
                }
            }
        }
    }
}
