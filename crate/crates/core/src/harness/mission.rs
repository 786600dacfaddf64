//! Mission geometry and the reference tracker that walks it.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::control::Setpoint;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionKind {
    Hover,
    WaypointVisit,
    LineTrack,
    SquareTrack,
}

impl MissionKind {
    pub const ALL: [MissionKind; 4] =
        [MissionKind::Hover, MissionKind::WaypointVisit, MissionKind::LineTrack, MissionKind::SquareTrack];

    pub fn name(&self) -> &'static str {
        match self {
            MissionKind::Hover => "hover",
            MissionKind::WaypointVisit => "waypoint_visit",
            MissionKind::LineTrack => "line_track",
            MissionKind::SquareTrack => "square_track",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    /// NED, m.
    pub position: [f64; 3],
    /// rad
    pub yaw: f64,
    /// Time to hold once reached, s.
    pub dwell: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub kind: MissionKind,
    /// Takeoff/hover point, NED, m (z negative is up).
    pub origin: [f64; 3],
    pub yaw: f64,
    /// LineTrack length along +X, m.
    pub line_length: f64,
    /// SquareTrack side, m.
    pub square_side: f64,
    /// m/s
    pub cruise_speed: f64,
    /// m
    pub completion_radius: f64,
    /// Explicit waypoints for WaypointVisit, relative to `origin`.
    #[serde(default)]
    pub waypoints: Vec<Waypoint>,
}

impl Default for MissionConfig {
    fn default() -> Self {
        crate::config::SimConfig::default().mission
    }
}

/// A resolved mission: an ordered list of absolute waypoints, the first being
/// the start point.
#[derive(Clone, Debug, PartialEq)]
pub struct Mission {
    pub kind: MissionKind,
    pub waypoints: Vec<Waypoint>,
    pub cruise_speed: f64,
    pub completion_radius: f64,
}

impl Mission {
    pub fn from_config(cfg: &MissionConfig) -> Result<Self> {
        let o = Vector3::from(cfg.origin);
        let wp = |p: Vector3<f64>, dwell: f64| Waypoint { position: p.into(), yaw: cfg.yaw, dwell };
        let waypoints = match cfg.kind {
            MissionKind::Hover => vec![wp(o, 0.0)],
            MissionKind::LineTrack => vec![wp(o, 0.0), wp(o + Vector3::new(cfg.line_length, 0.0, 0.0), 0.0)],
            MissionKind::SquareTrack => {
                let s = cfg.square_side;
                [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s), (0.0, 0.0)]
                    .iter()
                    .map(|(x, y)| wp(o + Vector3::new(*x, *y, 0.0), 0.0))
                    .collect()
            }
            MissionKind::WaypointVisit => {
                let mut v = vec![wp(o, 0.0)];
                let list = if cfg.waypoints.is_empty() { default_visit_waypoints() } else { cfg.waypoints.clone() };
                v.extend(list.iter().map(|w| Waypoint {
                    position: (o + Vector3::from(w.position)).into(),
                    yaw: w.yaw,
                    dwell: w.dwell,
                }));
                v
            }
        };
        let m = Self { kind: cfg.kind, waypoints, cruise_speed: cfg.cruise_speed, completion_radius: cfg.completion_radius };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::Config("mission needs at least one waypoint".into()));
        }
        if !(self.completion_radius > 0.0) {
            return Err(Error::Config("mission completion_radius must be positive".into()));
        }
        if self.waypoints.len() > 1 && !(self.cruise_speed > 0.0) {
            return Err(Error::Config("mission cruise_speed must be positive".into()));
        }
        Ok(())
    }

    pub fn start(&self) -> Vector3<f64> {
        Vector3::from(self.waypoints[0].position)
    }

    /// Horizontal reference polyline.
    pub fn path(&self) -> Vec<Vector3<f64>> {
        self.waypoints.iter().map(|w| Vector3::from(w.position)).collect()
    }
}

fn default_visit_waypoints() -> Vec<Waypoint> {
    [(4.0, 0.0, 0.0), (4.0, 3.0, 1.5), (0.0, 3.0, 3.1)]
        .iter()
        .map(|(x, y, yaw)| Waypoint { position: [*x, *y, 0.0], yaw: *yaw, dwell: 1.0 })
        .collect()
}

/// Horizontal distance from `p` to the polyline `path`.
pub fn lateral_distance(p: &Vector3<f64>, path: &[Vector3<f64>]) -> f64 {
    let flat = |v: &Vector3<f64>| Vector3::new(v.x, v.y, 0.0);
    let q = flat(p);
    if path.len() == 1 {
        return (q - flat(&path[0])).norm();
    }
    path.windows(2)
        .map(|w| {
            let (a, b) = (flat(&w[0]), flat(&w[1]));
            let ab = b - a;
            let len2 = ab.norm_squared();
            let s = if len2 > 0.0 { ((q - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            (q - (a + ab * s)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Moves a reference point along the mission at cruise speed. The reference
/// waits at each waypoint until the vehicle is within the completion radius
/// and the dwell has elapsed, and it stalls while progress is suspended.
#[derive(Clone, Debug)]
pub struct MissionTracker {
    mission: Mission,
    /// Index of the segment being flown (towards waypoint `segment + 1`).
    segment: usize,
    /// Distance travelled along the current segment, m.
    along: f64,
    arrived_at: Option<f64>,
    completed: Option<f64>,
}

impl MissionTracker {
    pub fn new(mission: Mission) -> Self {
        Self { mission, segment: 0, along: 0.0, arrived_at: None, completed: None }
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn completed_at(&self) -> Option<f64> {
        self.completed
    }

    fn segment_ends(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let w = &self.mission.waypoints;
        (self.segment + 1 < w.len()).then(|| (Vector3::from(w[self.segment].position), Vector3::from(w[self.segment + 1].position)))
    }

    /// Advance by `dt` when `active` and return the current setpoint.
    pub fn update(&mut self, vehicle: &Vector3<f64>, active: bool, t: f64, dt: f64) -> Setpoint {
        if self.mission.kind == MissionKind::Hover {
            let w = &self.mission.waypoints[0];
            return Setpoint::hold(Vector3::from(w.position), w.yaw);
        }
        if active && self.completed.is_none() {
            if let Some((a, b)) = self.segment_ends() {
                let len = (b - a).norm();
                if self.along < len {
                    self.along = (self.along + self.mission.cruise_speed * dt).min(len);
                } else if (vehicle - b).norm() <= self.mission.completion_radius {
                    let wp = &self.mission.waypoints[self.segment + 1];
                    let since = *self.arrived_at.get_or_insert(t);
                    if t - since >= wp.dwell {
                        self.arrived_at = None;
                        if self.segment + 2 >= self.mission.waypoints.len() {
                            self.completed = Some(t);
                        } else {
                            self.segment += 1;
                            self.along = 0.0;
                        }
                    }
                }
            }
        }
        match self.segment_ends() {
            Some((a, b)) => {
                let len = (b - a).norm();
                let dir = if len > 0.0 { (b - a) / len } else { Vector3::zeros() };
                let moving = active && self.completed.is_none() && self.along < len;
                let wp = &self.mission.waypoints[self.segment + 1];
                Setpoint {
                    position: a + dir * self.along,
                    yaw: wp.yaw,
                    velocity: if moving { dir * self.mission.cruise_speed } else { Vector3::zeros() },
                }
            }
            None => {
                let w = self.mission.waypoints.last().expect("validated non-empty");
                Setpoint::hold(Vector3::from(w.position), w.yaw)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line() -> Mission {
        Mission::from_config(&MissionConfig { kind: MissionKind::LineTrack, ..MissionConfig::default() }).unwrap()
    }

    #[test]
    fn lateral_distance_cases() {
        let path = vec![Vector3::new(0.0, 0.0, -5.0), Vector3::new(10.0, 0.0, -5.0)];
        assert_eq!(lateral_distance(&Vector3::new(3.0, 0.0, -4.0), &path), 0.0);
        assert_relative_eq!(lateral_distance(&Vector3::new(3.0, 0.4, -5.0), &path), 0.4);
        assert_relative_eq!(lateral_distance(&Vector3::new(12.0, 0.0, -5.0), &path), 2.0);
        assert_relative_eq!(lateral_distance(&Vector3::new(3.0, 4.0, 0.0), &path[..1]), 5.0);
    }

    #[test]
    fn perfect_follower_completes_line() {
        let m = line();
        let length = m.waypoints[1].position[0] - m.waypoints[0].position[0];
        let speed = m.cruise_speed;
        let mut tr = MissionTracker::new(m);
        let dt = 0.004;
        let mut pos = tr.mission().start();
        let mut t = 0.0;
        while tr.completed_at().is_none() && t < 100.0 {
            pos = tr.update(&pos, true, t, dt).position;
            t += dt;
        }
        let done = tr.completed_at().unwrap();
        assert!((done - length / speed).abs() < 0.05, "{done}");
    }

    #[test]
    fn suspended_progress_stalls() {
        let mut tr = MissionTracker::new(line());
        let start = tr.mission().start();
        for k in 0..500 {
            let sp = tr.update(&start, false, k as f64 * 0.004, 0.004);
            assert_eq!(sp.position, start);
            assert_eq!(sp.velocity, Vector3::zeros());
        }
    }

    #[test]
    fn square_and_visit_shapes() {
        let sq = Mission::from_config(&MissionConfig { kind: MissionKind::SquareTrack, ..MissionConfig::default() }).unwrap();
        assert_eq!(sq.waypoints.len(), 5);
        assert_eq!(sq.waypoints[0].position, sq.waypoints[4].position);
        let wv = Mission::from_config(&MissionConfig { kind: MissionKind::WaypointVisit, ..MissionConfig::default() }).unwrap();
        assert!(wv.waypoints.len() >= 2);
        assert!(Mission::from_config(&MissionConfig { completion_radius: 0.0, ..MissionConfig::default() }).is_err());
    }
}
