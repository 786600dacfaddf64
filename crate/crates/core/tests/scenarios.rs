use nalgebra::Vector3;

use mars_sim::attacks::{AttackKind, AttackProfile};
use mars_sim::control::RecoveryPhase;
use mars_sim::dynamics::{plant_wrench, RotorSpeeds, VehicleState};
use mars_sim::estimation::ResilientEstimator;
use mars_sim::harness::sweep::{run_grid, GridSpec};
use mars_sim::harness::{run_scenario, Event, MissionKind, RecoveryMethod};
use mars_sim::sensors::SensorSuite;
use mars_sim::{Error, SimConfig};

fn hover(kind: AttackKind, recovery: RecoveryMethod, duration: f64) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.attack = AttackProfile::of_kind(kind, 5.0, duration);
    cfg.scenario.duration = duration;
    cfg.scenario.recovery = recovery;
    cfg
}

#[test]
fn clean_hover_holds_position_without_switching() {
    let mut cfg = hover(AttackKind::None, RecoveryMethod::Mars, 20.0);
    cfg.scenario.seed = 2;
    cfg.scenario.record_log = true;
    let res = run_scenario(&cfg).unwrap();
    assert!(res.metrics.survived);
    assert_eq!(res.metrics.brake_count, 0);
    assert!(res.metrics.lateral_rmse < 0.1, "rmse {}", res.metrics.lateral_rmse);
    assert!(res.rows.iter().all(|r| r.phase == RecoveryPhase::Normal.name()));
    assert_eq!(res.rows.len(), 5000);
}

#[test]
fn unprotected_hover_crashes_under_emi() {
    let res = run_scenario(&hover(AttackKind::EmiSaturation, RecoveryMethod::None, 15.0)).unwrap();
    assert!(!res.metrics.survived);
    assert!(res.metrics.survival_time > 5.0 && res.metrics.survival_time < 10.0);
    assert!(res.events.iter().any(|e| matches!(e, Event::Crash { .. })));
}

#[test]
fn mars_brakes_then_recovers_under_switch_attack() {
    let res = run_scenario(&hover(AttackKind::ArSwitch, RecoveryMethod::Mars, 15.0)).unwrap();
    assert!(res.metrics.survived);
    assert!(res.metrics.brake_count >= 1);
    let response = res.metrics.detector_response_time.expect("attack detected");
    assert!(response < 0.1, "response {response}");
    assert!(res.events.iter().any(|e| matches!(e, Event::Phase { to, .. } if *to == RecoveryPhase::Brake)));
}

#[test]
fn single_cell_sweep_matches_direct_run() {
    let grid = GridSpec::from_toml_str(
        r#"
        seeds = [4]
        [base]
        scenario.duration = 12.0
        attack.kind = "ar_side_swing"
        attack.start_time = 5.0
        attack.stop_time = 12.0
        [[axis]]
        key = "scenario.recovery"
        values = ["mars"]
        "#,
    )
    .unwrap();
    let rows = run_grid(&grid);
    assert_eq!(rows.len(), 1);
    let from_grid = rows[0].outcome.clone().unwrap();
    let cfg = grid.config(&grid.cells()[0], 4).unwrap();
    assert_eq!(cfg.scenario.seed, 4);
    assert_eq!(run_scenario(&cfg).unwrap().metrics, from_grid);
}

#[test]
fn different_seeds_give_different_runs() {
    let mut a = hover(AttackKind::None, RecoveryMethod::Mars, 3.0);
    a.scenario.record_log = true;
    let mut b = a.clone();
    b.scenario.seed = 2;
    let (ra, rb) = (run_scenario(&a).unwrap(), run_scenario(&b).unwrap());
    assert_ne!(ra.rows[100].accel_x, rb.rows[100].accel_x);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = SimConfig::default();
    cfg.scenario.duration = -1.0;
    assert!(matches!(run_scenario(&cfg), Err(Error::Config(_) | Error::InvalidInput(_))));
    assert!(SimConfig::from_toml_str("[scenario]\nrecovery = \"prayer\"").is_err());
    assert!(SimConfig::from_toml_str("[scenario]\nno_such_key = 1").is_err());
}

#[test]
fn every_mission_completes_without_attack() {
    for kind in [MissionKind::WaypointVisit, MissionKind::LineTrack, MissionKind::SquareTrack] {
        let mut cfg = SimConfig::default();
        cfg.mission.kind = kind;
        cfg.attack = AttackProfile::of_kind(AttackKind::None, 0.0, 0.0);
        cfg.scenario.duration = 60.0;
        let m = run_scenario(&cfg).unwrap().metrics;
        assert!(m.completion_time.is_some(), "{} did not complete", kind.name());
        assert_eq!(m.brake_count, 0);
    }
}

#[test]
fn resilient_estimate_ignores_imu_contents() {
    let cfg = SimConfig::default();
    let params = &cfg.vehicle;
    let truth = VehicleState::hover_at(Vector3::new(0.0, 0.0, -5.0), 0.2);
    let speeds = RotorSpeeds::uniform(params.hover_speed());
    let wrench = plant_wrench(&speeds, &truth, params).unwrap();
    let mut sensors = SensorSuite::new(cfg.sensors.noise.clone(), cfg.sensors.schedule.clone(), 9).unwrap();
    let mut clean = ResilientEstimator::new(&truth, params, &cfg.estimation, &cfg.sensors.noise);
    let mut garbage = clean.clone();
    for k in 0..500 {
        let frame = sensors.sample(k, &truth, &wrench, &speeds, params);
        let mut bad = frame.clone();
        bad.accel = Vector3::new(300.0, -300.0, 300.0);
        bad.gyro = Vector3::new(70.0, 70.0, -70.0);
        let a = clean.step(&frame).unwrap().clone();
        let b = garbage.step(&bad).unwrap().clone();
        assert_eq!(a.x, b.x);
        assert_eq!(a.p, b.p);
    }
}

#[test]
fn shipped_config_files_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("config");
    let cfg = SimConfig::from_file(dir.join("scenarios/line_switch.toml")).unwrap();
    assert_eq!(cfg.mission.kind, MissionKind::LineTrack);
    assert_eq!(cfg.attack.kind, AttackKind::ArSwitch);
    let grid = GridSpec::from_file(dir.join("grids/hover_recovery.toml")).unwrap();
    assert_eq!(grid.cells().len(), 12);
    for cell in grid.cells() {
        grid.config(&cell, 1).unwrap();
    }
}
