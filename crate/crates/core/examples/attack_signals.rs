//! Injected IMU corruption for every attack profile on a hovering vehicle's
//! readings: peak values and how much of each signal a 30 Hz low-pass lets
//! through. Optionally writes the raw samples as CSV.
//!
//! cargo run --release --example attack_signals -- [out.csv]

use mars_sim::attacks::{AttackInjector, AttackKind, AttackProfile};
use mars_sim::harness::ImuLowPass;
use mars_sim::sensors::{Freshness, SensorFrame};
use mars_sim::SimConfig;
use nalgebra::Vector3;

const KINDS: [AttackKind; 6] = [
    AttackKind::ArDos,
    AttackKind::ArSideSwing,
    AttackKind::ArSwitch,
    AttackKind::EmiSaturation,
    AttackKind::StepAmplitude,
    AttackKind::RampAmplitude,
];

fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

fn main() -> mars_sim::Result<()> {
    let out = std::env::args().nth(1);
    let cfg = SimConfig::default();
    let g = cfg.vehicle.gravity;
    let fs = cfg.sensors.schedule.imu_rate as f64;
    let dt = 1.0 / fs;
    let n = (20.0 * fs) as usize;
    let mut writer = out.map(csv::Writer::from_path).transpose()?;
    if let Some(w) = writer.as_mut() {
        w.write_record(["kind", "t", "accel_x", "gyro_x"])?;
    }

    println!("{:<15} {:>10} {:>10} {:>12} {:>12}", "attack", "accel pk", "gyro pk", "accel lpf", "gyro lpf");
    for kind in KINDS {
        let mut inj = AttackInjector::new(AttackProfile::of_kind(kind, 0.0, 20.0), 1)?;
        let mut lpf = ImuLowPass::new(30.0, fs)?;
        let (mut a, mut gy, mut fa, mut fg) = (vec![], vec![], vec![], vec![]);
        for k in 0..n {
            let t = k as f64 * dt;
            let mut clean = SensorFrame::empty(t);
            clean.accel = Vector3::new(0.0, 0.0, -g);
            clean.fresh = Freshness { imu: true, tach: true, gps: false, compass: false };
            let hit = inj.inject(&clean, t);
            let filt = lpf.apply(&hit);
            a.push(hit.accel.x);
            gy.push(hit.gyro.x);
            fa.push(filt.accel.x);
            fg.push(filt.gyro.x);
            if let Some(w) = writer.as_mut() {
                w.write_record([kind.name().to_string(), t.to_string(), hit.accel.x.to_string(), hit.gyro.x.to_string()])?;
            }
        }
        let pk = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        println!("{:<15} {:>10.1} {:>10.2} {:>12.2} {:>12.3}", kind.name(), pk(&a), pk(&gy), rms(&fa), rms(&fg));
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    println!("(lpf columns: RMS after a 30 Hz low-pass)");
    Ok(())
}
