//! The hover survival grid: every benchmark attack against each recovery
//! method over several seeds, with per-cell means written as CSV.
//!
//! cargo run --release --example sweep_grid -- [out dir] [seeds]

use mars_sim::harness::sweep::{run_grid, write_grid, GridSpec};

fn main() -> mars_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "sweep_out".into());
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed_list: Vec<String> = (1..=seeds).map(|s| s.to_string()).collect();
    let grid = GridSpec::from_toml_str(&format!(
        r#"
seeds = [{}]

[base.scenario]
duration = 30.0

[base.attack]
start_time = 10.0
stop_time = 30.0

[[axis]]
key = "attack.kind"
values = ["ar_dos", "ar_side_swing", "ar_switch", "emi_saturation"]

[[axis]]
key = "scenario.recovery"
values = ["mars", "lpf", "none"]
"#,
        seed_list.join(", ")
    ))?;
    let rows = run_grid(&grid);
    write_grid(&grid, &rows, &out)?;

    println!("{:<15} {:<6} {:>9} {:>14}", "attack", "method", "survived", "mean survival");
    for (cell, values) in grid.cells().iter().enumerate() {
        let ok: Vec<_> = rows.iter().filter(|r| r.cell == cell).filter_map(|r| r.outcome.as_ref().ok()).collect();
        let survived = ok.iter().filter(|m| m.survived).count();
        let mean = ok.iter().map(|m| m.survival_time).sum::<f64>() / ok.len().max(1) as f64;
        println!(
            "{:<15} {:<6} {:>6}/{:<2} {:>12.2} s",
            values[0].as_str().unwrap_or("?"),
            values[1].as_str().unwrap_or("?"),
            survived,
            ok.len(),
            mean
        );
    }
    println!("wrote {out}/runs.csv and {out}/summary.csv");
    Ok(())
}
