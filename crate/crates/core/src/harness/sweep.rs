//! Batch grids of scenarios over dotted config keys.
//!
//! ```toml
//! seeds = [1, 2, 3]
//!
//! [base]
//! scenario.duration = 30.0
//!
//! [[axis]]
//! key = "attack.kind"
//! values = ["ar_dos", "ar_switch"]
//!
//! [[axis]]
//! key = "scenario.recovery"
//! values = ["mars", "lpf"]
//! ```

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::RunMetrics;
use super::run::run_scenario;
use crate::config::{default_value, merge, SimConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub base: toml::Table,
    #[serde(default, rename = "axis")]
    pub axes: Vec<Axis>,
    pub seeds: Vec<u64>,
}

/// One scenario of the grid: its cell index, axis values and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub values: Vec<toml::Value>,
    pub seed: u64,
    pub outcome: std::result::Result<RunMetrics, String>,
}

impl GridSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let g: Self = toml::from_str(text)?;
        if g.seeds.is_empty() || g.axes.iter().any(|a| a.values.is_empty()) {
            return Err(Error::Config("grid needs seeds and non-empty axes".into()));
        }
        Ok(g)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Axis value combinations in row-major order, last axis fastest.
    pub fn cells(&self) -> Vec<Vec<toml::Value>> {
        self.axes.iter().fold(vec![vec![]], |acc, axis| {
            acc.iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push(v.clone());
                        c
                    })
                })
                .collect()
        })
    }

    /// Resolve the configuration of one cell and seed.
    pub fn config(&self, values: &[toml::Value], seed: u64) -> Result<SimConfig> {
        let mut tree = default_value();
        merge(&mut tree, toml::Value::Table(self.base.clone()));
        for (axis, v) in self.axes.iter().zip(values) {
            set_dotted(&mut tree, &axis.key, v.clone())?;
        }
        set_dotted(&mut tree, "scenario.seed", toml::Value::Integer(seed as i64))?;
        let cfg: SimConfig = tree.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Assign `value` at a dotted path of existing or new tables.
pub fn set_dotted(tree: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}` crosses a non-table value")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(Error::Config("empty key".into()))
}

/// Run every cell and seed in parallel. Failures are kept in their row.
pub fn run_grid(grid: &GridSpec) -> Vec<SweepRow> {
    let jobs: Vec<(usize, Vec<toml::Value>, u64)> = grid
        .cells()
        .into_iter()
        .enumerate()
        .flat_map(|(i, c)| grid.seeds.iter().map(move |&s| (i, c.clone(), s)))
        .collect();
    jobs.into_par_iter()
        .map(|(cell, values, seed)| {
            let outcome = grid
                .config(&values, seed)
                .and_then(|c| run_scenario(&c))
                .map(|r| r.metrics)
                .map_err(|e| e.to_string());
            SweepRow { cell, values, seed, outcome }
        })
        .collect()
}

const METRIC_COLUMNS: [&str; 11] = [
    "survived",
    "survival_time",
    "rotor_rms_clean",
    "rotor_rms_attack",
    "lateral_rmse",
    "completion_time",
    "detector_response_time",
    "max_tilt",
    "tilt_std",
    "max_position_deviation",
    "brake_count",
];

fn metric_values(m: &RunMetrics) -> [Option<f64>; 11] {
    [
        Some(if m.survived { 1.0 } else { 0.0 }),
        Some(m.survival_time),
        m.rotor_rms_clean,
        m.rotor_rms_attack,
        Some(m.lateral_rmse),
        m.completion_time,
        m.detector_response_time,
        Some(m.max_tilt),
        Some(m.tilt_std),
        Some(m.max_position_deviation),
        Some(m.brake_count as f64),
    ]
}

fn show(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-seed rows to `runs.csv` and per-cell means to `summary.csv`.
pub fn write_grid(grid: &GridSpec, rows: &[SweepRow], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let keys: Vec<&str> = grid.axes.iter().map(|a| a.key.as_str()).collect();

    let mut w = csv::Writer::from_path(dir.join("runs.csv"))?;
    let mut header = vec!["cell"];
    header.extend(&keys);
    header.push("seed");
    header.extend(METRIC_COLUMNS);
    header.push("error");
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.cell.to_string()];
        rec.extend(r.values.iter().map(show));
        rec.push(r.seed.to_string());
        match &r.outcome {
            Ok(m) => {
                rec.extend(metric_values(m).iter().map(|v| fmt(*v)));
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(std::iter::repeat(String::new()).take(METRIC_COLUMNS.len()));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    let mut header = vec!["cell"];
    header.extend(&keys);
    header.push("runs");
    header.push("errors");
    header.extend(METRIC_COLUMNS);
    w.write_record(&header)?;
    for (cell, values) in grid.cells().iter().enumerate() {
        let in_cell: Vec<&SweepRow> = rows.iter().filter(|r| r.cell == cell).collect();
        let ok: Vec<[Option<f64>; 11]> = in_cell.iter().filter_map(|r| r.outcome.as_ref().ok()).map(metric_values).collect();
        let mut rec = vec![cell.to_string()];
        rec.extend(values.iter().map(show));
        rec.push(in_cell.len().to_string());
        rec.push((in_cell.len() - ok.len()).to_string());
        for j in 0..METRIC_COLUMNS.len() {
            let xs: Vec<f64> = ok.iter().filter_map(|m| m[j]).collect();
            rec.push(if xs.is_empty() { String::new() } else { (xs.iter().sum::<f64>() / xs.len() as f64).to_string() });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: &str = r#"
seeds = [1, 2]
[base.scenario]
duration = 0.2
[[axis]]
key = "attack.kind"
values = ["none", "ar_dos"]
[[axis]]
key = "scenario.recovery"
values = ["mars", "lpf", "none"]
"#;

    #[test]
    fn cells_are_the_cartesian_product() {
        let g = GridSpec::from_toml_str(GRID).unwrap();
        let cells = g.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!(show(&cells[1][1]), "lpf");
        assert_eq!(show(&cells[3][0]), "ar_dos");
    }

    #[test]
    fn config_applies_axes_and_seed() {
        let g = GridSpec::from_toml_str(GRID).unwrap();
        let c = g.config(&g.cells()[4], 9).unwrap();
        assert_eq!(c.attack.kind, crate::attacks::AttackKind::ArDos);
        assert_eq!(c.scenario.recovery, super::super::RecoveryMethod::Lpf);
        assert_eq!(c.scenario.seed, 9);
        assert_eq!(c.scenario.duration, 0.2);
    }

    #[test]
    fn bad_values_are_recorded_not_fatal() {
        let g = GridSpec::from_toml_str(
            "seeds = [1]\n[base.scenario]\nduration = 0.1\n[[axis]]\nkey = \"vehicle.mass\"\nvalues = [-1.0, 1.5]\n",
        )
        .unwrap();
        let mut rows = run_grid(&g);
        rows.sort_by_key(|r| r.cell);
        assert!(rows[0].outcome.is_err());
        assert!(rows[1].outcome.is_ok());
        let dir = tempfile::tempdir().unwrap();
        write_grid(&g, &rows, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn rows_come_back_in_job_order() {
        let g = GridSpec::from_toml_str(GRID).unwrap();
        let rows = run_grid(&g);
        assert_eq!(rows.len(), 12);
        assert!(rows.windows(2).all(|w| (w[0].cell, w[0].seed) < (w[1].cell, w[1].seed)));
    }
}
