//! Offline evaluation of detectors on labeled residual streams.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    BenchmarkConfig, Chi2Detector, DetectorConfig, InnovationCusumDetector, MarsDetector,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// CUSUM on the resilient-estimate IMU residual.
    Mars,
    /// CUSUM on the standard estimator's Mahalanobis distance.
    Cusum,
    /// χ² gate on the standard estimator's Mahalanobis distance.
    Chi2,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Mars, DetectorKind::Cusum, DetectorKind::Chi2];

    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Mars => "mars",
            DetectorKind::Cusum => "cusum",
            DetectorKind::Chi2 => "chi2",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown detector '{s}' (mars, cusum, chi2)")))
    }
}

/// One row of a residual stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// Resilient IMU residual, absent on stale-IMU ticks.
    pub r: Option<f64>,
    /// True inside the attack window.
    pub label: bool,
    /// Standard-estimator Mahalanobis distance, present on innovation ticks.
    pub d: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<Sample>,
}

#[derive(Deserialize)]
struct CsvRow {
    t: f64,
    r: Option<f64>,
    label: Option<u8>,
    #[serde(default)]
    d: Option<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self> {
        let ds = Self { name: name.into(), samples };
        ds.attack_start()?;
        Ok(ds)
    }

    /// Time of the first attack-labeled sample. Streams without both clean and
    /// attacked samples are rejected.
    pub fn attack_start(&self) -> Result<f64> {
        let start = self.samples.iter().find(|s| s.label).map(|s| s.t);
        let has_clean = self.samples.iter().any(|s| !s.label);
        match (start, has_clean) {
            (Some(t), true) => Ok(t),
            _ => Err(Error::InvalidInput(format!(
                "dataset '{}' needs both clean and attack-labeled samples",
                self.name
            ))),
        }
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if !headers.iter().any(|h| h == "label") {
            return Err(Error::InvalidInput(format!("{}: missing 'label' column", path.display())));
        }
        let mut samples = Vec::new();
        for row in rdr.deserialize::<CsvRow>() {
            let row = row?;
            let label = row.label.ok_or_else(|| {
                Error::InvalidInput(format!("{}: unlabeled row at t = {}", path.display(), row.t))
            })?;
            samples.push(Sample { t: row.t, r: row.r, label: label != 0, d: row.d });
        }
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::new(name, samples)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "r", "label", "d"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.samples {
            w.write_record([s.t.to_string(), opt(s.r), u8::from(s.label).to_string(), opt(s.d)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// All `*.csv` datasets in `dir`, in file-name order.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Self>> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        paths.sort();
        paths.iter().map(Self::read_csv).collect()
    }
}

/// Raw window decision for every sample of `ds` with the detector's
/// threshold replaced by `threshold`.
pub fn alarm_stream(
    ds: &Dataset,
    kind: DetectorKind,
    threshold: f64,
    mars: &DetectorConfig,
    bench: &BenchmarkConfig,
) -> Result<Vec<bool>> {
    let out = match kind {
        DetectorKind::Mars => {
            let mut det = MarsDetector::new(DetectorConfig { threshold, ..mars.clone() })?;
            ds.samples.iter().map(|s| det.step(s.r, s.t).raw).collect()
        }
        DetectorKind::Cusum => {
            let mut det = InnovationCusumDetector::new(bench, 0.0).with_threshold(threshold);
            ds.samples.iter().map(|s| det.step(s.d, s.t).raw).collect()
        }
        DetectorKind::Chi2 => {
            let mut det = Chi2Detector::new(bench, 0.0).with_threshold(threshold);
            ds.samples.iter().map(|s| det.step(s.d, s.t).raw).collect()
        }
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    /// Mean delay from attack start to the first alarm over detected datasets.
    pub mean_response: Option<f64>,
    /// Datasets with at least one alarm after the attack start.
    pub detected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RocReport {
    pub detector: DetectorKind,
    pub datasets: usize,
    /// Sorted by increasing threshold.
    pub points: Vec<RocPoint>,
}

impl RocReport {
    /// Area under the (FPR, TPR) curve closed with (0, 0) and (1, 1).
    pub fn auc(&self) -> f64 {
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        pts.push((0.0, 0.0));
        pts.push((1.0, 1.0));
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5).sum()
    }

    /// The highest-TPR point whose FPR does not exceed `max_fpr`.
    pub fn operating_point(&self, max_fpr: f64) -> Option<&RocPoint> {
        self.points
            .iter()
            .filter(|p| p.fpr <= max_fpr)
            .max_by(|a, b| a.tpr.partial_cmp(&b.tpr).unwrap().then(b.threshold.partial_cmp(&a.threshold).unwrap()))
    }

    pub fn tpr_at(&self, max_fpr: f64) -> f64 {
        self.operating_point(max_fpr).map_or(0.0, |p| p.tpr)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["threshold", "fpr", "tpr", "mean_response", "detected"])?;
        for p in &self.points {
            w.write_record([
                p.threshold.to_string(),
                p.fpr.to_string(),
                p.tpr.to_string(),
                p.mean_response.map(|v| v.to_string()).unwrap_or_default(),
                p.detected.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` log-spaced thresholds in `[lo, hi]`.
pub fn log_thresholds(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Default sweep for each detector family.
pub fn default_thresholds(kind: DetectorKind) -> Vec<f64> {
    match kind {
        DetectorKind::Mars | DetectorKind::Cusum => log_thresholds(0.05, 1e5, 121),
        DetectorKind::Chi2 => log_thresholds(0.5, 1e7, 121),
    }
}

/// Sweep `thresholds` over all datasets.
pub fn roc_eval(
    datasets: &[Dataset],
    kind: DetectorKind,
    thresholds: &[f64],
    mars: &DetectorConfig,
    bench: &BenchmarkConfig,
) -> Result<RocReport> {
    if datasets.is_empty() {
        return Err(Error::InvalidInput("no datasets".into()));
    }
    let starts = datasets.iter().map(Dataset::attack_start).collect::<Result<Vec<_>>>()?;
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let points = thresholds
        .par_iter()
        .map(|&th| {
            let (mut tp, mut pos, mut fp, mut neg) = (0usize, 0usize, 0usize, 0usize);
            let mut delays = Vec::new();
            for (ds, &start) in datasets.iter().zip(&starts) {
                let alarms = alarm_stream(ds, kind, th, mars, bench)?;
                for (s, &a) in ds.samples.iter().zip(&alarms) {
                    if s.label {
                        pos += 1;
                        tp += usize::from(a);
                    } else {
                        neg += 1;
                        fp += usize::from(a);
                    }
                }
                if let Some(s) = ds.samples.iter().zip(&alarms).find(|(s, a)| **a && s.t >= start) {
                    delays.push(s.0.t - start);
                }
            }
            let mean_response = (!delays.is_empty()).then(|| delays.iter().sum::<f64>() / delays.len() as f64);
            Ok(RocPoint {
                threshold: th,
                fpr: fp as f64 / neg as f64,
                tpr: tp as f64 / pos as f64,
                mean_response,
                detected: delays.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RocReport { detector: kind, datasets: datasets.len(), points })
}
