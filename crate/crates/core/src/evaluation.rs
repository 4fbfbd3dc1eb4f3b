//! Overlap-based success metrics: per-frame IoU, success rate over a
//! threshold grid, and the area under the success curve.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::io::{parse_bbox_file, result_path, DatasetManifest, Modality};
use crate::tracklet::Tracklet;

/// Number of points in the default threshold grid.
pub const DEFAULT_GRID_LEN: usize = 21;

/// `{0, 0.05, ..., 1.0}`
pub fn default_thresholds() -> Vec<f64> {
    (0..DEFAULT_GRID_LEN).map(|i| i as f64 / 20.0).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapSeries {
    pub values: Vec<f64>,
}

impl OverlapSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("overlap {v} outside [0, 1]")));
        }
        Ok(OverlapSeries { values })
    }

    pub fn frame_count(&self) -> usize {
        self.values.len()
    }
}

/// Per-frame IoU; frames without a ground-truth box or without a prediction score 0.
pub fn overlap_series(pred: &Tracklet, gt: &Tracklet) -> Result<OverlapSeries> {
    if pred.len() != gt.len() {
        return Err(Error::domain(format!(
            "sequence {}: prediction has {} frames, ground truth has {}",
            gt.sequence_id,
            pred.len(),
            gt.len()
        )));
    }
    let values = pred
        .boxes
        .iter()
        .zip(&gt.boxes)
        .map(|pair| match pair {
            (Some(p), Some(g)) => iou(p, g),
            _ => Ok(0.0),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlapSeries { values })
}

/// Fraction of frames whose overlap strictly exceeds `theta`.
pub fn success_rate(series: &OverlapSeries, theta: f64) -> Result<f64> {
    if series.values.is_empty() {
        return Err(Error::domain("success rate of an empty overlap series"));
    }
    let hits = series.values.iter().filter(|&&r| r > theta).count();
    Ok(hits as f64 / series.values.len() as f64)
}

/// Mean success rate over the threshold grid.
pub fn auc(series: &OverlapSeries, thresholds: &[f64]) -> Result<f64> {
    if thresholds.is_empty() {
        return Err(Error::domain("empty threshold grid"));
    }
    let mut total = 0.0;
    for &theta in thresholds {
        total += success_rate(series, theta)?;
    }
    Ok(total / thresholds.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuccessCurve {
    pub thresholds: Vec<f64>,
    pub rates: Vec<f64>,
}

impl SuccessCurve {
    pub fn from_series(series: &OverlapSeries, thresholds: &[f64]) -> Result<Self> {
        check_grid(thresholds)?;
        let rates = thresholds
            .iter()
            .map(|&t| success_rate(series, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(SuccessCurve {
            thresholds: thresholds.to_vec(),
            rates,
        })
    }

    /// Point-wise mean of several curves sharing one grid.
    pub fn mean(curves: &[SuccessCurve]) -> Result<Self> {
        let first = curves.first().ok_or_else(|| Error::domain("no curves to average"))?;
        let mut rates = vec![0.0; first.rates.len()];
        for c in curves {
            if c.thresholds != first.thresholds {
                return Err(Error::domain("curves use different threshold grids"));
            }
            for (acc, r) in rates.iter_mut().zip(&c.rates) {
                *acc += r;
            }
        }
        rates.iter_mut().for_each(|r| *r /= curves.len() as f64);
        Ok(SuccessCurve {
            thresholds: first.thresholds.clone(),
            rates,
        })
    }

    pub fn auc(&self) -> f64 {
        self.rates.iter().sum::<f64>() / self.rates.len() as f64
    }

    /// CSV with header `theta,sr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,sr\n");
        for (t, r) in self.thresholds.iter().zip(&self.rates) {
            let _ = writeln!(out, "{t},{r}");
        }
        out
    }
}

fn check_grid(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::domain("empty threshold grid"));
    }
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("thresholds must be strictly increasing within [0, 1]"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceFailure {
    pub sequence_id: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub modality: Option<Modality>,
    /// Sorted by sequence id.
    pub per_sequence: Vec<(String, f64)>,
    pub failures: Vec<SequenceFailure>,
    /// Mean over the sequences that evaluated successfully.
    pub mean_auc: Option<f64>,
}

impl EvalReport {
    pub fn from_outcomes(modality: Option<Modality>, outcomes: Vec<(String, Result<f64>)>) -> Self {
        let mut per_sequence = Vec::new();
        let mut failures = Vec::new();
        for (id, outcome) in outcomes {
            match outcome {
                Ok(a) => per_sequence.push((id, a)),
                Err(e) => failures.push(SequenceFailure {
                    sequence_id: id,
                    message: e.to_string(),
                }),
            }
        }
        per_sequence.sort_by(|a, b| a.0.cmp(&b.0));
        failures.sort_by(|a, b| a.sequence_id.cmp(&b.sequence_id));
        let mean_auc =
            (!per_sequence.is_empty()).then(|| per_sequence.iter().map(|(_, a)| a).sum::<f64>() / per_sequence.len() as f64);
        EvalReport {
            modality,
            per_sequence,
            failures,
            mean_auc,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// One `<id>\t<auc %>` line per sequence, failed sequences as
    /// `<id>\terror: <message>`, then `MEAN\t<auc %>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut rows: Vec<(&str, String)> = self
            .per_sequence
            .iter()
            .map(|(id, a)| (id.as_str(), format_percent(*a)))
            .chain(self.failures.iter().map(|f| (f.sequence_id.as_str(), format!("error: {}", f.message))))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        for (id, value) in rows {
            let _ = writeln!(out, "{id}\t{value}");
        }
        let mean = self.mean_auc.map(format_percent).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(out, "MEAN\t{mean}");
        out
    }

    /// Flat `key=value` lines with full-precision AUCs in [0, 1].
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        if let Some(m) = self.modality {
            let _ = writeln!(out, "modality={m}");
        }
        let _ = writeln!(out, "sequences={}", self.per_sequence.len() + self.failures.len());
        let _ = writeln!(out, "failed={}", self.failures.len());
        for (id, a) in &self.per_sequence {
            let _ = writeln!(out, "auc.{id}={a}");
        }
        for f in &self.failures {
            let _ = writeln!(out, "error.{}={}", f.sequence_id, f.message.replace('\n', " "));
        }
        match self.mean_auc {
            Some(m) => {
                let _ = writeln!(out, "mean_auc={m}");
            }
            None => out.push_str("mean_auc=\n"),
        }
        out
    }
}

/// AUC as a percentage with one decimal.
pub fn format_percent(auc: f64) -> String {
    format!("{:.1}", auc * 100.0)
}

/// Modality shared by every sequence in the manifest.
pub fn manifest_modality(manifest: &DatasetManifest) -> Result<Option<Modality>> {
    let mut modality = None;
    for s in &manifest.sequences {
        match modality {
            None => modality = Some(s.modality),
            Some(m) if m != s.modality => {
                return Err(Error::domain(format!(
                    "manifest {} mixes {m} and {} sequences; use one manifest per modality",
                    manifest.name, s.modality
                )))
            }
            _ => {}
        }
    }
    Ok(modality)
}

/// Loads the prediction and ground truth for one sequence and checks both lengths.
pub fn load_sequence_pair(manifest_seq: &crate::io::SequenceManifest, results_dir: &Path) -> Result<(Tracklet, Tracklet)> {
    let gt = parse_bbox_file(&manifest_seq.groundtruth_path)?;
    let pred = parse_bbox_file(&result_path(results_dir, &manifest_seq.sequence_id))?;
    for (what, t) in [("ground truth", &gt), ("result", &pred)] {
        if t.len() != manifest_seq.frame_count {
            return Err(Error::domain(format!(
                "sequence {}: {what} has {} frames, manifest says {}",
                manifest_seq.sequence_id,
                t.len(),
                manifest_seq.frame_count
            )));
        }
    }
    Ok((pred, gt))
}

/// Evaluates `<results_dir>/<sequence_id>.txt` against each sequence's ground
/// truth. Per-sequence failures are collected in the report rather than aborting.
pub fn evaluate_dataset(manifest: &DatasetManifest, results_dir: &Path) -> Result<EvalReport> {
    evaluate_dataset_with(manifest, results_dir, &default_thresholds())
}

pub fn evaluate_dataset_with(manifest: &DatasetManifest, results_dir: &Path, thresholds: &[f64]) -> Result<EvalReport> {
    if manifest.sequences.is_empty() {
        return Err(Error::domain(format!("manifest {} has no sequences", manifest.name)));
    }
    check_grid(thresholds)?;
    let modality = manifest_modality(manifest)?;
    let outcomes = manifest
        .sequences
        .par_iter()
        .map(|seq| {
            let auc = load_sequence_pair(seq, results_dir)
                .and_then(|(pred, gt)| overlap_series(&pred, &gt))
                .and_then(|series| auc(&series, thresholds));
            (seq.sequence_id.clone(), auc)
        })
        .collect();
    Ok(EvalReport::from_outcomes(modality, outcomes))
}
