//! Scoring detections against ground truth.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::detector::{self, DetectConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionCounts {
    /// Tallies predicted outlier indices against per-object truth.
    pub fn from_prediction(pred: &[usize], truth: &[bool]) -> Result<Self> {
        let mut flagged = vec![false; truth.len()];
        for &i in pred {
            if i >= truth.len() {
                return Err(Error::Evaluation(format!(
                    "predicted index {i} out of range for {} objects",
                    truth.len()
                )));
            }
            flagged[i] = true;
        }
        let mut c = ConfusionCounts::default();
        for (&f, &t) in flagged.iter().zip(truth) {
            match (t, f) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
            }
        }
        Ok(c)
    }

    /// `(TP/(TP+FN) + TN/(FP+TN)) / 2`.
    pub fn balanced_accuracy(&self) -> Result<f64> {
        if self.tp + self.fn_ == 0 {
            return Err(Error::Evaluation("ground truth has no outliers".into()));
        }
        if self.tn + self.fp == 0 {
            return Err(Error::Evaluation(
                "ground truth has no normal objects".into(),
            ));
        }
        let recall_out = self.tp as f64 / (self.tp + self.fn_) as f64;
        let recall_in = self.tn as f64 / (self.fp + self.tn) as f64;
        Ok(0.5 * (recall_out + recall_in))
    }
}

pub fn balanced_accuracy(pred: &[usize], truth: &[bool]) -> Result<(f64, ConfusionCounts)> {
    let counts = ConfusionCounts::from_prediction(pred, truth)?;
    Ok((counts.balanced_accuracy()?, counts))
}

/// Indices of the `ceil(rate * N)` highest scores, ascending. Ties at the cut go to
/// the lower index.
pub fn top_percent(scores: &[f64], rate: f64) -> Result<Vec<usize>> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Parameter(format!(
            "rate must lie in (0, 1), got {rate}"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Validation("scores must be finite".into()));
    }
    let take = (rate * scores.len() as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut picked = order[..take.min(scores.len())].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// One `k` of a sweep: an accuracy (or the error that prevented it) per dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub accuracies: Vec<Result<f64, String>>,
    /// Mean over the datasets that produced an accuracy.
    pub average: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub datasets: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// `(max - min)` over the averages of successful rows.
    pub fn average_range(&self) -> Option<f64> {
        let avgs: Vec<f64> = self.rows.iter().filter_map(|r| r.average).collect();
        let max = avgs.iter().copied().reduce(f64::max)?;
        let min = avgs.iter().copied().reduce(f64::min)?;
        Some(max - min)
    }

    /// Datasets as rows, `k` values as columns, with a closing `average` row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let ks: Vec<String> = self.rows.iter().map(|r| format!("k={}", r.k)).collect();
        writeln!(out, "dataset,{}", ks.join(","))?;
        for (d, name) in self.datasets.iter().enumerate() {
            let cells: Vec<String> = self
                .rows
                .iter()
                .map(|r| match &r.accuracies[d] {
                    Ok(a) => format!("{a}"),
                    Err(_) => "error".to_owned(),
                })
                .collect();
            writeln!(out, "{name},{}", cells.join(","))?;
        }
        let avgs: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                r.average
                    .map_or_else(|| "error".to_owned(), |a| format!("{a}"))
            })
            .collect();
        writeln!(out, "average,{}", avgs.join(","))
    }
}

/// Detects and scores once per `k` on every dataset. Failures are recorded in the
/// affected cell and do not stop the sweep.
pub fn parameter_sweep(
    datasets: &[(String, LabeledDataset)],
    k_values: &[usize],
    base: &DetectConfig,
) -> SweepReport {
    let rows = k_values
        .par_iter()
        .map(|&k| {
            let mut config = *base;
            config.transform.k = k;
            let accuracies: Vec<Result<f64, String>> = datasets
                .iter()
                .map(|(_, ds)| score(ds, &config).map_err(|e| e.to_string()))
                .collect();
            let ok: Vec<f64> = accuracies
                .iter()
                .filter_map(|a| a.as_ref().ok())
                .copied()
                .collect();
            let average = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
            SweepRow {
                k,
                accuracies,
                average,
            }
        })
        .collect();
    SweepReport {
        datasets: datasets.iter().map(|(n, _)| n.clone()).collect(),
        rows,
    }
}

/// Runs detection with `config` and returns its balanced accuracy.
pub fn score(data: &LabeledDataset, config: &DetectConfig) -> Result<f64> {
    let det = detector::detect(&data.data, config)?;
    balanced_accuracy(&det.result.outliers, &data.labels).map(|(a, _)| a)
}
