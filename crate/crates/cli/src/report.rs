//! Aggregation of replicate fits into study tables.

use std::collections::BTreeMap;

use palm_core::numerics::quantile;
use serde::{Deserialize, Serialize};

/// One parameter of one fit on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub label: String,
    pub radius: Option<f64>,
    pub adjustment: String,
    pub parameter: String,
    pub truth: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub covered: bool,
    /// Learning rate (lr) or per-parameter scale factor (gpc); 1 otherwise.
    pub eta: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub replicate: usize,
    pub label: String,
    pub adjustment: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub replicate: usize,
    pub label: String,
    pub adjustment: String,
    pub seconds: f64,
    pub parameter: String,
    pub ess_per_second: f64,
}

/// One cell of the study report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub radius: Option<f64>,
    pub adjustment: String,
    pub parameter: String,
    pub truth: f64,
    pub replicates: usize,
    pub failed: usize,
    /// Every replicate produced an estimate.
    pub complete: bool,
    pub bias: f64,
    pub rmse: f64,
    pub coverage: f64,
    pub median_ci_length: f64,
    pub mean_eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReportRow {
    pub label: String,
    pub radius: Option<f64>,
    pub adjustment: String,
    pub parameter: String,
    pub mean_ess_per_second: f64,
}

/// Expected report cell: label, radius, adjustment and (parameter, truth)
/// pairs.
pub type CellSpec = (String, Option<f64>, String, Vec<(String, f64)>);

/// Cell key in first-appearance order of (fit, adjustment, parameter).
type Key = (usize, String, String, String);

/// Folds replicate rows into report rows. `order` lists every expected
/// (label, radius, adjustment, parameters) cell so cells with no successful
/// replicate still appear.
pub fn aggregate(
    rows: &[ReplicateRow],
    failures: &[FailureRow],
    order: &[CellSpec],
) -> Vec<ReportRow> {
    let mut out = Vec::new();
    let mut by_cell: BTreeMap<Key, Vec<&ReplicateRow>> = BTreeMap::new();
    let position: BTreeMap<(&str, &str), usize> = order
        .iter()
        .enumerate()
        .map(|(i, (l, _, a, _))| ((l.as_str(), a.as_str()), i))
        .collect();
    for r in rows {
        let i = position[&(r.label.as_str(), r.adjustment.as_str())];
        by_cell
            .entry((i, r.label.clone(), r.adjustment.clone(), r.parameter.clone()))
            .or_default()
            .push(r);
    }
    for (i, (label, radius, adjustment, params)) in order.iter().enumerate() {
        let failed = failures
            .iter()
            .filter(|f| &f.label == label && &f.adjustment == adjustment)
            .count();
        for (parameter, truth) in params {
            let cell = by_cell
                .get(&(i, label.clone(), adjustment.clone(), parameter.clone()))
                .cloned()
                .unwrap_or_default();
            let n = cell.len();
            let nf = n as f64;
            let (bias, rmse, coverage, median_len, mean_eta) = if n == 0 {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            } else {
                let bias = cell.iter().map(|r| r.mean - truth).sum::<f64>() / nf;
                let mse = cell.iter().map(|r| (r.mean - truth).powi(2)).sum::<f64>() / nf;
                let coverage = cell.iter().filter(|r| r.covered).count() as f64 / nf;
                let lengths: Vec<f64> = cell.iter().map(|r| r.upper - r.lower).collect();
                let eta = cell.iter().map(|r| r.eta).sum::<f64>() / nf;
                (bias, mse.sqrt(), coverage, quantile(&lengths, 0.5), eta)
            };
            out.push(ReportRow {
                label: label.clone(),
                radius: *radius,
                adjustment: adjustment.clone(),
                parameter: parameter.clone(),
                truth: *truth,
                replicates: n,
                failed,
                complete: failed == 0,
                bias,
                rmse,
                coverage,
                median_ci_length: median_len,
                mean_eta,
            });
        }
    }
    out
}

pub fn aggregate_timing(timing: &[TimingRow], report: &[ReportRow]) -> Vec<TimingReportRow> {
    report
        .iter()
        .map(|c| {
            let v: Vec<f64> = timing
                .iter()
                .filter(|t| t.label == c.label && t.adjustment == c.adjustment && t.parameter == c.parameter)
                .map(|t| t.ess_per_second)
                .collect();
            TimingReportRow {
                label: c.label.clone(),
                radius: c.radius,
                adjustment: c.adjustment.clone(),
                parameter: c.parameter.clone(),
                mean_ess_per_second: if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 },
            }
        })
        .collect()
}
