use serde::{Deserialize, Serialize};

use super::{effective_sample_size, Chain};
use crate::error::{Error, Result};
use crate::numerics::{mean, quantile_sorted, variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    pub ess: f64,
    pub degenerate: bool,
}

impl ParamSummary {
    pub fn ess_per_second(&self, wall_seconds: f64) -> f64 {
        self.ess / wall_seconds
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn interval_length(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub alpha: f64,
    pub params: Vec<ParamSummary>,
}

impl PosteriorSummary {
    pub fn means(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.mean).collect()
    }
}

/// Equal-tailed `[α/2, 1 − α/2]` quantile interval.
pub fn equal_tailed_interval(xs: &[f64], alpha: f64) -> (f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile_sorted(&v, 0.5 * alpha), quantile_sorted(&v, 1.0 - 0.5 * alpha))
}

/// Summaries of row-major draws, one column per name.
pub fn summarize_draws(draws: &[Vec<f64>], names: &[String], alpha: f64) -> Result<PosteriorSummary> {
    if draws.is_empty() {
        return Err(Error::invalid("cannot summarize an empty chain"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let params = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let col: Vec<f64> = draws.iter().map(|r| r[k]).collect();
            let (lower, upper) = equal_tailed_interval(&col, alpha);
            let (ess, degenerate) = match effective_sample_size(&col) {
                Ok(e) => (e.value, e.degenerate),
                Err(_) => (f64::NAN, false),
            };
            ParamSummary {
                name: name.clone(),
                mean: mean(&col),
                sd: if col.len() > 1 { variance(&col).sqrt() } else { 0.0 },
                lower,
                upper,
                ess,
                degenerate,
            }
        })
        .collect();
    Ok(PosteriorSummary { alpha, params })
}

/// Back-transform a chain row by row and summarise on that scale.
pub fn summarize<F: Fn(&[f64]) -> Vec<f64>>(
    chain: &Chain,
    transform: F,
    names: &[String],
    alpha: f64,
) -> Result<PosteriorSummary> {
    summarize_draws(&chain.map_draws(transform), names, alpha)
}
