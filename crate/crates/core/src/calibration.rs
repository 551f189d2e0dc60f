//! Posterior calibration by parametric bootstrap.
//!
//! * Adjustment 1: a scalar learning rate `η = q / tr(Ĥ⁻¹ Ĵ)` from the
//!   posterior covariance `Ĥ⁻¹` and the bootstrap covariance `Ĵ` of the Palm
//!   score, followed by a rerun of the sampler at that η.
//! * Adjustment 2 (generalized posterior calibration): per-parameter scale
//!   factors chosen so that bootstrap credible intervals, widened about
//!   their own means, cover the generating value at the nominal rate; the
//!   original draws are then rescaled about the posterior mean.
//!
//! Bootstrap replicate `k` always uses the stream derived from
//! `(seed, stage, k)`, so results do not depend on thread scheduling.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_palm, PalmFitConfig, PalmProblem};
use crate::geometry::{GridPartition, PointPattern, Window};
use crate::linalg::is_positive_definite;
use crate::models::CovariateField;
use crate::numerics::{column_means, covariance_matrix};
use crate::rng;
use crate::sampler::{equal_tailed_interval, Chain};

const STAGE_SCORE: u64 = 1;
const STAGE_GPC: u64 = 2;
const STAGE_SIM: u64 = 0;
const STAGE_FIT: u64 = 1;

/// Largest fraction of bootstrap replicates that may fail.
pub const MAX_DROP_FRACTION: f64 = 0.2;

/// Where bootstrap patterns are simulated.
#[derive(Debug, Clone)]
pub struct BootstrapDesign {
    pub window: Window,
    /// Grid for LGCP simulation; ignored by the Thomas family.
    pub sim_grid: GridPartition,
    pub covariates: Option<CovariateField>,
}

impl BootstrapDesign {
    pub fn new(window: Window, sim_grid: GridPartition, covariates: Option<CovariateField>) -> Self {
        Self {
            window,
            sim_grid,
            covariates,
        }
    }
}

fn check_bootstraps(b: usize) -> Result<()> {
    if b < 20 {
        return Err(Error::invalid(format!("at least 20 bootstrap replicates required, got {b}")));
    }
    Ok(())
}

fn check_drops(dropped: usize, b: usize, what: &str) -> Result<()> {
    if dropped as f64 > MAX_DROP_FRACTION * b as f64 {
        return Err(Error::Diagnostics(format!("{dropped} of {b} bootstrap {what} failed")));
    }
    Ok(())
}

/// Posterior covariance of the chain's draws.
pub fn estimate_h_inv(chain: &Chain) -> Result<Vec<Vec<f64>>> {
    let q = chain.dim();
    if chain.len() < 10 * q {
        return Err(Error::invalid(format!(
            "{} draws are too few to estimate a {q}x{q} covariance",
            chain.len()
        )));
    }
    let c = covariance_matrix(&chain.draws);
    if !is_positive_definite(&c) {
        return Err(Error::Diagnostics("posterior covariance is singular (degenerate chain)".into()));
    }
    Ok(c)
}

/// Empirical covariance of score vectors.
pub fn estimate_j(scores: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if scores.len() < 2 {
        return Err(Error::invalid("at least two score vectors required"));
    }
    Ok(covariance_matrix(scores))
}

/// Palm scores at `theta_hat` (sampled scale) on `b` patterns simulated at
/// `theta_hat`, and their covariance.
pub fn estimate_j_bootstrap(
    cfg: &PalmFitConfig,
    theta_hat: &[f64],
    design: &BootstrapDesign,
    b: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, usize)> {
    check_bootstraps(b)?;
    let family = cfg.family;
    let sim = family.simulator(theta_hat, &design.window, &design.sim_grid, design.covariates.as_ref())?;
    let results: Vec<Result<Vec<f64>>> = (0..b)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, &[STAGE_SCORE, k as u64]);
            let pattern = sim.sample(&mut r)?;
            let problem = PalmProblem::new(&pattern, design.covariates.as_ref(), cfg)?;
            let s = problem.score(theta_hat)?;
            if s.iter().all(|v| v.is_finite()) {
                Ok(s)
            } else {
                Err(Error::evaluation("non-finite score"))
            }
        })
        .collect();
    let mut scores = Vec::with_capacity(b);
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => scores.push(s),
            Err(e) => warn!("score bootstrap {k} dropped: {e}"),
        }
    }
    let dropped = b - scores.len();
    check_drops(dropped, b, "scores")?;
    Ok((estimate_j(&scores)?, dropped))
}

fn trace_product(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let q = a.len();
    let mut t = 0.0;
    for i in 0..q {
        for k in 0..q {
            t += a[i][k] * b[k][i];
        }
    }
    t
}

/// `η = q / tr(H⁻¹ J)`.
pub fn learning_rate(h_inv: &[Vec<f64>], j: &[Vec<f64>], q: usize) -> Result<f64> {
    if h_inv.len() != q || j.len() != q || h_inv.iter().chain(j).any(|r| r.len() != q) {
        return Err(Error::invalid(format!("learning rate needs two {q}x{q} matrices")));
    }
    let tr = trace_product(h_inv, j);
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::Diagnostics(format!("tr(H^-1 J) = {tr} is not positive")));
    }
    Ok(q as f64 / tr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GodambeEstimate {
    pub h_inv: Vec<Vec<f64>>,
    pub j: Vec<Vec<f64>>,
    pub trace: f64,
    pub eta: f64,
    pub bootstraps: usize,
    pub dropped: usize,
}

/// Adjustment 1 given an η = 1 chain: estimate η and rerun the sampler at
/// η with the chain's own seed.
pub fn adjustment1_from_chain(
    pattern: &PointPattern,
    cfg: &PalmFitConfig,
    design: &BootstrapDesign,
    chain: &Chain,
    b: usize,
    seed: u64,
) -> Result<(Chain, GodambeEstimate)> {
    let problem = PalmProblem::new(pattern, design.covariates.as_ref(), cfg)?;
    let h_inv = estimate_h_inv(chain)?;
    let theta_hat = chain.mean();
    let (j, dropped) = estimate_j_bootstrap(cfg, &theta_hat, design, b, seed)?;
    let q = cfg.family.dim();
    let eta = learning_rate(&h_inv, &j, q)?;
    let mut tempered = cfg.sampler.clone();
    tempered.eta = eta;
    tempered.seed = chain.seed;
    let rerun = problem.sample(&tempered, &cfg.init)?;
    Ok((
        rerun,
        GodambeEstimate {
            trace: trace_product(&h_inv, &j),
            h_inv,
            j,
            eta,
            bootstraps: b,
            dropped,
        },
    ))
}

/// Adjustment 1: fit at η = 1, estimate η, refit at η with the same seed.
pub fn run_adjustment1(
    pattern: &PointPattern,
    cfg: &PalmFitConfig,
    design: &BootstrapDesign,
    b: usize,
    seed: u64,
) -> Result<(Chain, GodambeEstimate)> {
    let mut base = cfg.clone();
    base.sampler.eta = 1.0;
    let chain = fit_palm(pattern, design.covariates.as_ref(), &base)?;
    adjustment1_from_chain(pattern, &base, design, &chain, b, seed)
}

/// `θ̂ + η ⊙ (θ − θ̂)` row by row.
pub fn rescale_draws(draws: &[Vec<f64>], theta_hat: &[f64], eta: &[f64]) -> Result<Vec<Vec<f64>>> {
    if theta_hat.len() != eta.len() || draws.iter().any(|r| r.len() != eta.len()) {
        return Err(Error::invalid("draws, centre and scale factors differ in dimension"));
    }
    if eta.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("scale factors must be positive"));
    }
    Ok(draws
        .iter()
        .map(|r| {
            r.iter()
                .zip(theta_hat)
                .zip(eta)
                .map(|((&x, &c), &e)| if e == 1.0 { x } else { c + e * (x - c) })
                .collect()
        })
        .collect())
}

/// A bootstrap chain's posterior mean and equal-tailed interval for one
/// parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootInterval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BootInterval {
    /// Whether the interval widened by `eta` about its mean contains `value`.
    pub fn covers(&self, value: f64, eta: f64) -> bool {
        let lo = self.mean + eta * (self.lower - self.mean);
        let hi = self.mean + eta * (self.upper - self.mean);
        lo <= value && value <= hi
    }
}

pub fn coverage(intervals: &[BootInterval], value: f64, eta: f64) -> f64 {
    intervals.iter().filter(|iv| iv.covers(value, eta)).count() as f64 / intervals.len() as f64
}

/// Bisection settings for the scale factor search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpcSearch {
    pub eta_max: f64,
    pub tolerance: f64,
}

impl Default for GpcSearch {
    fn default() -> Self {
        Self {
            eta_max: 50.0,
            tolerance: 1e-2,
        }
    }
}

/// Smallest η ≥ 1 (to within the tolerance, from above) for which at
/// least `⌈(1 − α)B⌉` widened intervals cover `value`. 1 when the unwidened
/// intervals already do.
pub fn select_eta(intervals: &[BootInterval], value: f64, alpha: f64, search: &GpcSearch) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::invalid("no bootstrap intervals"));
    }
    let needed = ((1.0 - alpha) * intervals.len() as f64 - 1e-9).ceil() as usize;
    let ok = |eta: f64| intervals.iter().filter(|iv| iv.covers(value, eta)).count() >= needed;
    if ok(1.0) {
        return Ok(1.0);
    }
    if !ok(search.eta_max) {
        return Err(Error::Diagnostics(format!(
            "coverage {:.3} still below {:.3} at eta = {}",
            coverage(intervals, value, search.eta_max),
            1.0 - alpha,
            search.eta_max
        )));
    }
    let (mut lo, mut hi) = (1.0, search.eta_max);
    while hi - lo > search.tolerance {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpcResult {
    pub names: Vec<String>,
    /// Generating value of the bootstrap (posterior mean, target scale).
    pub theta_hat: Vec<f64>,
    pub eta: Vec<f64>,
    pub coverage_before: Vec<f64>,
    pub coverage_after: Vec<f64>,
    pub alpha: f64,
    /// Bootstrap fits that succeeded.
    pub bootstraps: usize,
    pub dropped: usize,
    pub seeds: Vec<u64>,
    /// `intervals[k][i]`: bootstrap k, parameter i.
    pub intervals: Vec<Vec<BootInterval>>,
}

/// Scale factors from stored bootstrap intervals.
pub fn gpc_from_intervals(
    theta_hat: &[f64],
    intervals: &[Vec<BootInterval>],
    alpha: f64,
    search: &GpcSearch,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_alpha(alpha)?;
    let q = theta_hat.len();
    if intervals.iter().any(|r| r.len() != q) {
        return Err(Error::invalid("bootstrap intervals differ in dimension"));
    }
    let mut eta = Vec::with_capacity(q);
    let mut before = Vec::with_capacity(q);
    let mut after = Vec::with_capacity(q);
    for i in 0..q {
        let col: Vec<BootInterval> = intervals.iter().map(|r| r[i]).collect();
        let e = select_eta(&col, theta_hat[i], alpha, search)?;
        before.push(coverage(&col, theta_hat[i], 1.0));
        after.push(coverage(&col, theta_hat[i], e));
        eta.push(e);
    }
    Ok((eta, before, after))
}

/// Output of [`gpc_calibrate`].
#[derive(Debug, Clone)]
pub struct GpcOutcome {
    pub chain: Chain,
    /// Calibrated draws on the family's target scale.
    pub calibrated: Vec<Vec<f64>>,
    pub result: GpcResult,
    /// Target-scale draws of each retained bootstrap fit.
    pub bootstrap_draws: Vec<Vec<Vec<f64>>>,
}

/// Per-parameter posterior means and equal-tailed intervals of one set of
/// draws.
pub fn intervals_from_draws(draws: &[Vec<f64>], alpha: f64) -> Vec<BootInterval> {
    let q = draws.first().map_or(0, |r| r.len());
    let means = column_means(draws);
    (0..q)
        .map(|i| {
            let col: Vec<f64> = draws.iter().map(|row| row[i]).collect();
            let (lower, upper) = equal_tailed_interval(&col, alpha);
            BootInterval {
                mean: means[i],
                lower,
                upper,
            }
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::invalid(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    Ok(())
}

/// Generalized posterior calibration of an existing chain.
pub fn gpc_from_chain(
    cfg: &PalmFitConfig,
    design: &BootstrapDesign,
    chain: Chain,
    b: usize,
    alpha: f64,
    search: &GpcSearch,
    seed: u64,
) -> Result<GpcOutcome> {
    check_bootstraps(b)?;
    check_alpha(alpha)?;
    let family = cfg.family;
    let target: Vec<Vec<f64>> = chain.map_draws(|r| family.to_target(r));
    let theta_hat = column_means(&target);
    let sim = family.simulator(
        &family.from_target(&theta_hat),
        &design.window,
        &design.sim_grid,
        design.covariates.as_ref(),
    )?;

    let seeds: Vec<u64> = (0..b as u64).map(|k| rng::derive_seed(seed, &[STAGE_GPC, k])).collect();
    let fits: Vec<Result<Vec<Vec<f64>>>> = seeds
        .par_iter()
        .map(|&s| {
            let mut r = rng::stream(s, &[STAGE_SIM]);
            let boot = sim.sample(&mut r)?;
            let mut bcfg = cfg.clone();
            bcfg.sampler.seed = rng::derive_seed(s, &[STAGE_FIT]);
            bcfg.sampler.initial = None;
            let bc = fit_palm(&boot, design.covariates.as_ref(), &bcfg)?;
            Ok(bc.map_draws(|row| family.to_target(row)))
        })
        .collect();
    let mut bootstrap_draws = Vec::with_capacity(b);
    for (k, f) in fits.into_iter().enumerate() {
        match f {
            Ok(d) => bootstrap_draws.push(d),
            Err(e) => warn!("calibration bootstrap {k} dropped: {e}"),
        }
    }
    let dropped = b - bootstrap_draws.len();
    check_drops(dropped, b, "fits")?;
    let intervals: Vec<Vec<BootInterval>> = bootstrap_draws.iter().map(|d| intervals_from_draws(d, alpha)).collect();

    let (eta, coverage_before, coverage_after) = gpc_from_intervals(&theta_hat, &intervals, alpha, search)?;
    let calibrated = rescale_draws(&target, &theta_hat, &eta)?;
    Ok(GpcOutcome {
        chain,
        calibrated,
        result: GpcResult {
            names: family.target_names(),
            theta_hat,
            eta,
            coverage_before,
            coverage_after,
            alpha,
            bootstraps: intervals.len(),
            dropped,
            seeds,
            intervals,
        },
        bootstrap_draws,
    })
}

/// Modified generalized posterior calibration: fit, bootstrap at the
/// posterior mean, choose per-parameter scale factors, rescale.
pub fn gpc_calibrate(
    pattern: &PointPattern,
    cfg: &PalmFitConfig,
    design: &BootstrapDesign,
    b: usize,
    alpha: f64,
    search: &GpcSearch,
    seed: u64,
) -> Result<GpcOutcome> {
    check_bootstraps(b)?;
    check_alpha(alpha)?;
    let chain = fit_palm(pattern, design.covariates.as_ref(), cfg)?;
    gpc_from_chain(cfg, design, chain, b, alpha, search, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{mean, variance};
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn iv(mean: f64, half: f64) -> BootInterval {
        BootInterval {
            mean,
            lower: mean - half,
            upper: mean + half,
        }
    }

    fn pseudo_chain(draws: Vec<Vec<f64>>) -> Chain {
        let q = draws[0].len();
        Chain {
            names: (0..q).map(|k| format!("x{k}")).collect(),
            log_posterior: vec![0.0; draws.len()],
            draws,
            acceptance: vec![0.3; q],
            scales: vec![0.1; q],
            eta: 1.0,
            iterations: 0,
            burn_in: 0,
            thin: 1,
            seed: 0,
            wall_seconds: 0.0,
            scale_trace: Vec::new(),
        }
    }

    #[test]
    fn h_inv_of_iid_normals_is_identity() {
        let mut r = rng::from_seed(3);
        let draws: Vec<Vec<f64>> = (0..10_000)
            .map(|_| (0..3).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let h = estimate_h_inv(&pseudo_chain(draws)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((h[i][j] - want).abs() < 0.1, "{i}{j}: {}", h[i][j]);
            }
        }
    }

    #[test]
    fn h_inv_of_repeated_point_is_an_error() {
        let chain = pseudo_chain(vec![vec![1.0, 2.0]; 100]);
        assert!(matches!(estimate_h_inv(&chain), Err(Error::Diagnostics(_))));
        assert!(estimate_h_inv(&pseudo_chain(vec![vec![1.0, 2.0]; 5])).is_err());
    }

    #[test]
    fn j_of_normal_scores_and_identical_scores() {
        let mut r = rng::from_seed(4);
        let d = [0.5f64, 4.0];
        let scores: Vec<Vec<f64>> = (0..20_000)
            .map(|_| d.iter().map(|v| v.sqrt() * r.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let j = estimate_j(&scores).unwrap();
        assert!((j[0][0] / 0.5 - 1.0).abs() < 0.05 && (j[1][1] / 4.0 - 1.0).abs() < 0.05);
        assert!(j[0][1].abs() < 0.05);
        let same = estimate_j(&vec![vec![1.5, -2.0]; 30]).unwrap();
        assert!(same.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn learning_rate_scales_inversely_with_j() {
        let h_inv = vec![vec![1.0, 0.2], vec![0.2, 3.0]];
        let j = vec![vec![2.0, 0.1], vec![0.1, 0.5]];
        let j3: Vec<Vec<f64>> = j.iter().map(|r| r.iter().map(|v| 3.0 * v).collect()).collect();
        let a = learning_rate(&h_inv, &j, 2).unwrap();
        let b = learning_rate(&h_inv, &j3, 2).unwrap();
        assert!((a / b - 3.0).abs() < 1e-12);
    }

    #[test]
    fn selected_eta_matches_order_statistic() {
        // The smallest η covering k bootstraps is the k-th order statistic of
        // each bootstrap's own minimal η.
        let mut r = rng::from_seed(9);
        let value = 0.0;
        let ivs: Vec<BootInterval> = (0..60)
            .map(|_| {
                let m: f64 = r.sample::<f64, _>(StandardNormal);
                let lo = r.random::<f64>() * 0.8 + 0.1;
                let hi = r.random::<f64>() * 0.8 + 0.1;
                BootInterval { mean: m, lower: m - lo, upper: m + hi }
            })
            .collect();
        let mut own: Vec<f64> = ivs
            .iter()
            .map(|iv| {
                let need = if value < iv.mean {
                    (iv.mean - value) / (iv.mean - iv.lower)
                } else {
                    (value - iv.mean) / (iv.upper - iv.mean)
                };
                need.max(1.0)
            })
            .collect();
        own.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let alpha = 0.1;
        let k = (0.9f64 * 60.0).ceil() as usize;
        let exact = own[k - 1];
        let search = GpcSearch { eta_max: 50.0, tolerance: 1e-6 };
        let eta = select_eta(&ivs, value, alpha, &search).unwrap();
        assert!(eta >= exact - 1e-9 && eta - exact <= 1e-6, "{eta} vs {exact}");
        // Coverage is nondecreasing in η.
        let mut last = 0.0;
        for s in 0..200 {
            let c = coverage(&ivs, value, 1.0 + 0.05 * s as f64);
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn recalibration_from_intervals_is_identity_when_covered() {
        let row = vec![iv(0.0, 1.0), iv(1.0, 1.0)];
        let intervals = vec![row; 25];
        let (eta, before, after) = gpc_from_intervals(&[0.1, 1.2], &intervals, 0.05, &GpcSearch::default()).unwrap();
        assert_eq!(eta, vec![1.0, 1.0]);
        assert_eq!(before, after);
        let draws = vec![vec![0.3, 0.7], vec![-0.2, 1.9]];
        assert_eq!(rescale_draws(&draws, &[0.05, 1.3], &eta).unwrap(), draws);
    }

    #[test]
    fn learning_rate_examples() {
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let two: Vec<Vec<f64>> = id.iter().map(|r| r.iter().map(|v| 2.0 * v).collect()).collect();
        assert_eq!(learning_rate(&id, &two, 3).unwrap(), 0.5);
        let h_inv = vec![vec![2.0, 0.5], vec![0.5, 1.0]];
        // J = H = inverse of H⁻¹.
        let det = 2.0 - 0.25;
        let h = vec![vec![1.0 / det, -0.5 / det], vec![-0.5 / det, 2.0 / det]];
        assert!((learning_rate(&h_inv, &h, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            learning_rate(&id, &vec![vec![0.0; 3]; 3], 3),
            Err(Error::Diagnostics(_))
        ));
    }

    #[test]
    fn rescale_identity_and_doubling() {
        let mut r = rng::from_seed(1);
        let draws: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![r.sample::<f64, _>(StandardNormal), 3.0 + r.sample::<f64, _>(StandardNormal)])
            .collect();
        let hat = column_means(&draws);
        assert_eq!(rescale_draws(&draws, &hat, &[1.0, 1.0]).unwrap(), draws);
        let doubled = rescale_draws(&draws, &hat, &[2.0, 2.0]).unwrap();
        for k in 0..2 {
            let a: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let b: Vec<f64> = doubled.iter().map(|d| d[k]).collect();
            assert!((variance(&b).sqrt() - 2.0 * variance(&a).sqrt()).abs() < 1e-12);
            assert!((mean(&b) - mean(&a)).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_is_one_when_coverage_suffices() {
        let ivs: Vec<BootInterval> = (0..40).map(|k| iv(0.01 * k as f64, 1.0)).collect();
        assert_eq!(select_eta(&ivs, 0.1, 0.05, &GpcSearch::default()).unwrap(), 1.0);
    }

    #[test]
    fn half_width_intervals_need_eta_two() {
        // Every interval reaches exactly half-way to the target.
        let ivs: Vec<BootInterval> = (0..50).map(|k| iv(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.5)).collect();
        let eta = select_eta(&ivs, 0.0, 0.05, &GpcSearch::default()).unwrap();
        assert!((eta - 2.0).abs() <= 1e-2, "{eta}");
        assert!(coverage(&ivs, 0.0, eta) >= 0.95);
    }

    #[test]
    fn uncalibratable_parameter_is_reported() {
        let ivs: Vec<BootInterval> = (0..30).map(|_| iv(100.0, 0.1)).collect();
        assert!(matches!(select_eta(&ivs, 0.0, 0.05, &GpcSearch::default()), Err(Error::Diagnostics(_))));
    }

    #[test]
    fn too_few_bootstraps_rejected() {
        assert!(check_bootstraps(19).is_err());
        assert!(check_bootstraps(20).is_ok());
    }
}
