//! Full-likelihood LGCP reference sampler on a grid.
//!
//! The intensity is piecewise constant over grid cells,
//! `ℓ(β, W) = Σᵢ nᵢ(xᵢ'β + Wᵢ) − Σᵢ |dᵢ| exp(xᵢ'β + Wᵢ)`, and the latent
//! field `W ~ N(0, σ² R(φ))` is updated by elliptical slice sampling.
//! Regression coefficients, `log σ²` and `log φ` get component-wise
//! adaptive random-walk updates given `W`.

use std::f64::consts::PI;
use std::time::Instant;

use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cell_counts, GridPartition, PointPattern};
use crate::linalg::Cholesky;
use crate::models::CovariateField;
use crate::rng;
use crate::sampler::{AdaptiveScales, Chain, PriorSpec, SamplerConfig};

/// Cell counts, areas and design vectors of a gridded pattern.
#[derive(Debug, Clone)]
pub struct GridApprox {
    grid: GridPartition,
    counts: Vec<f64>,
    areas: Vec<f64>,
    designs: Option<Vec<Vec<f64>>>,
}

impl GridApprox {
    pub fn new(pattern: &PointPattern, grid: GridPartition, covariates: Option<&CovariateField>) -> Result<Self> {
        let counts = cell_counts(pattern, &grid)?.into_iter().map(|c| c as f64).collect();
        let areas = vec![grid.cell_area(); grid.len()];
        let designs = covariates.map(|c| (0..grid.len()).map(|i| c.design_at(grid.cell_center(i))).collect());
        Ok(Self {
            grid,
            counts,
            areas,
            designs,
        })
    }

    /// Approximation from raw counts and areas (no covariates).
    pub fn from_counts(grid: GridPartition, counts: Vec<f64>, areas: Vec<f64>) -> Result<Self> {
        if counts.len() != grid.len() || areas.len() != grid.len() {
            return Err(Error::invalid("counts and areas need one entry per grid cell"));
        }
        Ok(Self {
            grid,
            counts,
            areas,
            designs: None,
        })
    }

    pub fn grid(&self) -> &GridPartition {
        &self.grid
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn n_coefficients(&self) -> usize {
        self.designs.as_ref().map_or(1, |d| d[0].len())
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        match &self.designs {
            None => vec![beta[0]; self.counts.len()],
            Some(d) => d.iter().map(|x| x.iter().zip(beta).map(|(a, b)| a * b).sum()).collect(),
        }
    }
}

/// `Σᵢ nᵢ(ηᵢ + Wᵢ) − Σᵢ |dᵢ| exp(ηᵢ + Wᵢ)` with `ηᵢ = xᵢ'β` (`β = [β₀]`
/// without covariates).
pub fn grid_loglik(beta: &[f64], w: &[f64], approx: &GridApprox) -> f64 {
    assert_eq!(w.len(), approx.counts.len(), "field length must match the grid");
    assert_eq!(beta.len(), approx.n_coefficients(), "coefficient count must match the design");
    let eta = approx.linear_predictor(beta);
    grid_loglik_eta(&eta, w, approx)
}

fn grid_loglik_eta(eta: &[f64], w: &[f64], approx: &GridApprox) -> f64 {
    let mut total = 0.0;
    for i in 0..w.len() {
        let v = eta[i] + w[i];
        if approx.counts[i] > 0.0 {
            total += approx.counts[i] * v;
        }
        total -= approx.areas[i] * v.exp();
    }
    total
}

/// One elliptical slice update of `f ~ N(0, σ² L Lᵀ)` under `loglik`.
/// `current` is `loglik(f)`; returns the new state and its log-likelihood.
pub fn elliptical_slice_step<F, R>(
    f: &[f64],
    factor: &Cholesky,
    sigma: f64,
    mut loglik: F,
    current: f64,
    rng: &mut R,
) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let z: Vec<f64> = (0..f.len()).map(|_| rng.sample(StandardNormal)).collect();
    let mut nu = factor.mul_lower(&z);
    nu.iter_mut().for_each(|v| *v *= sigma);
    let log_y = current + rng.random::<f64>().ln();
    let mut theta = rng.random::<f64>() * 2.0 * PI;
    let (mut lo, mut hi) = (theta - 2.0 * PI, theta);
    let mut proposal = vec![0.0; f.len()];
    loop {
        let (s, c) = theta.sin_cos();
        for i in 0..f.len() {
            proposal[i] = f[i] * c + nu[i] * s;
        }
        let ll = loglik(&proposal);
        if ll > log_y {
            return (proposal, ll);
        }
        if theta < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        if hi - lo < 1e-12 {
            return (f.to_vec(), current);
        }
        theta = lo + rng.random::<f64>() * (hi - lo);
    }
}

/// Cholesky factor of the exponential correlation matrix at range `phi`.
#[derive(Debug, Clone)]
struct FieldFactor {
    chol: Cholesky,
    log_det: f64,
}

fn distance_matrix(grid: &GridPartition) -> Vec<f64> {
    let c = grid.cell_centers();
    let k = c.len();
    let mut d = vec![0.0; k * k];
    for j in 0..k {
        for i in 0..k {
            d[j * k + i] = c[i].distance(c[j]);
        }
    }
    d
}

fn factor_at(dist: &[f64], k: usize, phi: f64) -> Result<FieldFactor> {
    let m = Mat::from_fn(k, k, |i, j| (-dist[j * k + i] / phi).exp());
    let chol = Cholesky::with_jitter(&m, 1.0)?;
    let log_det = chol.log_det();
    Ok(FieldFactor { chol, log_det })
}

/// `log N(W; 0, σ² R)` given `y = L⁻¹ W` and `log|R|`.
fn field_log_density(yy: f64, log_det: f64, k: usize, log_sigma2: f64) -> f64 {
    -0.5 * k as f64 * log_sigma2 - 0.5 * log_det - 0.5 * yy / log_sigma2.exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub sampler: SamplerConfig,
}

impl Default for FlConfig {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 32,
            sampler: SamplerConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlResult {
    /// Draws on `[β…, log σ², log φ]`.
    pub chain: Chain,
    /// Posterior mean of the latent field over kept draws.
    pub field_mean: Vec<f64>,
}

/// Full-likelihood MCMC. `prior` covers `[β…, log σ², log φ]`.
pub fn run_fl_mcmc(
    pattern: &PointPattern,
    covariates: Option<&CovariateField>,
    prior: &PriorSpec,
    cfg: &FlConfig,
) -> Result<FlResult> {
    let sc = &cfg.sampler;
    sc.validate()?;
    let grid = GridPartition::new(*pattern.window(), cfg.nx, cfg.ny)?;
    let approx = GridApprox::new(pattern, grid, covariates)?;
    let p = approx.n_coefficients();
    let q = p + 2;
    if prior.dim() != q {
        return Err(Error::invalid(format!("full-likelihood prior needs {q} coordinates, got {}", prior.dim())));
    }
    let k = approx.grid().len();
    let mut theta = match &sc.initial {
        Some(v) if v.len() == q => v.clone(),
        Some(_) => return Err(Error::invalid("initial point has the wrong length")),
        None => {
            let mut t = prior.center();
            let lambda = (approx.total().max(1.0) / pattern.window().area()).ln();
            t[0] = lambda - 0.5 * t[p].exp();
            t
        }
    };
    if !prior.log_density(&theta).is_finite() {
        return Err(Error::invalid(format!("initial point {theta:?} is outside the prior support")));
    }

    let dist = distance_matrix(approx.grid());
    let mut factor = factor_at(&dist, k, theta[p + 1].exp())?;
    let mut w = vec![0.0; k];
    let mut yy;
    let mut eta = approx.linear_predictor(&theta[..p]);
    let mut ll = grid_loglik_eta(&eta, &w, &approx);

    let mut scales = AdaptiveScales::from_config(sc, q)?;
    let mut r = rng::from_seed(sc.seed);
    let start = Instant::now();
    let mut draws = Vec::with_capacity(sc.kept());
    let mut log_posterior = Vec::with_capacity(sc.kept());
    let mut field_sum = vec![0.0; k];
    let mut accepted = vec![0u64; q];

    for t in 0..sc.iterations {
        let adapting = t < sc.burn_in;
        // Latent field.
        let sigma = (0.5 * theta[p]).exp();
        let (nw, nll) = elliptical_slice_step(&w, &factor.chol, sigma, |f| grid_loglik_eta(&eta, f, &approx), ll, &mut r);
        w = nw;
        ll = nll;
        yy = sum_sq(&factor.chol.solve_lower(&w));

        // Regression coefficients given W.
        for j in 0..p {
            let old = theta[j];
            let z: f64 = r.sample(StandardNormal);
            let lp_old = prior.log_density(&theta);
            theta[j] = old + scales.scale(j) * z;
            let lp_new = prior.log_density(&theta);
            let accept = if lp_new.is_finite() {
                let eta_new = approx.linear_predictor(&theta[..p]);
                let ll_new = grid_loglik_eta(&eta_new, &w, &approx);
                if r.random::<f64>().ln() < ll_new + lp_new - ll - lp_old {
                    eta = eta_new;
                    ll = ll_new;
                    true
                } else {
                    false
                }
            } else {
                false
            };
            if !accept {
                theta[j] = old;
            }
            finish_update(&mut scales, &mut accepted, j, t, adapting, accept);
        }

        // log σ² given W.
        {
            let old = theta[p];
            let z: f64 = r.sample(StandardNormal);
            let cur = field_log_density(yy, factor.log_det, k, old) + prior.log_density(&theta);
            theta[p] = old + scales.scale(p) * z;
            let lp = prior.log_density(&theta);
            let accept = lp.is_finite()
                && r.random::<f64>().ln() < field_log_density(yy, factor.log_det, k, theta[p]) + lp - cur;
            if !accept {
                theta[p] = old;
            }
            finish_update(&mut scales, &mut accepted, p, t, adapting, accept);
        }

        // log φ given W; needs a new factorisation.
        {
            let old = theta[p + 1];
            let z: f64 = r.sample(StandardNormal);
            let cur = field_log_density(yy, factor.log_det, k, theta[p]) + prior.log_density(&theta);
            theta[p + 1] = old + scales.scale(p + 1) * z;
            let lp = prior.log_density(&theta);
            let mut accept = false;
            if lp.is_finite() {
                let candidate = factor_at(&dist, k, theta[p + 1].exp())?;
                let yy_new = sum_sq(&candidate.chol.solve_lower(&w));
                let prop = field_log_density(yy_new, candidate.log_det, k, theta[p]) + lp;
                if r.random::<f64>().ln() < prop - cur {
                    factor = candidate;
                    yy = yy_new;
                    accept = true;
                }
            }
            if !accept {
                theta[p + 1] = old;
            }
            finish_update(&mut scales, &mut accepted, p + 1, t, adapting, accept);
        }

        if t >= sc.burn_in && (t - sc.burn_in + 1) % sc.thin == 0 {
            draws.push(theta.clone());
            log_posterior.push(ll + field_log_density(yy, factor.log_det, k, theta[p]) + prior.log_density(&theta));
            for (s, v) in field_sum.iter_mut().zip(&w) {
                *s += v;
            }
        }
    }

    let post = (sc.iterations - sc.burn_in) as f64;
    let kept = draws.len().max(1) as f64;
    Ok(FlResult {
        chain: Chain {
            names: prior.names().to_vec(),
            draws,
            log_posterior,
            acceptance: accepted.iter().map(|&a| a as f64 / post).collect(),
            scales: scales.scales(),
            eta: 1.0,
            iterations: sc.iterations,
            burn_in: sc.burn_in,
            thin: sc.thin,
            seed: sc.seed,
            wall_seconds: start.elapsed().as_secs_f64(),
            scale_trace: Vec::new(),
        },
        field_mean: field_sum.iter().map(|s| s / kept).collect(),
    })
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn finish_update(scales: &mut AdaptiveScales, accepted: &mut [u64], k: usize, t: usize, adapting: bool, accept: bool) {
    if adapting {
        scales.adapt(k, t, accept);
    } else if accept {
        accepted[k] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;
    use crate::models::correlation_matrix;
    use crate::numerics::{covariance_matrix, mean, variance};
    use crate::sampler::Prior;
    use approx::assert_relative_eq;

    fn unit_grid(n: usize) -> GridPartition {
        GridPartition::new(Window::unit_square(), n, n).unwrap()
    }

    #[test]
    fn poisson_plug_in_value() {
        let grid = unit_grid(4);
        let n = 50.0;
        let counts: Vec<f64> = (0..16).map(|i| if i < 2 { 25.0 } else { 0.0 }).collect();
        let approx = GridApprox::from_counts(grid, counts, vec![1.0 / 16.0; 16]).unwrap();
        let v = grid_loglik(&[f64::ln(n)], &[0.0; 16], &approx);
        assert_relative_eq!(v, n * n.ln() - n, max_relative = 1e-14);
    }

    #[test]
    fn empty_pattern_limit_and_area_linearity() {
        let grid = unit_grid(3);
        let empty = GridApprox::from_counts(grid.clone(), vec![0.0; 9], vec![1.0 / 9.0; 9]).unwrap();
        assert!(grid_loglik(&[-50.0], &[0.0; 9], &empty).abs() < 1e-20);
        let counts: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let w: Vec<f64> = (0..9).map(|i| 0.1 * i as f64 - 0.4).collect();
        let a = GridApprox::from_counts(grid.clone(), counts.clone(), vec![1.0 / 9.0; 9]).unwrap();
        let b = GridApprox::from_counts(grid, counts.clone(), vec![2.0 / 9.0; 9]).unwrap();
        let first: f64 = counts.iter().zip(&w).map(|(n, wi)| n * (1.0 + wi)).sum();
        let la = grid_loglik(&[1.0], &w, &a);
        let lb = grid_loglik(&[1.0], &w, &b);
        assert_relative_eq!(lb - first, 2.0 * (la - first), max_relative = 1e-12);
    }

    #[test]
    fn concave_in_intercept() {
        let grid = unit_grid(4);
        let counts: Vec<f64> = (0..16).map(|i| (i % 3) as f64).collect();
        let approx = GridApprox::from_counts(grid, counts, vec![1.0 / 16.0; 16]).unwrap();
        let w: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 * 0.2 - 0.4).collect();
        let h = 1e-3;
        for b in [-1.0, 0.0, 2.0, 4.0] {
            let d2 = grid_loglik(&[b + h], &w, &approx) - 2.0 * grid_loglik(&[b], &w, &approx)
                + grid_loglik(&[b - h], &w, &approx);
            assert!(d2 < 0.0);
        }
    }

    #[test]
    fn bracket_shrinks_back_to_current_state() {
        let grid = unit_grid(2);
        let chol = Cholesky::with_jitter(&correlation_matrix(&grid, 0.5), 1.0).unwrap();
        let f = vec![0.3, -1.2, 0.5, 0.0];
        let only_f = |g: &[f64]| if g == [0.3, -1.2, 0.5, 0.0] { 0.0 } else { f64::NEG_INFINITY };
        let (g, ll) = elliptical_slice_step(&f, &chol, 1.0, only_f, 0.0, &mut rng::from_seed(3));
        assert_eq!(g, f);
        assert_eq!(ll, 0.0);
    }

    #[test]
    fn constant_likelihood_preserves_prior() {
        let grid = unit_grid(3);
        let chol = Cholesky::with_jitter(&correlation_matrix(&grid, 0.5), 1.0).unwrap();
        let mut r = rng::from_seed(4);
        let mut f = vec![0.0; 9];
        let mut rows = Vec::new();
        for _ in 0..5000 {
            let (nf, _) = elliptical_slice_step(&f, &chol, 1.5, |_| 0.0, 0.0, &mut r);
            f = nf;
            rows.push(f.clone());
        }
        let cov = covariance_matrix(&rows);
        let target = correlation_matrix(&grid, 0.5);
        for i in 0..9 {
            for j in 0..9 {
                let expected = 2.25 * target[(i, j)];
                assert!((cov[i][j] - expected).abs() < 0.15 * 2.25, "({i},{j}) {} vs {expected}", cov[i][j]);
            }
        }
    }

    #[test]
    fn conjugate_gaussian_posterior_mean() {
        // Prior N(0, 1), observation y = 2 with noise variance 1: posterior N(1, 1/2).
        let grid = unit_grid(1);
        let chol = Cholesky::with_jitter(&correlation_matrix(&grid, 1.0), 1.0).unwrap();
        let ll = |f: &[f64]| -0.5 * (f[0] - 2.0).powi(2);
        let mut r = rng::from_seed(5);
        let mut f = vec![0.0];
        let mut cur = ll(&f);
        let mut xs = Vec::new();
        for _ in 0..20_000 {
            let (nf, nll) = elliptical_slice_step(&f, &chol, 1.0, ll, cur, &mut r);
            f = nf;
            cur = nll;
            xs.push(f[0]);
        }
        assert!((mean(&xs) - 1.0).abs() < 0.05);
        assert!((variance(&xs) - 0.5).abs() < 0.05);
    }

    #[test]
    fn degenerate_variance_prior_recovers_poisson_intercept() {
        let w = Window::unit_square();
        let pat = crate::models::simulate_poisson(200.0, &w, &mut rng::from_seed(6)).unwrap();
        let prior = PriorSpec::new(
            vec!["beta0".into(), "log_sigma2".into(), "log_phi".into()],
            vec![
                Prior::Normal { mean: 0.0, sd: 1000.0 },
                Prior::Uniform { lo: -12.0, hi: -11.0 },
                Prior::Uniform { lo: -3.0, hi: -1.6 },
            ],
        )
        .unwrap();
        let cfg = FlConfig {
            nx: 8,
            ny: 8,
            sampler: SamplerConfig {
                iterations: 3000,
                burn_in: 500,
                thin: 5,
                seed: 7,
                ..Default::default()
            },
        };
        let res = run_fl_mcmc(&pat, None, &prior, &cfg).unwrap();
        let b = mean(&res.chain.column(0));
        let expected = (pat.len() as f64).ln();
        assert!((b - expected).abs() < 0.1, "{b} vs {expected}");
    }
}
