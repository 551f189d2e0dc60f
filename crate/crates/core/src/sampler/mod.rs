//! Adaptive random-walk Metropolis–Hastings over tempered posteriors
//! `η·ℓ(θ) + log π(θ)`.

mod ess;
mod prior;
mod summary;

pub use ess::{effective_sample_size, Ess};
pub use prior::{Prior, PriorSpec, PriorTemplate};
pub use summary::{equal_tailed_interval, summarize, summarize_draws, ParamSummary, PosteriorSummary};

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Proposals rejected in a row before a chain is declared stuck.
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Learning rate applied to the log-likelihood.
    pub eta: f64,
    /// Starting point; the prior centre when absent.
    pub initial: Option<Vec<f64>>,
    /// Starting proposal standard deviations; 0.1 per coordinate when absent.
    pub initial_scales: Option<Vec<f64>>,
    pub target_accept: f64,
    /// Robbins–Monro step `(t + 1)^(−decay)`.
    pub adapt_decay: f64,
    pub seed: u64,
    /// Record proposal scales after every iteration.
    pub trace_scales: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 2_000,
            thin: 18,
            eta: 1.0,
            initial: None,
            initial_scales: None,
            target_accept: 0.30,
            adapt_decay: 0.7,
            seed: 0,
            trace_scales: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn_in ({}) must be below iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be >= 1"));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid(format!("learning rate must be >= 0, got {}", self.eta)));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid("target acceptance must lie in (0, 1)"));
        }
        if let Some(s) = &self.initial_scales {
            if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::invalid("proposal scales must be positive"));
            }
        }
        Ok(())
    }

    /// Rows a chain with this configuration keeps.
    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub names: Vec<String>,
    /// Kept draws, one row per draw, sampled scale.
    pub draws: Vec<Vec<f64>>,
    pub log_posterior: Vec<f64>,
    /// Post burn-in acceptance rate per coordinate.
    pub acceptance: Vec<f64>,
    /// Frozen proposal scales.
    pub scales: Vec<f64>,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    #[serde(skip)]
    pub wall_seconds: f64,
    #[serde(skip)]
    pub scale_trace: Vec<Vec<f64>>,
}

impl Chain {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|r| r[k]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        crate::numerics::column_means(&self.draws)
    }

    /// Apply a row map, e.g. sampled → natural scale.
    pub fn map_draws<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Vec<Vec<f64>> {
        self.draws.iter().map(|r| f(r)).collect()
    }
}

/// Per-coordinate random-walk scales with Robbins–Monro adaptation on the
/// log scale: `log sₖ += (t+1)^(−decay)·(aₖ − target)`.
#[derive(Debug, Clone)]
pub struct AdaptiveScales {
    log_scale: Vec<f64>,
    target: f64,
    decay: f64,
}

impl AdaptiveScales {
    pub fn new(initial: &[f64], target: f64, decay: f64) -> Self {
        Self {
            log_scale: initial.iter().map(|v| v.ln()).collect(),
            target,
            decay,
        }
    }

    /// Initial scales from `cfg`, 0.1 per coordinate by default.
    pub fn from_config(cfg: &SamplerConfig, q: usize) -> Result<Self> {
        let initial = match &cfg.initial_scales {
            Some(s) if s.len() != q => return Err(Error::invalid("one proposal scale per coordinate required")),
            Some(s) => s.clone(),
            None => vec![0.1; q],
        };
        Ok(Self::new(&initial, cfg.target_accept, cfg.adapt_decay))
    }

    #[inline]
    pub fn scale(&self, k: usize) -> f64 {
        self.log_scale[k].exp()
    }

    pub fn adapt(&mut self, k: usize, t: usize, accepted: bool) {
        let gain = ((t + 1) as f64).powf(-self.decay);
        let a = if accepted { 1.0 } else { 0.0 };
        self.log_scale[k] += gain * (a - self.target);
    }

    pub fn scales(&self) -> Vec<f64> {
        self.log_scale.iter().map(|v| v.exp()).collect()
    }
}

fn tempered(log_lik: &mut impl FnMut(&[f64]) -> f64, prior: &PriorSpec, eta: f64, theta: &[f64]) -> f64 {
    let lp = prior.log_density(theta);
    if lp == f64::NEG_INFINITY || eta == 0.0 {
        return lp;
    }
    let ll = log_lik(theta);
    let v = eta * ll + lp;
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Component-wise Gaussian random-walk Metropolis–Hastings on
/// `η·log_lik(θ) + log π(θ)`.
///
/// Each iteration updates every coordinate in turn. During burn-in the log
/// proposal scale of coordinate k moves by `(t+1)^(−decay)·(aₖ − target)`,
/// `aₖ ∈ {0, 1}` the acceptance indicator; afterwards scales are frozen.
/// Iteration `t` (0-based) is kept when `t ≥ burn_in` and
/// `(t − burn_in + 1)` is a multiple of `thin`.
pub fn run_mcmc<F: FnMut(&[f64]) -> f64>(mut log_lik: F, prior: &PriorSpec, cfg: &SamplerConfig) -> Result<Chain> {
    cfg.validate()?;
    let q = prior.dim();
    let mut theta = match &cfg.initial {
        Some(v) => v.clone(),
        None => prior.center(),
    };
    if theta.len() != q {
        return Err(Error::invalid(format!("initial point has {} coordinates, prior has {q}", theta.len())));
    }
    let mut scales = AdaptiveScales::from_config(cfg, q)?;
    let mut current = tempered(&mut log_lik, prior, cfg.eta, &theta);
    if !current.is_finite() {
        return Err(Error::invalid(format!("log posterior is not finite at the initial point {theta:?}")));
    }

    let mut rng = rng::from_seed(cfg.seed);
    let start = Instant::now();
    let kept = cfg.kept();
    let mut draws = Vec::with_capacity(kept);
    let mut log_posterior = Vec::with_capacity(kept);
    let mut accepted = vec![0u64; q];
    let mut scale_trace = Vec::new();
    let mut rejections = 0u64;

    for t in 0..cfg.iterations {
        let adapting = t < cfg.burn_in;
        for k in 0..q {
            let old = theta[k];
            let z: f64 = rng.sample(StandardNormal);
            theta[k] = old + scales.scale(k) * z;
            let proposed = tempered(&mut log_lik, prior, cfg.eta, &theta);
            let log_u = rng.random::<f64>().ln();
            let accept = log_u < proposed - current;
            if accept {
                current = proposed;
                rejections = 0;
                if !adapting {
                    accepted[k] += 1;
                }
            } else {
                theta[k] = old;
                rejections += 1;
                if rejections > MAX_CONSECUTIVE_REJECTIONS {
                    return Err(Error::Diagnostics(format!(
                        "{rejections} consecutive rejections at iteration {t}"
                    )));
                }
            }
            if adapting {
                scales.adapt(k, t, accept);
            }
        }
        if cfg.trace_scales {
            scale_trace.push(scales.scales());
        }
        if t >= cfg.burn_in && (t - cfg.burn_in + 1) % cfg.thin == 0 {
            draws.push(theta.clone());
            log_posterior.push(current);
        }
    }

    let post = (cfg.iterations - cfg.burn_in) as f64;
    Ok(Chain {
        names: prior.names().to_vec(),
        draws,
        log_posterior,
        acceptance: accepted.iter().map(|&a| a as f64 / post).collect(),
        scales: scales.scales(),
        eta: cfg.eta,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        seed: cfg.seed,
        wall_seconds: start.elapsed().as_secs_f64(),
        scale_trace,
    })
}

/// `β₀ = log λ − σ²/2`, draw by draw.
pub fn composition_beta0(lambda: &[f64], sigma2: &[f64]) -> Result<Vec<f64>> {
    if lambda.len() != sigma2.len() {
        return Err(Error::invalid("draw vectors differ in length"));
    }
    lambda
        .iter()
        .zip(sigma2)
        .map(|(&l, &s)| {
            if l > 0.0 {
                Ok(l.ln() - 0.5 * s)
            } else {
                Err(Error::evaluation(format!("intensity draw {l} is not positive")))
            }
        })
        .collect()
}

/// `ν = λ / μ`, draw by draw.
pub fn composition_nu(lambda: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
    if lambda.len() != mu.len() {
        return Err(Error::invalid("draw vectors differ in length"));
    }
    lambda
        .iter()
        .zip(mu)
        .map(|(&l, &m)| {
            if m > 0.0 {
                Ok(l / m)
            } else {
                Err(Error::evaluation(format!("parent intensity draw {m} is not positive")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{mean, variance};

    fn normal_prior(q: usize) -> PriorSpec {
        PriorSpec::new(
            (0..q).map(|k| format!("x{k}")).collect(),
            vec![Prior::Normal { mean: 0.0, sd: 1000.0 }; q],
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_target() {
        let cfg = SamplerConfig {
            iterations: 50_000,
            burn_in: 2_000,
            thin: 1,
            seed: 3,
            ..Default::default()
        };
        let chain = run_mcmc(|x| -0.5 * x[0] * x[0], &normal_prior(1), &cfg).unwrap();
        let xs = chain.column(0);
        assert_eq!(xs.len(), 48_000);
        assert!(mean(&xs).abs() < 0.05, "mean {}", mean(&xs));
        assert!((variance(&xs) - 1.0).abs() < 0.1, "var {}", variance(&xs));
        assert!((chain.acceptance[0] - 0.3).abs() < 0.1);
    }

    #[test]
    fn kept_rows_follow_thinning_rule() {
        let cfg = SamplerConfig {
            iterations: 20_000,
            burn_in: 2_000,
            thin: 18,
            ..Default::default()
        };
        assert_eq!(cfg.kept(), 1000);
        let chain = run_mcmc(|x| -0.5 * x[0] * x[0], &normal_prior(1), &cfg).unwrap();
        assert_eq!(chain.len(), 1000);
        assert!(chain.log_posterior.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_learning_rate_samples_the_prior() {
        let prior = PriorSpec::new(vec!["u".into()], vec![Prior::Uniform { lo: -3.0, hi: -1.6 }]).unwrap();
        let cfg = SamplerConfig {
            iterations: 60_000,
            burn_in: 2_000,
            thin: 2,
            eta: 0.0,
            seed: 5,
            ..Default::default()
        };
        let chain = run_mcmc(|_| panic!("likelihood must not be evaluated"), &prior, &cfg).unwrap();
        let xs = chain.column(0);
        assert!((mean(&xs) + 2.3).abs() < 0.02);
        assert!((variance(&xs) - 1.4f64.powi(2) / 12.0).abs() < 0.01);
    }

    #[test]
    fn adaptation_freezes_after_burn_in() {
        let cfg = SamplerConfig {
            iterations: 3_000,
            burn_in: 1_000,
            thin: 1,
            trace_scales: true,
            ..Default::default()
        };
        let chain = run_mcmc(|x| -0.5 * (x[0] * x[0] + x[1] * x[1] / 4.0), &normal_prior(2), &cfg).unwrap();
        assert_eq!(chain.scale_trace.len(), 3_000);
        for row in &chain.scale_trace[cfg.burn_in..] {
            assert_eq!(row, &chain.scales);
        }
        assert_ne!(chain.scale_trace[10], chain.scales);
    }

    #[test]
    fn identical_seeds_give_identical_chains() {
        let cfg = SamplerConfig {
            iterations: 2_000,
            burn_in: 500,
            thin: 3,
            seed: 99,
            ..Default::default()
        };
        let f = |x: &[f64]| -0.5 * (x[0] - 1.0).powi(2) - x[1].abs();
        let a = run_mcmc(f, &normal_prior(2), &cfg).unwrap();
        let b = run_mcmc(f, &normal_prior(2), &cfg).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.log_posterior, b.log_posterior);
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let prior = PriorSpec::new(vec!["u".into()], vec![Prior::Uniform { lo: 0.0, hi: 1.0 }]).unwrap();
        let cfg = SamplerConfig {
            initial: Some(vec![2.0]),
            ..Default::default()
        };
        assert!(matches!(run_mcmc(|_| 0.0, &prior, &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn compositions() {
        let b = composition_beta0(&[300.0, 1.0, 2f64.exp()], &[1.0, 0.0, 2.0]).unwrap();
        assert_eq!(b[0], 300f64.ln() - 0.5);
        assert!((b[0] - 5.2040).abs() < 5e-4);
        assert_eq!(b[1], 0.0);
        assert!((b[2] - 1.0).abs() < 1e-15);
        assert!(composition_beta0(&[0.0], &[1.0]).is_err());
        let nu = composition_nu(&[300.0, 5.0, 0.0], &[10.0, 5.0, 3.0]).unwrap();
        assert_eq!(nu, vec![30.0, 1.0, 0.0]);
        assert!(composition_nu(&[1.0], &[0.0]).is_err());
    }
}
