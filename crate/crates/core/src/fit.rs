//! Palm-posterior fits: a pattern, a family, an integral configuration and
//! priors bundled into one log-posterior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::ModelFamily;
use crate::geometry::{PairIndex, PointPattern};
use crate::models::CovariateField;
use crate::numerics::nelder_mead_max;
use crate::palm::{palm_score_fd, IntegralConfig, ObjectiveOptions, PalmObjective};
use crate::sampler::{run_mcmc, Chain, PriorSpec, PriorTemplate, SamplerConfig};

/// How the chain's starting point is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Maximise the log posterior by Nelder–Mead, starting from the prior
    /// centre with `log λ` at `log(n / |D|)`.
    Optimize { max_evals: usize },
    PriorCenter,
    Fixed { values: Vec<f64> },
}

impl Default for InitStrategy {
    fn default() -> Self {
        InitStrategy::Optimize { max_evals: 3000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalmFitConfig {
    pub family: ModelFamily,
    pub integral: IntegralConfig,
    #[serde(default)]
    pub objective: ObjectiveOptions,
    pub priors: Vec<PriorTemplate>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub init: InitStrategy,
}

impl PalmFitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.priors.len() != self.family.dim() {
            return Err(Error::invalid(format!(
                "{} priors given, {} family has {} parameters",
                self.priors.len(),
                self.family.label(),
                self.family.dim()
            )));
        }
        self.sampler.validate()
    }
}

/// Log Palm posterior for one pattern, on the family's sampled scale.
#[derive(Debug, Clone)]
pub struct PalmProblem {
    family: ModelFamily,
    objective: PalmObjective,
    prior: PriorSpec,
    start: Vec<f64>,
}

impl PalmProblem {
    pub fn new(pattern: &PointPattern, covariates: Option<&CovariateField>, cfg: &PalmFitConfig) -> Result<Self> {
        cfg.validate()?;
        let family = cfg.family;
        match (family, covariates) {
            (ModelFamily::LgcpCovariates { n_covariates }, Some(c)) if c.n_covariates() == n_covariates => {}
            (ModelFamily::LgcpCovariates { .. }, _) => {
                return Err(Error::invalid("covariate family needs a matching covariate field"));
            }
            (_, Some(_)) => return Err(Error::invalid("stationary family takes no covariates")),
            _ => {}
        }
        let pairs = PairIndex::build(pattern, cfg.integral.radius)?;
        let objective = PalmObjective::new(pattern, &pairs, &cfg.integral, covariates, &cfg.objective)?;
        let prior = PriorSpec::from_templates(family.sampled_names(), &cfg.priors, pattern)?;
        let mut start = prior.center();
        if family.samples_log_intensity() && !pattern.is_empty() {
            start[0] = (pattern.len() as f64 / pattern.window().area()).ln();
        }
        Ok(Self {
            family,
            objective,
            prior,
            start,
        })
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn objective(&self) -> &PalmObjective {
        &self.objective
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        self.family
            .to_model(theta)
            .map_or(f64::NEG_INFINITY, |m| self.objective.log_palm(&m))
    }

    /// `η·ℓ_P(θ) + log π(θ)`; `-∞` outside the prior support.
    pub fn log_posterior(&self, theta: &[f64], eta: f64) -> f64 {
        let lp = self.prior.log_density(theta);
        if lp == f64::NEG_INFINITY || eta == 0.0 {
            return lp;
        }
        let v = eta * self.log_likelihood(theta) + lp;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    pub fn score(&self, theta: &[f64]) -> Result<Vec<f64>> {
        palm_score_fd(&self.objective, self.family, theta)
    }

    pub fn initial_point(&self, strategy: &InitStrategy, eta: f64) -> Result<Vec<f64>> {
        let x = match strategy {
            InitStrategy::Fixed { values } => values.clone(),
            InitStrategy::PriorCenter => self.start.clone(),
            InitStrategy::Optimize { max_evals } => {
                let step = vec![0.5; self.start.len()];
                let f = |t: &[f64]| self.log_posterior(t, eta.max(1e-3));
                let (x, _) = nelder_mead_max(f, &self.start, &step, *max_evals / 2);
                let small = vec![0.1; self.start.len()];
                nelder_mead_max(f, &x, &small, *max_evals / 2).0
            }
        };
        if x.len() != self.family.dim() {
            return Err(Error::invalid("initial point has the wrong length"));
        }
        if !self.log_posterior(&x, eta).is_finite() {
            return Err(Error::invalid(format!("log posterior is not finite at the initial point {x:?}")));
        }
        Ok(x)
    }

    /// Run the sampler; the configured initial point wins over `init`.
    pub fn sample(&self, sampler: &SamplerConfig, init: &InitStrategy) -> Result<Chain> {
        let mut cfg = sampler.clone();
        if cfg.initial.is_none() {
            cfg.initial = Some(self.initial_point(init, cfg.eta)?);
        }
        run_mcmc(|t| self.log_likelihood(t), &self.prior, &cfg)
    }
}

/// Build the problem and run one chain.
pub fn fit_palm(pattern: &PointPattern, covariates: Option<&CovariateField>, cfg: &PalmFitConfig) -> Result<Chain> {
    PalmProblem::new(pattern, covariates, cfg)?.sample(&cfg.sampler, &cfg.init)
}
