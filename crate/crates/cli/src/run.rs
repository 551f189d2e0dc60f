//! One configured fit on one pattern, with its requested adjustments.

use std::time::Instant;

use palm_core::calibration::{adjustment1_from_chain, gpc_from_chain, BootstrapDesign, GodambeEstimate, GpcResult};
use palm_core::full_lgcp::{run_fl_mcmc, FlConfig};
use palm_core::rng::derive_seed;
use palm_core::sampler::summarize_draws;
use palm_core::{
    fit_palm, Chain, CovariateField, GridPartition, ModelFamily, PalmFitConfig, PointPattern, PosteriorSummary,
    PriorSpec, SamplerConfig,
};

use crate::config::{Adjustment, FitMethod, FitSpec, RunConfig};
use crate::error::{CliError, Result};

const STAGE_PATTERN: u64 = 1;
const STAGE_SAMPLER: u64 = 2;
const STAGE_CALIBRATION: u64 = 3;

pub fn pattern_seed(master: u64, replicate: usize) -> u64 {
    derive_seed(master, &[STAGE_PATTERN, replicate as u64])
}

pub fn sampler_seed(master: u64, replicate: usize, fit: usize) -> u64 {
    derive_seed(master, &[STAGE_SAMPLER, replicate as u64, fit as u64])
}

pub fn calibration_seed(master: u64, replicate: usize, fit: usize) -> u64 {
    derive_seed(master, &[STAGE_CALIBRATION, replicate as u64, fit as u64])
}

/// A finished fit under one adjustment.
#[derive(Debug, Clone)]
pub struct FitRun {
    pub label: String,
    pub adjustment: Adjustment,
    pub radius: Option<f64>,
    pub family: ModelFamily,
    /// The chain as sampled (for GPC, the unadjusted chain).
    pub chain: Chain,
    /// Target-scale draws after any adjustment.
    pub target: Vec<Vec<f64>>,
    pub natural_names: Vec<String>,
    /// Natural-scale draws after any adjustment.
    pub natural: Vec<Vec<f64>>,
    pub summary: PosteriorSummary,
    pub godambe: Option<GodambeEstimate>,
    pub gpc: Option<GpcResult>,
    pub bootstrap_draws: Option<Vec<Vec<Vec<f64>>>>,
    /// Wall time including the unadjusted chain.
    pub seconds: f64,
}

impl FitRun {
    pub fn ess_per_second(&self) -> Vec<f64> {
        self.summary.params.iter().map(|p| p.ess / self.seconds).collect()
    }
}

#[derive(Debug)]
pub struct FitAttempt {
    pub label: String,
    pub adjustment: Adjustment,
    pub outcome: Result<FitRun>,
}

fn finish(
    spec: &FitSpec,
    adjustment: Adjustment,
    family: ModelFamily,
    chain: Chain,
    target: Vec<Vec<f64>>,
    alpha: f64,
    seconds: f64,
) -> Result<FitRun> {
    let natural: Vec<Vec<f64>> = target.iter().map(|r| family.target_to_natural(r)).collect();
    let names = family.natural_names();
    let summary = summarize_draws(&natural, &names, alpha)?;
    Ok(FitRun {
        label: spec.label.clone(),
        adjustment,
        radius: spec.radius(),
        family,
        chain,
        target,
        natural_names: names,
        natural,
        summary,
        godambe: None,
        gpc: None,
        bootstrap_draws: None,
        seconds,
    })
}

fn duplicate(e: &palm_core::Error) -> palm_core::Error {
    use palm_core::Error as E;
    match e {
        E::InvalidArgument(m) => E::InvalidArgument(m.clone()),
        E::Evaluation { message, pair } => E::Evaluation {
            message: message.clone(),
            pair: *pair,
        },
        E::Numerical(m) => E::Numerical(m.clone()),
        E::Diagnostics(m) => E::Diagnostics(m.clone()),
    }
}

/// Runs `spec` on `pattern` under each of its adjustments. The unadjusted
/// chain is shared between adjustments.
pub fn run_fit(
    pattern: &PointPattern,
    covariates: Option<&CovariateField>,
    spec: &FitSpec,
    cfg: &RunConfig,
    sampler_seed: u64,
    calibration_seed: u64,
) -> Vec<FitAttempt> {
    let n_cov = covariates.map_or(0, |c| c.n_covariates());
    let family = spec.family(n_cov);
    let mut sampler: SamplerConfig = cfg.sampler.clone();
    sampler.seed = sampler_seed;
    let alpha = cfg.calibration.alpha;
    let attempt = |adjustment, outcome| FitAttempt {
        label: spec.label.clone(),
        adjustment,
        outcome,
    };

    match &spec.method {
        FitMethod::Full { nx, ny, priors } => {
            let start = Instant::now();
            let outcome = (|| {
                let prior = PriorSpec::from_templates(family.target_names(), priors, pattern)?;
                let fl = FlConfig {
                    nx: *nx,
                    ny: *ny,
                    sampler: sampler.clone(),
                };
                let res = run_fl_mcmc(pattern, covariates, &prior, &fl)?;
                let target = res.chain.draws.clone();
                finish(spec, Adjustment::None, family, res.chain, target, alpha, start.elapsed().as_secs_f64())
            })();
            vec![attempt(Adjustment::None, outcome)]
        }
        FitMethod::Palm {
            family,
            integral,
            objective,
            priors,
            init,
        } => {
            let fit_cfg = PalmFitConfig {
                family: *family,
                integral: *integral,
                objective: *objective,
                priors: priors.clone(),
                sampler,
                init: init.clone(),
            };
            let start = Instant::now();
            let base = match fit_palm(pattern, covariates, &fit_cfg) {
                Ok(c) => c,
                Err(e) => {
                    return spec
                        .adjustments
                        .iter()
                        .map(|a| attempt(*a, Err(CliError::Core(duplicate(&e)))))
                        .collect();
                }
            };
            let base_seconds = start.elapsed().as_secs_f64();
            let design = match GridPartition::new(*pattern.window(), cfg.calibration.sim_nx, cfg.calibration.sim_ny) {
                Ok(g) => BootstrapDesign::new(*pattern.window(), g, covariates.cloned()),
                Err(e) => {
                    let msg = e.to_string();
                    return spec
                        .adjustments
                        .iter()
                        .map(|a| attempt(*a, Err(CliError::Config(msg.clone()))))
                        .collect();
                }
            };
            let b = cfg.calibration.bootstraps;
            spec.adjustments
                .iter()
                .map(|&adj| {
                    let t0 = Instant::now();
                    let outcome = match adj {
                        Adjustment::None => {
                            let target = base.map_draws(|r| family.to_target(r));
                            finish(spec, adj, *family, base.clone(), target, alpha, base_seconds)
                        }
                        Adjustment::Lr => adjustment1_from_chain(pattern, &fit_cfg, &design, &base, b, calibration_seed)
                            .map_err(CliError::from)
                            .and_then(|(chain, est)| {
                                let target = chain.map_draws(|r| family.to_target(r));
                                let secs = base_seconds + t0.elapsed().as_secs_f64();
                                let mut run = finish(spec, adj, *family, chain, target, alpha, secs)?;
                                run.godambe = Some(est);
                                Ok(run)
                            }),
                        Adjustment::Gpc => gpc_from_chain(
                            &fit_cfg,
                            &design,
                            base.clone(),
                            b,
                            alpha,
                            &cfg.calibration.search(),
                            calibration_seed,
                        )
                        .map_err(CliError::from)
                        .and_then(|out| {
                            let secs = base_seconds + t0.elapsed().as_secs_f64();
                            let mut run = finish(spec, adj, *family, out.chain, out.calibrated, alpha, secs)?;
                            run.gpc = Some(out.result);
                            if cfg.calibration.keep_bootstrap_draws {
                                run.bootstrap_draws = Some(out.bootstrap_draws);
                            }
                            Ok(run)
                        }),
                    };
                    attempt(adj, outcome)
                })
                .collect()
        }
    }
}
