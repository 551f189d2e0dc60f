//! Subcommand implementations. Every command echoes its configuration to
//! `config.toml` in the output directory; wall-clock measurements go to
//! files whose names start with `timing` so the remaining outputs are
//! reproducible byte for byte.

use std::path::{Path, PathBuf};

use log::{info, warn};
use palm_core::calibration::{gpc_from_intervals, intervals_from_draws, rescale_draws, GpcResult};
use palm_core::models::{simulate_poisson, LgcpSimulator};
use palm_core::sampler::{effective_sample_size, summarize_draws, ParamSummary};
use palm_core::{
    rng, CovariateField, GridPartition, ModelFamily, ModelSpec, PointPattern, Simulator, Window,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{resolve, Adjustment, FitMethod, FitSpec, RunConfig, TruthSpec};
use crate::error::{CliError, Result};
use crate::io;
use crate::report::{aggregate, aggregate_timing, FailureRow, ReplicateRow, TimingRow};
use crate::run::{calibration_seed, pattern_seed, run_fit, sampler_seed, FitRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Study,
    EssBench,
    Calibrate,
}

/// Loads `config_path` and runs `command`, writing into `out`.
pub fn execute(command: Command, config_path: &Path, out: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let base = config_path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    run_command(command, &cfg, &base, out)
}

/// Runs `command` with relative data paths resolved against `base`.
pub fn run_command(command: Command, cfg: &RunConfig, base: &Path, out: &Path) -> Result<()> {
    io::create_dir(out)?;
    io::write_text(&out.join("config.toml"), &cfg.to_toml()?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", cfg.threads)))?;
    pool.install(|| match command {
        Command::Simulate => simulate(cfg, out),
        Command::Fit => fit(cfg, base, out),
        Command::Study => study(cfg, out),
        Command::EssBench => ess_bench(cfg, base, out),
        Command::Calibrate => calibrate(cfg, base, out),
    })
}

/// Draws patterns from the configured truth.
pub enum TruthSimulator {
    Poisson(f64, Window),
    Model(Simulator),
}

impl TruthSimulator {
    pub fn new(truth: &TruthSpec, window: Window, nx: usize, ny: usize) -> Result<Self> {
        Ok(match truth.model()? {
            ModelSpec::Poisson { lambda } => TruthSimulator::Poisson(lambda, window),
            ModelSpec::Lgcp(p) => {
                let grid = GridPartition::new(window, nx, ny).map_err(|e| CliError::Config(e.to_string()))?;
                TruthSimulator::Model(Simulator::Lgcp(LgcpSimulator::new(&p, None, grid)?))
            }
            ModelSpec::Thomas(p) => TruthSimulator::Model(Simulator::Thomas(p, window)),
            ModelSpec::Dpp(_) => return Err(CliError::Config("DPP patterns cannot be simulated".into())),
        })
    }

    pub fn sample(&self, seed: u64) -> Result<PointPattern> {
        let mut r = rng::from_seed(seed);
        Ok(match self {
            TruthSimulator::Poisson(lambda, w) => simulate_poisson(*lambda, w, &mut r)?,
            TruthSimulator::Model(s) => s.sample(&mut r)?,
        })
    }
}

fn truth_simulator(cfg: &RunConfig) -> Result<TruthSimulator> {
    TruthSimulator::new(&cfg.truth()?, cfg.window.to_window()?, cfg.simulation.nx, cfg.simulation.ny)
}

#[derive(Serialize)]
struct SeedRow {
    replicate: usize,
    seed: u64,
    points: usize,
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let sim = truth_simulator(cfg)?;
    let n = cfg.simulation.replicates;
    let patterns: Vec<Result<PointPattern>> = (0..n).into_par_iter().map(|r| sim.sample(pattern_seed(cfg.seed, r))).collect();
    let mut seeds = Vec::with_capacity(n);
    for (r, p) in patterns.into_iter().enumerate() {
        let p = p?;
        io::write_pattern(&out.join("patterns").join(format!("rep_{r:03}.csv")), &p)?;
        seeds.push(SeedRow {
            replicate: r,
            seed: pattern_seed(cfg.seed, r),
            points: p.len(),
        });
    }
    io::write_records(&out.join("seeds.csv"), &seeds)?;
    info!("wrote {n} patterns to {}", out.display());
    Ok(())
}

fn load_data(cfg: &RunConfig, base: &Path) -> Result<(PointPattern, Option<CovariateField>)> {
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs a [data] section".into()))?;
    let window = cfg.window.to_window()?;
    let pattern = io::read_pattern(&resolve(base, &data.pattern), window)?;
    let covariates = data
        .covariates
        .as_ref()
        .map(|p| io::read_covariates(&resolve(base, p)))
        .transpose()?;
    Ok((pattern, covariates))
}

/// Metadata stored beside `chain.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub label: String,
    pub adjustment: Adjustment,
    pub family: ModelFamily,
    pub method: String,
    pub names: Vec<String>,
    pub draws: usize,
    pub acceptance: Vec<f64>,
    pub scales: Vec<f64>,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub label: String,
    pub adjustment: Adjustment,
    pub alpha: f64,
    /// Learning rate the reported chain was sampled at.
    pub eta: f64,
    /// Per-parameter calibration factors (gpc only).
    pub scale_factors: Option<Vec<f64>>,
    pub params: Vec<ParamSummary>,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    label: &'a str,
    adjustment: &'a str,
    parameter: &'a str,
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    ess: f64,
}

#[derive(Serialize)]
struct FitTimingRow<'a> {
    label: &'a str,
    adjustment: &'a str,
    seconds: f64,
    parameter: &'a str,
    ess_per_second: f64,
}

fn write_fit_run(dir: &Path, spec: &FitSpec, run: &FitRun) -> Result<()> {
    let chain = &run.chain;
    io::write_draws(&dir.join("chain.csv"), &chain.names, &chain.draws)?;
    io::write_json(
        &dir.join("chain.json"),
        &ChainMeta {
            label: run.label.clone(),
            adjustment: run.adjustment,
            family: run.family,
            method: match spec.method {
                FitMethod::Palm { .. } => "palm".into(),
                FitMethod::Full { .. } => "full".into(),
            },
            names: chain.names.clone(),
            draws: chain.len(),
            acceptance: chain.acceptance.clone(),
            scales: chain.scales.clone(),
            eta: chain.eta,
            iterations: chain.iterations,
            burn_in: chain.burn_in,
            thin: chain.thin,
            seed: chain.seed,
        },
    )?;
    io::write_draws(&dir.join("draws.csv"), &run.natural_names, &run.natural)?;
    io::write_json(
        &dir.join("summary.json"),
        &FitSummary {
            label: run.label.clone(),
            adjustment: run.adjustment,
            alpha: run.summary.alpha,
            eta: chain.eta,
            scale_factors: run.gpc.as_ref().map(|g| g.eta.clone()),
            params: run.summary.params.clone(),
        },
    )?;
    if let Some(g) = &run.godambe {
        io::write_json(&dir.join("godambe.json"), g)?;
    }
    if let Some(g) = &run.gpc {
        io::write_json(&dir.join("gpc.json"), g)?;
        io::write_draws(&dir.join("calibrated.csv"), &run.family.target_names(), &run.target)?;
    }
    if let Some(bd) = &run.bootstrap_draws {
        write_bootstrap_draws(&dir.join("bootstrap_draws.csv"), &run.family.target_names(), bd)?;
    }
    Ok(())
}

fn write_bootstrap_draws(path: &Path, names: &[String], draws: &[Vec<Vec<f64>>]) -> Result<()> {
    let mut header = vec!["bootstrap".to_string()];
    header.extend(names.iter().cloned());
    let rows: Vec<Vec<f64>> = draws
        .iter()
        .enumerate()
        .flat_map(|(k, d)| {
            d.iter().map(move |r| {
                let mut v = vec![k as f64];
                v.extend_from_slice(r);
                v
            })
        })
        .collect();
    io::write_draws(path, &header, &rows)
}

fn read_bootstrap_draws(path: &Path) -> Result<Vec<Vec<Vec<f64>>>> {
    let (_, rows) = io::read_draws(path)?;
    let mut out: Vec<Vec<Vec<f64>>> = Vec::new();
    for r in rows {
        let k = r[0] as usize;
        if k == out.len() {
            out.push(Vec::new());
        } else if k + 1 != out.len() {
            return Err(CliError::Data(format!("{}: bootstrap index {k} out of order", path.display())));
        }
        out[k].push(r[1..].to_vec());
    }
    Ok(out)
}

fn fit(cfg: &RunConfig, base: &Path, out: &Path) -> Result<()> {
    cfg.require_fits()?;
    let (pattern, covariates) = load_data(cfg, base)?;
    info!("fitting {} points", pattern.len());
    let mut summary_rows = Vec::new();
    let mut timing_rows = Vec::new();
    let mut runs = Vec::new();
    for (i, spec) in cfg.fits.iter().enumerate() {
        for attempt in run_fit(
            &pattern,
            covariates.as_ref(),
            spec,
            cfg,
            sampler_seed(cfg.seed, 0, i),
            calibration_seed(cfg.seed, 0, i),
        ) {
            let run = attempt.outcome?;
            let dir = out.join("fits").join(&spec.label).join(run.adjustment.label());
            write_fit_run(&dir, spec, &run)?;
            runs.push(run);
        }
    }
    for run in &runs {
        let eps = run.ess_per_second();
        for (p, e) in run.summary.params.iter().zip(eps) {
            summary_rows.push(SummaryRow {
                label: &run.label,
                adjustment: run.adjustment.label(),
                parameter: &p.name,
                mean: p.mean,
                sd: p.sd,
                lower: p.lower,
                upper: p.upper,
                ess: p.ess,
            });
            timing_rows.push(FitTimingRow {
                label: &run.label,
                adjustment: run.adjustment.label(),
                seconds: run.seconds,
                parameter: &p.name,
                ess_per_second: e,
            });
        }
    }
    io::write_records(&out.join("summary.csv"), &summary_rows)?;
    io::write_records(&out.join("timing.csv"), &timing_rows)?;
    Ok(())
}

/// Natural-scale truth for each fit's family.
fn fit_truths(cfg: &RunConfig) -> Result<Vec<Vec<(String, f64)>>> {
    let model = cfg.truth()?.model()?;
    cfg.fits
        .iter()
        .map(|spec| {
            let family = spec.family(0);
            let theta = family.from_model(&model).map_err(|_| {
                CliError::Config(format!(
                    "fit '{}' ({} family) cannot be compared with the configured truth",
                    spec.label,
                    family.label()
                ))
            })?;
            Ok(family.natural_names().into_iter().zip(family.to_natural(&theta)).collect())
        })
        .collect()
}

struct ReplicateOutcome {
    rows: Vec<ReplicateRow>,
    failures: Vec<FailureRow>,
    timing: Vec<TimingRow>,
}

fn study(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.require_fits()?;
    let n = cfg.simulation.replicates;
    if n < 2 {
        return Err(CliError::Config(format!("a study needs at least 2 replicates, got {n}")));
    }
    let sim = truth_simulator(cfg)?;
    let truths = fit_truths(cfg)?;

    let outcomes: Vec<ReplicateOutcome> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut o = ReplicateOutcome {
                rows: Vec::new(),
                failures: Vec::new(),
                timing: Vec::new(),
            };
            let pattern = match sim.sample(pattern_seed(cfg.seed, r)) {
                Ok(p) => p,
                Err(e) => {
                    for spec in &cfg.fits {
                        for a in &spec.adjustments {
                            o.failures.push(FailureRow {
                                replicate: r,
                                label: spec.label.clone(),
                                adjustment: a.label().into(),
                                error: e.to_string(),
                            });
                        }
                    }
                    return o;
                }
            };
            for (i, spec) in cfg.fits.iter().enumerate() {
                let attempts = run_fit(
                    &pattern,
                    None,
                    spec,
                    cfg,
                    sampler_seed(cfg.seed, r, i),
                    calibration_seed(cfg.seed, r, i),
                );
                for a in attempts {
                    match a.outcome {
                        Ok(run) => record_run(&mut o, r, &run, &truths[i]),
                        Err(e) => {
                            warn!("replicate {r}, {} ({}): {e}", a.label, a.adjustment.label());
                            o.failures.push(FailureRow {
                                replicate: r,
                                label: a.label,
                                adjustment: a.adjustment.label().into(),
                                error: e.to_string(),
                            });
                        }
                    }
                }
            }
            info!("replicate {r} done");
            o
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut timing = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        failures.extend(o.failures);
        timing.extend(o.timing);
    }
    let order: Vec<_> = cfg
        .fits
        .iter()
        .zip(&truths)
        .flat_map(|(spec, t)| {
            spec.adjustments
                .iter()
                .map(move |a| (spec.label.clone(), spec.radius(), a.label().to_string(), t.clone()))
        })
        .collect();
    let report = aggregate(&rows, &failures, &order);
    io::write_records(&out.join("replicates.csv"), &rows)?;
    io::write_records(&out.join("report.csv"), &report)?;
    io::write_text(&out.join("failures.csv"), "")?;
    if !failures.is_empty() {
        io::write_records(&out.join("failures.csv"), &failures)?;
    }
    io::write_records(&out.join("timing.csv"), &timing)?;
    io::write_records(&out.join("timing_report.csv"), &aggregate_timing(&timing, &report))?;
    Ok(())
}

fn record_run(o: &mut ReplicateOutcome, r: usize, run: &FitRun, truth: &[(String, f64)]) {
    let eps = run.ess_per_second();
    for (k, (p, (name, t))) in run.summary.params.iter().zip(truth).enumerate() {
        let eta = match (&run.gpc, &run.godambe) {
            (Some(g), _) => g.eta[k],
            (None, Some(g)) => g.eta,
            _ => 1.0,
        };
        o.rows.push(ReplicateRow {
            replicate: r,
            label: run.label.clone(),
            radius: run.radius,
            adjustment: run.adjustment.label().into(),
            parameter: name.clone(),
            truth: *t,
            mean: p.mean,
            lower: p.lower,
            upper: p.upper,
            covered: p.covers(*t),
            eta,
            ess: p.ess,
        });
        o.timing.push(TimingRow {
            replicate: r,
            label: run.label.clone(),
            adjustment: run.adjustment.label().into(),
            seconds: run.seconds,
            parameter: name.clone(),
            ess_per_second: eps[k],
        });
    }
}

#[derive(Serialize)]
struct EssRow<'a> {
    label: &'a str,
    parameter: &'a str,
    draws: usize,
    ess: f64,
    degenerate: bool,
}

#[derive(Serialize)]
struct EssTimingRow<'a> {
    label: &'a str,
    parameter: &'a str,
    seconds: f64,
    ess_per_second: f64,
}

/// ESS is computed on the target scale, where PL and FL chains share
/// coordinates.
fn ess_bench(cfg: &RunConfig, base: &Path, out: &Path) -> Result<()> {
    cfg.require_fits()?;
    let (pattern, covariates) = if cfg.data.is_some() {
        load_data(cfg, base)?
    } else {
        (truth_simulator(cfg)?.sample(pattern_seed(cfg.seed, 0))?, None)
    };
    io::write_pattern(&out.join("pattern.csv"), &pattern)?;
    let mut runs = Vec::new();
    for (i, spec) in cfg.fits.iter().enumerate() {
        let mut spec = spec.clone();
        spec.adjustments = vec![Adjustment::None];
        for a in run_fit(&pattern, covariates.as_ref(), &spec, cfg, sampler_seed(cfg.seed, 0, i), 0) {
            runs.push(a.outcome?);
        }
    }
    let mut ess_rows = Vec::new();
    let mut timing_rows = Vec::new();
    let names: Vec<Vec<String>> = runs.iter().map(|r| r.family.target_names()).collect();
    for (run, names) in runs.iter().zip(&names) {
        for (k, name) in names.iter().enumerate() {
            let col: Vec<f64> = run.target.iter().map(|r| r[k]).collect();
            let ess = effective_sample_size(&col)?;
            ess_rows.push(EssRow {
                label: &run.label,
                parameter: name,
                draws: col.len(),
                ess: ess.value,
                degenerate: ess.degenerate,
            });
            timing_rows.push(EssTimingRow {
                label: &run.label,
                parameter: name,
                seconds: run.seconds,
                ess_per_second: ess.value / run.seconds,
            });
        }
    }
    io::write_records(&out.join("ess.csv"), &ess_rows)?;
    io::write_records(&out.join("timing_ess.csv"), &timing_rows)?;
    Ok(())
}

/// Recomputes GPC scale factors from a stored fit, optionally at a new
/// credible level when the bootstrap draws were kept.
fn calibrate(cfg: &RunConfig, base: &Path, out: &Path) -> Result<()> {
    let spec = cfg
        .recalibrate
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs a [recalibrate] section".into()))?;
    let dir = resolve(base, &spec.run);
    let meta: ChainMeta = io::read_json(&dir.join("chain.json"))?;
    let stored: GpcResult = io::read_json(&dir.join("gpc.json"))?;
    let (_, draws) = io::read_draws(&dir.join("chain.csv"))?;
    let family = meta.family;
    let alpha = cfg.calibration.alpha;
    let intervals = if alpha == stored.alpha {
        stored.intervals.clone()
    } else {
        let path = dir.join("bootstrap_draws.csv");
        if !path.exists() {
            return Err(CliError::Config(format!(
                "stored intervals are at alpha = {}; recalibrating at {alpha} needs {}",
                stored.alpha,
                path.display()
            )));
        }
        read_bootstrap_draws(&path)?
            .iter()
            .map(|d| intervals_from_draws(d, alpha))
            .collect()
    };
    let (eta, before, after) = gpc_from_intervals(&stored.theta_hat, &intervals, alpha, &cfg.calibration.search())?;
    let target: Vec<Vec<f64>> = draws.iter().map(|r| family.to_target(r)).collect();
    let calibrated = rescale_draws(&target, &stored.theta_hat, &eta)?;
    let natural: Vec<Vec<f64>> = calibrated.iter().map(|r| family.target_to_natural(r)).collect();
    let summary = summarize_draws(&natural, &family.natural_names(), alpha)?;
    let result = GpcResult {
        eta: eta.clone(),
        coverage_before: before,
        coverage_after: after,
        alpha,
        intervals,
        ..stored
    };
    io::write_json(&out.join("gpc.json"), &result)?;
    io::write_draws(&out.join("calibrated.csv"), &family.target_names(), &calibrated)?;
    io::write_json(
        &out.join("summary.json"),
        &FitSummary {
            label: meta.label,
            adjustment: Adjustment::Gpc,
            alpha,
            eta: meta.eta,
            scale_factors: Some(eta),
            params: summary.params,
        },
    )?;
    Ok(())
}
