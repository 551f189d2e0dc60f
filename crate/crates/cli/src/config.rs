//! TOML run configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use palm_core::calibration::GpcSearch;
use palm_core::{
    IntegralConfig, InitStrategy, LgcpParams, ModelFamily, ModelSpec, ObjectiveOptions, PriorTemplate,
    SamplerConfig, ThomasParams, Window,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub window: WindowSpec,
    pub truth: Option<TruthSpec>,
    #[serde(default)]
    pub simulation: SimulationSpec,
    pub data: Option<DataSpec>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    #[serde(default, rename = "fit")]
    pub fits: Vec<FitSpec>,
    pub recalibrate: Option<RecalibrateSpec>,
}

fn default_threads() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }
}

impl WindowSpec {
    pub fn to_window(&self) -> Result<Window> {
        Window::new(self.x_min, self.x_max, self.y_min, self.y_max).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Generating model for simulation studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TruthSpec {
    Poisson { lambda: f64 },
    Lgcp { lambda: f64, sigma2: f64, phi: f64 },
    Thomas { mu: f64, nu: f64, sigma2: f64 },
}

impl TruthSpec {
    pub fn model(&self) -> Result<ModelSpec> {
        let m = match *self {
            TruthSpec::Poisson { lambda } => {
                if !(lambda > 0.0) {
                    return Err(CliError::Config(format!("truth lambda must be positive, got {lambda}")));
                }
                ModelSpec::Poisson { lambda }
            }
            TruthSpec::Lgcp { lambda, sigma2, phi } => ModelSpec::Lgcp(LgcpParams::from_intensity(lambda, sigma2, phi)?),
            TruthSpec::Thomas { mu, nu, sigma2 } => ModelSpec::Thomas(ThomasParams::new(mu, nu, sigma2)?),
        };
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub replicates: usize,
    /// LGCP simulation grid.
    pub nx: usize,
    pub ny: usize,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            replicates: 30,
            nx: 32,
            ny: 32,
        }
    }
}

/// An observed pattern, with optional covariate rasters. Relative paths are
/// resolved against the configuration file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub pattern: PathBuf,
    pub covariates: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjustment {
    None,
    /// Adjustment 1: scalar learning rate.
    Lr,
    /// Adjustment 2: generalized posterior calibration.
    Gpc,
}

impl Adjustment {
    pub fn label(&self) -> &'static str {
        match self {
            Adjustment::None => "none",
            Adjustment::Lr => "lr",
            Adjustment::Gpc => "gpc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum FitMethod {
    Palm {
        family: ModelFamily,
        integral: IntegralConfig,
        #[serde(default)]
        objective: ObjectiveOptions,
        priors: Vec<PriorTemplate>,
        #[serde(default)]
        init: InitStrategy,
    },
    /// Grid-based full likelihood; priors cover `[β…, log σ², log φ]`.
    Full {
        nx: usize,
        ny: usize,
        priors: Vec<PriorTemplate>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub label: String,
    #[serde(flatten)]
    pub method: FitMethod,
    #[serde(default = "default_adjustments")]
    pub adjustments: Vec<Adjustment>,
}

fn default_adjustments() -> Vec<Adjustment> {
    vec![Adjustment::None]
}

impl FitSpec {
    pub fn radius(&self) -> Option<f64> {
        match &self.method {
            FitMethod::Palm { integral, .. } => Some(integral.radius),
            FitMethod::Full { .. } => None,
        }
    }

    /// Family whose natural/target coordinates the fit reports in.
    pub fn family(&self, n_covariates: usize) -> ModelFamily {
        match &self.method {
            FitMethod::Palm { family, .. } => *family,
            FitMethod::Full { .. } if n_covariates > 0 => ModelFamily::LgcpCovariates { n_covariates },
            FitMethod::Full { .. } => ModelFamily::LgcpConstant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSpec {
    pub bootstraps: usize,
    /// Credible level is `1 − alpha` for summaries and calibration alike.
    pub alpha: f64,
    pub eta_max: f64,
    pub tolerance: f64,
    /// LGCP simulation grid for bootstrap patterns.
    pub sim_nx: usize,
    pub sim_ny: usize,
    /// Write every bootstrap fit's draws next to the calibrated chain.
    pub keep_bootstrap_draws: bool,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            bootstraps: 100,
            alpha: 0.05,
            eta_max: 50.0,
            tolerance: 1e-2,
            sim_nx: 32,
            sim_ny: 32,
            keep_bootstrap_draws: false,
        }
    }
}

impl CalibrationSpec {
    pub fn search(&self) -> GpcSearch {
        GpcSearch {
            eta_max: self.eta_max,
            tolerance: self.tolerance,
        }
    }
}

/// Standalone recalibration of a stored GPC fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecalibrateSpec {
    /// Output directory of a `fit` run with a GPC adjustment.
    pub run: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `path`; relative data paths are made relative to its directory
    /// when the configuration is used, not rewritten in the echo.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialise configuration: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        self.window.to_window()?;
        self.sampler.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let c = &self.calibration;
        if !(c.alpha > 0.0 && c.alpha < 0.5) {
            return Err(CliError::Config(format!("calibration.alpha must lie in (0, 0.5), got {}", c.alpha)));
        }
        if !(c.eta_max > 1.0) || !(c.tolerance > 0.0) {
            return Err(CliError::Config("calibration needs eta_max > 1 and tolerance > 0".into()));
        }
        let mut labels = std::collections::BTreeSet::new();
        for f in &self.fits {
            if !labels.insert(f.label.as_str()) {
                return Err(CliError::Config(format!("duplicate fit label '{}'", f.label)));
            }
            if f.label.is_empty() || f.label.contains(['/', '\\']) {
                return Err(CliError::Config(format!("fit label '{}' is not a valid file name", f.label)));
            }
            if f.adjustments.is_empty() {
                return Err(CliError::Config(format!("fit '{}' lists no adjustments", f.label)));
            }
            match &f.method {
                FitMethod::Palm { family, priors, .. } => {
                    if priors.len() != family.dim() {
                        return Err(CliError::Config(format!(
                            "fit '{}': {} priors for a {}-parameter family",
                            f.label,
                            priors.len(),
                            family.dim()
                        )));
                    }
                }
                FitMethod::Full { nx, ny, .. } => {
                    if *nx == 0 || *ny == 0 {
                        return Err(CliError::Config(format!("fit '{}': empty grid", f.label)));
                    }
                    if f.adjustments.iter().any(|a| *a != Adjustment::None) {
                        return Err(CliError::Config(format!(
                            "fit '{}': full-likelihood fits take no adjustment",
                            f.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn truth(&self) -> Result<TruthSpec> {
        self.truth
            .ok_or_else(|| CliError::Config("this command needs a [truth] section".into()))
    }

    pub fn require_fits(&self) -> Result<()> {
        if self.fits.is_empty() {
            return Err(CliError::Config("this command needs at least one [[fit]] section".into()));
        }
        Ok(())
    }
}

/// Resolves `p` against `base` unless it is absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LGCP: &str = r#"
seed = 7

[truth]
model = "lgcp"
lambda = 300.0
sigma2 = 1.0
phi = 0.1

[sampler]
iterations = 2000
burn_in = 200
thin = 2

[[fit]]
label = "PLE_0.2"
method = "palm"
family = { kind = "lgcp-constant" }
integral = { radius = 0.2, backend = { kind = "radial", panels = 16 }, edge = "clip-to-window" }
priors = [
  { kind = "empirical-normal", sd = 10.0 },
  { kind = "normal", mean = 0.0, sd = 10.0 },
  { kind = "uniform", lo = -3.0, hi = -1.6 },
]
adjustments = ["none", "gpc"]

[[fit]]
label = "FL"
method = "full"
nx = 16
ny = 16
priors = [
  { kind = "normal", mean = 0.0, sd = 31.6 },
  { kind = "normal", mean = 0.0, sd = 10.0 },
  { kind = "uniform", lo = -3.0, hi = -1.6 },
]
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml(LGCP).unwrap();
        assert_eq!(cfg.fits.len(), 2);
        assert_eq!(cfg.fits[0].adjustments, vec![Adjustment::None, Adjustment::Gpc]);
        assert_eq!(cfg.fits[1].adjustments, vec![Adjustment::None]);
        assert_eq!(cfg.fits[0].radius(), Some(0.2));
        assert_eq!(cfg.calibration.bootstraps, 100);
        let echo = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&echo).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let dup = LGCP.replace("label = \"FL\"", "label = \"PLE_0.2\"");
        assert!(matches!(RunConfig::from_toml(&dup), Err(CliError::Config(_))));
        let short = LGCP.replace("  { kind = \"empirical-normal\", sd = 10.0 },\n", "");
        assert!(RunConfig::from_toml(&short).is_err());
        assert!(RunConfig::from_toml("seed = 1\nbogus = 2\n").is_err());
        let adjusted_fl = LGCP.replace("ny = 16\n", "ny = 16\nadjustments = [\"lr\"]\n");
        assert!(RunConfig::from_toml(&adjusted_fl).is_err());
    }
}
