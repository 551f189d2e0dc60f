//! Parameterisations of the fitted model families.
//!
//! Each family has three coordinate systems:
//!
//! * **sampled**: where the random walk moves (`log λ` for stationary
//!   families so the empirical prior can act on λ directly);
//! * **target**: unconstrained coordinates of the quantities of interest,
//!   used for calibration (`β₀` recovered from `log λ − σ²/2`, `log ν` from
//!   `log λ − log μ`);
//! * **natural**: reported values (`β₀, σ², φ` or `μ, ν, σ²`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridPartition, PointPattern, Window};
use crate::models::{
    simulate_thomas, CovariateField, LgcpParams, LgcpSimulator, ThomasParams,
};
use crate::palm::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelFamily {
    /// Constant-mean LGCP sampled on `[log λ, log σ², log φ]`.
    LgcpConstant,
    /// Thomas process sampled on `[log λ, log μ, log σ²]`.
    Thomas,
    /// LGCP with log-linear covariates, sampled on `[β₀, …, β_p, log σ², log φ]`.
    LgcpCovariates { n_covariates: usize },
}

impl ModelFamily {
    pub fn dim(&self) -> usize {
        match self {
            ModelFamily::LgcpConstant | ModelFamily::Thomas => 3,
            ModelFamily::LgcpCovariates { n_covariates } => n_covariates + 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelFamily::LgcpConstant => "lgcp",
            ModelFamily::Thomas => "thomas",
            ModelFamily::LgcpCovariates { .. } => "lgcp-covariates",
        }
    }

    /// Whether the first sampled coordinate is `log λ`.
    pub fn samples_log_intensity(&self) -> bool {
        !matches!(self, ModelFamily::LgcpCovariates { .. })
    }

    fn betas(&self) -> Vec<String> {
        match self {
            ModelFamily::LgcpCovariates { n_covariates } => (0..=*n_covariates).map(|k| format!("beta{k}")).collect(),
            _ => vec!["beta0".into()],
        }
    }

    pub fn sampled_names(&self) -> Vec<String> {
        match self {
            ModelFamily::LgcpConstant => names(&["log_lambda", "log_sigma2", "log_phi"]),
            ModelFamily::Thomas => names(&["log_lambda", "log_mu", "log_sigma2"]),
            ModelFamily::LgcpCovariates { .. } => {
                let mut v = self.betas();
                v.extend(names(&["log_sigma2", "log_phi"]));
                v
            }
        }
    }

    pub fn target_names(&self) -> Vec<String> {
        match self {
            ModelFamily::LgcpConstant => names(&["beta0", "log_sigma2", "log_phi"]),
            ModelFamily::Thomas => names(&["log_mu", "log_nu", "log_sigma2"]),
            ModelFamily::LgcpCovariates { .. } => self.sampled_names(),
        }
    }

    pub fn natural_names(&self) -> Vec<String> {
        match self {
            ModelFamily::Thomas => names(&["mu", "nu", "sigma2"]),
            _ => {
                let mut v = self.betas();
                v.extend(names(&["sigma2", "phi"]));
                v
            }
        }
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::invalid(format!(
                "{} family has {} parameters, got {}",
                self.label(),
                self.dim(),
                theta.len()
            )));
        }
        Ok(())
    }

    /// Model at a sampled-scale point; `None` when the point maps outside
    /// the parameter space (overflow, zero variance, …).
    pub fn to_model(&self, theta: &[f64]) -> Option<ModelSpec> {
        if theta.len() != self.dim() || theta.iter().any(|v| !v.is_finite()) {
            return None;
        }
        match self {
            ModelFamily::LgcpConstant => {
                let sigma2 = theta[1].exp();
                let beta0 = theta[0] - 0.5 * sigma2;
                LgcpParams::new(vec![beta0], sigma2, theta[2].exp())
                    .ok()
                    .filter(|p| p.sigma2 > 0.0 && p.phi.is_finite() && beta0.is_finite())
                    .map(ModelSpec::Lgcp)
            }
            ModelFamily::Thomas => {
                let mu = theta[1].exp();
                let nu = (theta[0] - theta[1]).exp();
                ThomasParams::new(mu, nu, theta[2].exp())
                    .ok()
                    .filter(|p| p.mu.is_finite() && p.nu > 0.0 && p.nu.is_finite() && p.sigma2.is_finite())
                    .map(ModelSpec::Thomas)
            }
            ModelFamily::LgcpCovariates { n_covariates } => {
                let p = n_covariates + 1;
                let sigma2 = theta[p].exp();
                LgcpParams::new(theta[..p].to_vec(), sigma2, theta[p + 1].exp())
                    .ok()
                    .filter(|m| m.sigma2 > 0.0 && m.phi.is_finite())
                    .map(ModelSpec::Lgcp)
            }
        }
    }

    pub fn to_target(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            ModelFamily::LgcpConstant => vec![theta[0] - 0.5 * theta[1].exp(), theta[1], theta[2]],
            ModelFamily::Thomas => vec![theta[1], theta[0] - theta[1], theta[2]],
            ModelFamily::LgcpCovariates { .. } => theta.to_vec(),
        }
    }

    pub fn from_target(&self, target: &[f64]) -> Vec<f64> {
        match self {
            ModelFamily::LgcpConstant => vec![target[0] + 0.5 * target[1].exp(), target[1], target[2]],
            ModelFamily::Thomas => vec![target[0] + target[1], target[0], target[2]],
            ModelFamily::LgcpCovariates { .. } => target.to_vec(),
        }
    }

    pub fn target_to_natural(&self, target: &[f64]) -> Vec<f64> {
        match self {
            ModelFamily::LgcpConstant => vec![target[0], target[1].exp(), target[2].exp()],
            ModelFamily::Thomas => target.iter().map(|v| v.exp()).collect(),
            ModelFamily::LgcpCovariates { n_covariates } => {
                let p = n_covariates + 1;
                let mut v = target[..p].to_vec();
                v.push(target[p].exp());
                v.push(target[p + 1].exp());
                v
            }
        }
    }

    pub fn natural_to_target(&self, natural: &[f64]) -> Vec<f64> {
        match self {
            ModelFamily::LgcpConstant => vec![natural[0], natural[1].ln(), natural[2].ln()],
            ModelFamily::Thomas => natural.iter().map(|v| v.ln()).collect(),
            ModelFamily::LgcpCovariates { n_covariates } => {
                let p = n_covariates + 1;
                let mut v = natural[..p].to_vec();
                v.push(natural[p].ln());
                v.push(natural[p + 1].ln());
                v
            }
        }
    }

    pub fn to_natural(&self, theta: &[f64]) -> Vec<f64> {
        self.target_to_natural(&self.to_target(theta))
    }

    /// Sampled-scale coordinates of a model of this family.
    pub fn from_model(&self, model: &ModelSpec) -> Result<Vec<f64>> {
        let theta = match (self, model) {
            (ModelFamily::LgcpConstant, ModelSpec::Lgcp(p)) if !p.has_covariates() => {
                vec![p.intensity().ln(), p.sigma2.ln(), p.phi.ln()]
            }
            (ModelFamily::Thomas, ModelSpec::Thomas(p)) => vec![p.intensity().ln(), p.mu.ln(), p.sigma2.ln()],
            (ModelFamily::LgcpCovariates { n_covariates }, ModelSpec::Lgcp(p)) if p.beta.len() == n_covariates + 1 => {
                let mut v = p.beta.clone();
                v.push(p.sigma2.ln());
                v.push(p.phi.ln());
                v
            }
            _ => return Err(Error::invalid(format!("model does not belong to the {} family", self.label()))),
        };
        self.check(&theta)?;
        Ok(theta)
    }

    /// A simulator at a sampled-scale point. `grid` is the LGCP simulation
    /// grid and must tile `window`.
    pub fn simulator(
        &self,
        theta: &[f64],
        window: &Window,
        grid: &GridPartition,
        covariates: Option<&CovariateField>,
    ) -> Result<Simulator> {
        self.check(theta)?;
        let model = self
            .to_model(theta)
            .ok_or_else(|| Error::invalid(format!("parameters {theta:?} are outside the model space")))?;
        match model {
            ModelSpec::Lgcp(p) => {
                if !grid.window().approx_eq(window) {
                    return Err(Error::invalid("simulation grid does not tile the window"));
                }
                Ok(Simulator::Lgcp(LgcpSimulator::new(&p, covariates, grid.clone())?))
            }
            ModelSpec::Thomas(p) => Ok(Simulator::Thomas(p, *window)),
            _ => unreachable!("families map to LGCP or Thomas models"),
        }
    }
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Draws patterns at fixed parameters.
#[derive(Debug, Clone)]
pub enum Simulator {
    Lgcp(LgcpSimulator),
    Thomas(ThomasParams, Window),
}

impl Simulator {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PointPattern> {
        match self {
            Simulator::Lgcp(s) => Ok(s.sample(rng)),
            Simulator::Thomas(p, w) => simulate_thomas(p, w, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lgcp_round_trips() {
        let f = ModelFamily::LgcpConstant;
        let m = ModelSpec::Lgcp(LgcpParams::from_intensity(300.0, 1.0, 0.1).unwrap());
        let theta = f.from_model(&m).unwrap();
        assert_relative_eq!(theta[0], 300f64.ln(), max_relative = 1e-14);
        let nat = f.to_natural(&theta);
        assert_relative_eq!(nat[0], 300f64.ln() - 0.5, max_relative = 1e-14);
        assert_relative_eq!(nat[1], 1.0, max_relative = 1e-14);
        assert_relative_eq!(nat[2], 0.1, max_relative = 1e-14);
        let back = f.from_target(&f.to_target(&theta));
        for (a, b) in back.iter().zip(&theta) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
        let ModelSpec::Lgcp(p) = f.to_model(&theta).unwrap() else { panic!() };
        assert_relative_eq!(p.beta[0], 300f64.ln() - 0.5, max_relative = 1e-14);
        assert_relative_eq!(p.phi, 0.1, max_relative = 1e-14);
    }

    #[test]
    fn thomas_round_trips() {
        let f = ModelFamily::Thomas;
        let m = ModelSpec::Thomas(ThomasParams::new(10.0, 30.0, 0.0025).unwrap());
        let theta = f.from_model(&m).unwrap();
        let nat = f.to_natural(&theta);
        assert_relative_eq!(nat[0], 10.0, max_relative = 1e-12);
        assert_relative_eq!(nat[1], 30.0, max_relative = 1e-12);
        assert_relative_eq!(nat[2], 0.0025, max_relative = 1e-12);
    }

    #[test]
    fn covariate_family_layout() {
        let f = ModelFamily::LgcpCovariates { n_covariates: 2 };
        assert_eq!(f.dim(), 5);
        assert_eq!(f.natural_names(), vec!["beta0", "beta1", "beta2", "sigma2", "phi"]);
        let nat = f.to_natural(&[-8.0, 0.02, 4.0, 0.0, 4.0]);
        assert_eq!(nat[3], 1.0);
        assert_relative_eq!(nat[4], 4f64.exp());
    }

    #[test]
    fn overflow_maps_to_none() {
        assert!(ModelFamily::Thomas.to_model(&[5.0, 1e3, -6.0]).is_none());
        assert!(ModelFamily::LgcpConstant.to_model(&[5.0, f64::NAN, -2.0]).is_none());
        assert!(ModelFamily::LgcpConstant.to_model(&[5.0, -800.0, -2.0]).is_none());
    }
}
