use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointPattern;
use crate::palm::homogeneous_intensity_mle;

/// Prior on one transformed coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Prior {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Normal prior on `λ = exp(θ)` itself; the density on θ carries the
    /// Jacobian `exp(θ)`.
    EmpiricalNormal { mean: f64, sd: f64 },
}

fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln()
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Prior::Normal { mean, sd } | Prior::EmpiricalNormal { mean, sd } => {
                if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
                    return Err(Error::invalid(format!("normal prior needs finite mean and sd > 0, got ({mean}, {sd})")));
                }
            }
            Prior::Uniform { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::invalid(format!("uniform prior needs lo < hi, got ({lo}, {hi})")));
                }
            }
        }
        Ok(())
    }

    pub fn log_density(&self, theta: f64) -> f64 {
        match *self {
            Prior::Normal { mean, sd } => normal_log_pdf(theta, mean, sd),
            Prior::Uniform { lo, hi } => {
                if (lo..=hi).contains(&theta) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::EmpiricalNormal { mean, sd } => normal_log_pdf(theta.exp(), mean, sd) + theta,
        }
    }

    /// A central point of the prior on the transformed scale.
    pub fn center(&self) -> f64 {
        match *self {
            Prior::Normal { mean, .. } => mean,
            Prior::Uniform { lo, hi } => 0.5 * (lo + hi),
            Prior::EmpiricalNormal { mean, sd } => mean.max(1e-3 * sd).ln(),
        }
    }
}

/// Prior as written in a configuration: the empirical prior's mean is
/// filled in from the pattern being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorTemplate {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    EmpiricalNormal { sd: f64 },
}

impl PriorTemplate {
    pub fn resolve(&self, pattern: &PointPattern) -> Prior {
        match *self {
            PriorTemplate::Normal { mean, sd } => Prior::Normal { mean, sd },
            PriorTemplate::Uniform { lo, hi } => Prior::Uniform { lo, hi },
            PriorTemplate::EmpiricalNormal { sd } => Prior::EmpiricalNormal {
                mean: homogeneous_intensity_mle(pattern),
                sd,
            },
        }
    }
}

/// Independent priors over all transformed coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    names: Vec<String>,
    priors: Vec<Prior>,
}

impl PriorSpec {
    pub fn new(names: Vec<String>, priors: Vec<Prior>) -> Result<Self> {
        if names.len() != priors.len() {
            return Err(Error::invalid("one prior per parameter required"));
        }
        for p in &priors {
            p.validate()?;
        }
        Ok(Self { names, priors })
    }

    pub fn from_templates(names: Vec<String>, templates: &[PriorTemplate], pattern: &PointPattern) -> Result<Self> {
        Self::new(names, templates.iter().map(|t| t.resolve(pattern)).collect())
    }

    pub fn dim(&self) -> usize {
        self.priors.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn priors(&self) -> &[Prior] {
        &self.priors
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        let mut total = 0.0;
        for (p, &t) in self.priors.iter().zip(theta) {
            let v = p.log_density(t);
            if v == f64::NEG_INFINITY || v.is_nan() {
                return f64::NEG_INFINITY;
            }
            total += v;
        }
        total
    }

    pub fn center(&self) -> Vec<f64> {
        self.priors.iter().map(Prior::center).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Window};
    use crate::numerics::integrate_adaptive;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_support() {
        let p = Prior::Uniform { lo: -3.0, hi: -1.6 };
        assert_eq!(p.log_density(-1.5), f64::NEG_INFINITY);
        assert_eq!(p.log_density(-3.1), f64::NEG_INFINITY);
        assert_relative_eq!(p.log_density(-2.0), -(1.4f64).ln());
    }

    #[test]
    fn empirical_prior_integrates_to_one_on_log_scale() {
        let p = Prior::EmpiricalNormal { mean: 300.0, sd: 10.0 };
        let total = integrate_adaptive(|t| p.log_density(t).exp(), 5.0, 6.4, 1e-10);
        assert_relative_eq!(total, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn empirical_template_uses_point_density() {
        let w = Window::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let pat = PointPattern::new(vec![Point::new(0.5, 0.5); 10], w).unwrap();
        assert_eq!(
            PriorTemplate::EmpiricalNormal { sd: 1.0 }.resolve(&pat),
            Prior::EmpiricalNormal { mean: 5.0, sd: 1.0 }
        );
    }

    #[test]
    fn spec_rejects_bad_priors() {
        assert!(PriorSpec::new(vec!["a".into()], vec![Prior::Uniform { lo: 1.0, hi: 1.0 }]).is_err());
        assert!(PriorSpec::new(vec!["a".into()], vec![Prior::Normal { mean: 0.0, sd: 0.0 }]).is_err());
        assert!(PriorSpec::new(vec![], vec![Prior::Normal { mean: 0.0, sd: 1.0 }]).is_err());
    }
}
