//! The weighted log Palm likelihood
//!
//! ```text
//! ℓ_P(θ) = Σ_{i≠j, ‖sᵢ−sⱼ‖<R} log λ_p(sᵢ | sⱼ; θ)  −  Σⱼ ∫_{D ∩ b(sⱼ,R)} λ_p(u | sⱼ; θ) du
//! ```
//!
//! [`log_palm_likelihood`] is the direct, unoptimised evaluation: it visits
//! every ordered pair and integrates around every point. [`PalmObjective`]
//! precomputes everything that does not depend on θ and is what samplers
//! call in their inner loop.

mod objective;
mod score;

pub use objective::{ObjectiveOptions, PalmObjective};
pub use score::{central_difference, palm_score_fd, FD_RELATIVE_STEP};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PairIndex, Point, PointPattern, Window};
use crate::models::{
    lgcp_palm, thomas_palm, CovariateField, ExponentialKernel, LgcpParams, ThomasParams,
};
use crate::numerics::{composite_gauss_legendre, integrate_adaptive};

/// A fully specified point-process model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Poisson { lambda: f64 },
    Lgcp(LgcpParams),
    Thomas(ThomasParams),
    Dpp(ExponentialKernel),
}

impl ModelSpec {
    /// Whether the Palm intensity depends on the separation only.
    pub fn is_stationary(&self) -> bool {
        match self {
            ModelSpec::Lgcp(p) => !p.has_covariates(),
            _ => true,
        }
    }

    /// Number of regression coefficients (1 for stationary models).
    pub fn n_coefficients(&self) -> usize {
        match self {
            ModelSpec::Lgcp(p) => p.beta.len(),
            _ => 1,
        }
    }

    /// Palm intensity as a function of separation. Only meaningful for
    /// stationary models; covariate slopes are ignored.
    #[inline]
    pub fn radial(&self, u: f64) -> f64 {
        match self {
            ModelSpec::Poisson { lambda } => *lambda,
            ModelSpec::Lgcp(p) => lgcp_palm(p.beta[0], p.sigma2, p.phi, u),
            ModelSpec::Thomas(p) => thomas_palm(p, u),
            ModelSpec::Dpp(k) => k.palm_at(u),
        }
    }

    /// Palm intensity at a target location with design vector `x` at
    /// separation `u` from the conditioning point.
    #[inline]
    pub fn palm_at(&self, x: &[f64], u: f64) -> f64 {
        match self {
            ModelSpec::Lgcp(p) => lgcp_palm(p.linear_predictor(x), p.sigma2, p.phi, u),
            _ => self.radial(u),
        }
    }

    pub(crate) fn check_covariates(&self, covariates: Option<&CovariateField>) -> Result<()> {
        let needed = self.n_coefficients() - 1;
        match covariates {
            _ if needed == 0 => Ok(()),
            None => Err(Error::invalid("model has covariate slopes but no covariate field was given")),
            Some(c) if c.n_covariates() != needed => Err(Error::invalid(format!(
                "model has {needed} slopes, covariate field has {} layers",
                c.n_covariates()
            ))),
            Some(_) => Ok(()),
        }
    }
}

/// How boundary effects enter the integral term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgePolicy {
    /// Integrate over the full disc `b(sⱼ, R)`.
    IgnoreEdge,
    /// Integrate over `D ∩ b(sⱼ, R)`.
    ClipToWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IntegralBackend {
    /// Closed-form (or 1-D adaptive) disc integral, stationary models with
    /// `IgnoreEdge` only.
    AnalyticDisc,
    /// Midpoint rule on an `m × m` sub-grid of each disc's bounding box.
    Quadrature { m: usize },
    /// Stationary models only: `∫₀^R λ_p(r) ℓⱼ(r) dr` where `ℓⱼ(r)` is the
    /// length of the circle of radius `r` around `sⱼ` inside the window,
    /// integrated by composite Gauss–Legendre with `panels` 8-point panels.
    Radial { panels: usize },
}

pub const RADIAL_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralConfig {
    pub radius: f64,
    #[serde(default = "default_backend")]
    pub backend: IntegralBackend,
    #[serde(default = "default_edge")]
    pub edge: EdgePolicy,
}

fn default_backend() -> IntegralBackend {
    IntegralBackend::Radial { panels: 16 }
}

fn default_edge() -> EdgePolicy {
    EdgePolicy::ClipToWindow
}

impl IntegralConfig {
    /// Edge-corrected radial integration, the default for stationary models.
    pub fn radial(radius: f64) -> Self {
        Self {
            radius,
            backend: default_backend(),
            edge: default_edge(),
        }
    }

    pub fn quadrature(radius: f64, m: usize) -> Self {
        Self {
            radius,
            backend: IntegralBackend::Quadrature { m },
            edge: EdgePolicy::ClipToWindow,
        }
    }

    pub fn analytic(radius: f64) -> Self {
        Self {
            radius,
            backend: IntegralBackend::AnalyticDisc,
            edge: EdgePolicy::IgnoreEdge,
        }
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::invalid(format!("radius must be > 0, got {}", self.radius)));
        }
        match self.backend {
            IntegralBackend::AnalyticDisc => {
                if !model.is_stationary() || self.edge != EdgePolicy::IgnoreEdge {
                    return Err(Error::invalid(
                        "analytic-disc integral needs a stationary model and ignore-edge",
                    ));
                }
            }
            IntegralBackend::Quadrature { m } => {
                if m < 16 {
                    return Err(Error::invalid(format!("quadrature resolution must be >= 16, got {m}")));
                }
            }
            IntegralBackend::Radial { panels } => {
                if !model.is_stationary() {
                    return Err(Error::invalid("radial integral needs a stationary model"));
                }
                if panels == 0 {
                    return Err(Error::invalid("radial integral needs at least one panel"));
                }
            }
        }
        Ok(())
    }
}

/// The two terms of the log Palm likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PalmEvaluation {
    pub log_palm: f64,
    pub pair_term: f64,
    pub integral_term: f64,
    pub n_pairs: usize,
}

impl PalmEvaluation {
    pub(crate) fn new(pair_term: f64, integral_term: f64, n_pairs: usize) -> Self {
        Self {
            log_palm: pair_term - integral_term,
            pair_term,
            integral_term,
            n_pairs,
        }
    }
}

/// Direct evaluation of the log Palm likelihood over every ordered pair.
pub fn log_palm_likelihood(
    model: &ModelSpec,
    pattern: &PointPattern,
    pairs: &PairIndex,
    cfg: &IntegralConfig,
    covariates: Option<&CovariateField>,
) -> Result<PalmEvaluation> {
    cfg.validate(model)?;
    model.check_covariates(covariates)?;
    if (pairs.radius() - cfg.radius).abs() > 1e-12 * cfg.radius {
        return Err(Error::invalid(format!(
            "pair index radius {} differs from integral radius {}",
            pairs.radius(),
            cfg.radius
        )));
    }
    if pattern.is_empty() {
        return Ok(PalmEvaluation::new(0.0, 0.0, 0));
    }
    let pts = pattern.points();
    let designs: Option<Vec<Vec<f64>>> =
        covariates.map(|c| pts.iter().map(|&p| c.design_at(p)).collect());
    let one = [1.0];

    let mut pair_term = 0.0;
    for (i, j, u) in pairs.iter() {
        let x: &[f64] = designs.as_ref().map_or(&one[..], |d| &d[i]);
        let v = model.palm_at(x, u);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Evaluation {
                message: format!("Palm intensity {v} at pair ({i}, {j}), distance {u}"),
                pair: Some((i, j)),
            });
        }
        pair_term += v.ln();
    }

    let integral_term = match cfg.backend {
        IntegralBackend::AnalyticDisc => pts.len() as f64 * palm_integral_disc(model, cfg.radius)?,
        IntegralBackend::Quadrature { m } => {
            let window = match cfg.edge {
                EdgePolicy::ClipToWindow => Some(pattern.window()),
                EdgePolicy::IgnoreEdge => None,
            };
            let mut total = 0.0;
            for &p in pts {
                total += palm_integral_quadrature(model, p, cfg.radius, window, m, covariates)?;
            }
            total
        }
        IntegralBackend::Radial { panels } => {
            let window = match cfg.edge {
                EdgePolicy::ClipToWindow => Some(pattern.window()),
                EdgePolicy::IgnoreEdge => None,
            };
            pts.iter()
                .map(|&p| palm_integral_radial(model, p, cfg.radius, window, panels))
                .sum()
        }
    };
    Ok(PalmEvaluation::new(pair_term, integral_term, pairs.len()))
}

/// `2π ∫₀^R λ_p(u) u du` for a stationary model.
pub fn palm_integral_disc(model: &ModelSpec, radius: f64) -> Result<f64> {
    if !model.is_stationary() {
        return Err(Error::invalid("disc integral needs a stationary model"));
    }
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!("radius must be >= 0, got {radius}")));
    }
    Ok(match model {
        ModelSpec::Poisson { lambda } => lambda * PI * radius * radius,
        ModelSpec::Thomas(p) => {
            p.mu * p.nu * PI * radius * radius
                + p.nu * (1.0 - (-radius * radius / (4.0 * p.sigma2)).exp())
        }
        _ => integrate_adaptive(|u| 2.0 * PI * u * model.radial(u), 0.0, radius, 1e-8),
    })
}

/// Midpoint-rule integral of `λ_p(· | center)` over the disc `b(center, R)`,
/// clipped to `window` when one is given. The `m × m` sub-grid covers the
/// disc's bounding box; a sub-cell counts when its midpoint lies inside the
/// disc (and the window).
pub fn palm_integral_quadrature(
    model: &ModelSpec,
    center: Point,
    radius: f64,
    window: Option<&Window>,
    m: usize,
    covariates: Option<&CovariateField>,
) -> Result<f64> {
    if m < 16 {
        return Err(Error::invalid(format!("quadrature resolution must be >= 16, got {m}")));
    }
    model.check_covariates(covariates)?;
    let h = 2.0 * radius / m as f64;
    let x0 = center.x - radius;
    let y0 = center.y - radius;
    let one = [1.0];
    let mut total = 0.0;
    for iy in 0..m {
        let y = y0 + (iy as f64 + 0.5) * h;
        for ix in 0..m {
            let u = Point::new(x0 + (ix as f64 + 0.5) * h, y);
            let d = u.distance(center);
            if d >= radius || window.is_some_and(|w| !w.contains(u)) {
                continue;
            }
            total += match covariates {
                Some(c) if model.n_coefficients() > 1 => model.palm_at(&c.design_at(u), d),
                _ => model.palm_at(&one, d),
            };
        }
    }
    Ok(total * h * h)
}

/// Edge-aware radial integral around one point for a stationary model.
pub fn palm_integral_radial(
    model: &ModelSpec,
    center: Point,
    radius: f64,
    window: Option<&Window>,
    panels: usize,
) -> f64 {
    let (nodes, weights) = composite_gauss_legendre(0.0, radius, panels, RADIAL_ORDER);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&r, &w)| {
            let arc = window.map_or(2.0 * PI * r, |win| win.arc_length_inside(center, r));
            w * arc * model.radial(r)
        })
        .sum()
}

/// Homogeneous Poisson MLE `n / |D|`.
pub fn homogeneous_intensity_mle(pattern: &PointPattern) -> f64 {
    pattern.len() as f64 / pattern.window().area()
}
