//! Precomputed log Palm likelihood for repeated evaluation at varying θ.
//!
//! Pair distances and integration geometry are fixed by the pattern and R,
//! so they are reduced once to a handful of weighted arrays:
//!
//! * pair term: unordered pair distances with weight 2, optionally binned;
//! * integral term, by backend:
//!   - `AnalyticDisc`: `n · palm_integral_disc`;
//!   - `Radial`: Gauss–Legendre nodes in `r` with weight `Σⱼ ℓⱼ(r)`;
//!   - `Quadrature`: per raster cell and radial bin, the total sub-cell area
//!     of all discs. Covariate models need this form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PairIndex, Point, PointPattern};
use crate::models::{lgcp_palm, CovariateField};

use super::{
    palm_integral_disc, EdgePolicy, IntegralBackend, IntegralConfig, ModelSpec, RADIAL_ORDER,
};
use crate::numerics::composite_gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveOptions {
    /// Collapse pair distances into this many equal-width bins on `[0, R)`.
    /// `None` keeps every pair.
    pub pair_bins: Option<usize>,
    /// Radial bins of the quadrature table.
    pub table_bins: usize,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        Self {
            pair_bins: None,
            table_bins: 256,
        }
    }
}

#[derive(Debug, Clone)]
enum IntegralPlan {
    Disc { n: f64 },
    Radial { nodes: Vec<f64>, weights: Vec<f64> },
    Table {
        /// Design vector per cell (`[1.0]` for a single stationary cell).
        designs: Vec<Vec<f64>>,
        /// Area-weighted mean distance per radial bin.
        bin_r: Vec<f64>,
        /// `areas[c * bins + b]`.
        areas: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct PalmObjective {
    n: usize,
    radius: f64,
    n_coefficients: usize,
    n_pairs: usize,
    pair_r: Vec<f64>,
    pair_w: Vec<f64>,
    /// `Σ_{ordered (i,j)} x(sᵢ)`.
    design_sum: Vec<f64>,
    plan: IntegralPlan,
}

impl PalmObjective {
    /// `n_coefficients` is the length of the regression vector (1 without
    /// covariates); it must agree with `covariates`.
    pub fn new(
        pattern: &PointPattern,
        pairs: &PairIndex,
        cfg: &IntegralConfig,
        covariates: Option<&CovariateField>,
        options: &ObjectiveOptions,
    ) -> Result<Self> {
        if (pairs.radius() - cfg.radius).abs() > 1e-12 * cfg.radius {
            return Err(Error::invalid("pair index radius differs from integral radius"));
        }
        let n_coefficients = covariates.map_or(1, |c| c.n_covariates() + 1);
        let stationary = n_coefficients == 1;
        match cfg.backend {
            IntegralBackend::AnalyticDisc if !stationary || cfg.edge != EdgePolicy::IgnoreEdge => {
                return Err(Error::invalid(
                    "analytic-disc integral needs a stationary model and ignore-edge",
                ));
            }
            IntegralBackend::Radial { .. } if !stationary => {
                return Err(Error::invalid("radial integral needs a stationary model"));
            }
            IntegralBackend::Radial { panels: 0 } => {
                return Err(Error::invalid("radial integral needs at least one panel"));
            }
            IntegralBackend::Quadrature { m } if m < 16 => {
                return Err(Error::invalid(format!("quadrature resolution must be >= 16, got {m}")));
            }
            _ => {}
        }
        let pts = pattern.points();
        let n = pts.len();
        let radius = cfg.radius;

        let design_sum = match covariates {
            None => vec![pairs.len() as f64],
            Some(c) => {
                let deg = pairs.degrees(n);
                let mut s = vec![0.0; n_coefficients];
                for (p, &d) in pts.iter().zip(&deg) {
                    if d > 0 {
                        for (acc, x) in s.iter_mut().zip(c.design_at(*p)) {
                            *acc += d as f64 * x;
                        }
                    }
                }
                s
            }
        };

        let (pair_r, pair_w) = match options.pair_bins {
            None => {
                let r: Vec<f64> = pairs.unordered_distances().collect();
                let w = vec![2.0; r.len()];
                (r, w)
            }
            Some(bins) => {
                if bins == 0 {
                    return Err(Error::invalid("pair_bins must be positive"));
                }
                let mut count = vec![0.0; bins];
                let mut sum = vec![0.0; bins];
                for d in pairs.unordered_distances() {
                    let b = ((d / radius * bins as f64) as usize).min(bins - 1);
                    count[b] += 2.0;
                    sum[b] += 2.0 * d;
                }
                count
                    .iter()
                    .zip(&sum)
                    .filter(|(c, _)| **c > 0.0)
                    .map(|(c, s)| (s / c, *c))
                    .unzip()
            }
        };

        let window = match cfg.edge {
            EdgePolicy::ClipToWindow => Some(pattern.window()),
            EdgePolicy::IgnoreEdge => None,
        };
        let plan = match cfg.backend {
            IntegralBackend::AnalyticDisc => IntegralPlan::Disc { n: n as f64 },
            IntegralBackend::Radial { panels } => {
                let (nodes, base) = composite_gauss_legendre(0.0, radius, panels, RADIAL_ORDER);
                let weights = nodes
                    .iter()
                    .zip(&base)
                    .map(|(&r, &w)| {
                        let arc: f64 = match window {
                            None => n as f64 * 2.0 * PI * r,
                            Some(win) => pts.iter().map(|&p| win.arc_length_inside(p, r)).sum(),
                        };
                        w * arc
                    })
                    .collect();
                IntegralPlan::Radial { nodes, weights }
            }
            IntegralBackend::Quadrature { m } => {
                build_table(pts, radius, m, options.table_bins, window, covariates)?
            }
        };

        Ok(Self {
            n,
            radius,
            n_coefficients,
            n_pairs: pairs.len(),
            pair_r,
            pair_w,
            design_sum,
            plan,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn n_coefficients(&self) -> usize {
        self.n_coefficients
    }

    /// Log Palm likelihood, or `-∞` where the model is invalid or its Palm
    /// intensity is not strictly positive at an observed pair.
    pub fn log_palm(&self, model: &ModelSpec) -> f64 {
        if model.n_coefficients() != self.n_coefficients {
            return f64::NEG_INFINITY;
        }
        let pair = self.pair_term(model);
        if !pair.is_finite() {
            return f64::NEG_INFINITY;
        }
        let integral = self.integral_term(model);
        let v = pair - integral;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    pub fn pair_term(&self, model: &ModelSpec) -> f64 {
        match model {
            ModelSpec::Poisson { lambda } => self.n_pairs as f64 * lambda.ln(),
            ModelSpec::Lgcp(p) => {
                let linear: f64 = self.design_sum.iter().zip(&p.beta).map(|(a, b)| a * b).sum();
                let field: f64 = self
                    .pair_r
                    .iter()
                    .zip(&self.pair_w)
                    .map(|(&r, &w)| w * (-r / p.phi).exp())
                    .sum();
                linear + self.n_pairs as f64 * 0.5 * p.sigma2 + p.sigma2 * field
            }
            _ => {
                let mut s = 0.0;
                for (&r, &w) in self.pair_r.iter().zip(&self.pair_w) {
                    let v = model.radial(r);
                    if !(v > 0.0) {
                        return f64::NEG_INFINITY;
                    }
                    s += w * v.ln();
                }
                s
            }
        }
    }

    pub fn integral_term(&self, model: &ModelSpec) -> f64 {
        match &self.plan {
            IntegralPlan::Disc { n } => palm_integral_disc(model, self.radius).map_or(f64::NAN, |v| n * v),
            IntegralPlan::Radial { nodes, weights } => nodes
                .iter()
                .zip(weights)
                .map(|(&r, &w)| w * model.radial(r))
                .sum(),
            IntegralPlan::Table {
                designs,
                bin_r,
                areas,
            } => {
                let bins = bin_r.len();
                match model {
                    ModelSpec::Lgcp(p) => {
                        // λ_p = exp(x'β) · exp(σ²/2 + σ² e^{−r/φ})
                        let g: Vec<f64> = bin_r.iter().map(|&r| lgcp_palm(0.0, p.sigma2, p.phi, r)).collect();
                        designs
                            .iter()
                            .zip(areas.chunks_exact(bins))
                            .map(|(x, a)| {
                                let eta: f64 = x.iter().zip(&p.beta).map(|(a, b)| a * b).sum();
                                let k: f64 = a.iter().zip(&g).map(|(a, g)| a * g).sum();
                                eta.exp() * k
                            })
                            .sum()
                    }
                    _ => areas
                        .iter()
                        .zip(bin_r.iter().cycle())
                        .map(|(&a, &r)| a * model.radial(r))
                        .sum(),
                }
            }
        }
    }
}

/// Midpoint sub-grid of every disc, reduced to total area per (covariate
/// cell, radial bin).
fn build_table(
    pts: &[Point],
    radius: f64,
    m: usize,
    bins: usize,
    window: Option<&crate::geometry::Window>,
    covariates: Option<&CovariateField>,
) -> Result<IntegralPlan> {
    if bins == 0 {
        return Err(Error::invalid("table_bins must be positive"));
    }
    let n_cells = covariates.map_or(1, |c| c.grid().len());
    let mut areas = vec![0.0; n_cells * bins];
    let mut r_area = vec![0.0; bins];
    let mut r_moment = vec![0.0; bins];
    let h = 2.0 * radius / m as f64;
    let cell_area = h * h;
    for &c in pts {
        let x0 = c.x - radius;
        let y0 = c.y - radius;
        for iy in 0..m {
            let y = y0 + (iy as f64 + 0.5) * h;
            for ix in 0..m {
                let u = Point::new(x0 + (ix as f64 + 0.5) * h, y);
                let d = u.distance(c);
                if d >= radius || window.is_some_and(|w| !w.contains(u)) {
                    continue;
                }
                let b = ((d / radius * bins as f64) as usize).min(bins - 1);
                let cell = covariates.map_or(0, |cv| cv.cell_of(u));
                areas[cell * bins + b] += cell_area;
                r_area[b] += cell_area;
                r_moment[b] += cell_area * d;
            }
        }
    }
    let bin_r = (0..bins)
        .map(|b| {
            if r_area[b] > 0.0 {
                r_moment[b] / r_area[b]
            } else {
                (b as f64 + 0.5) * radius / bins as f64
            }
        })
        .collect();
    // Cells that no disc reaches contribute nothing; drop them.
    let (designs, areas) = match covariates {
        None => (vec![vec![1.0]], areas),
        Some(cv) => {
            let mut designs = Vec::new();
            let mut kept = Vec::new();
            for (cell, a) in areas.chunks_exact(bins).enumerate() {
                if a.iter().any(|&v| v > 0.0) {
                    designs.push(cv.design_for_cell(cell));
                    kept.extend_from_slice(a);
                }
            }
            (designs, kept)
        }
    };
    Ok(IntegralPlan::Table {
        designs,
        bin_r,
        areas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridPartition, Window};
    use crate::models::{LgcpParams, ThomasParams};
    use crate::palm::log_palm_likelihood;
    use crate::rng;
    use approx::assert_relative_eq;

    fn pattern() -> PointPattern {
        let model = ThomasParams::new(10.0, 30.0, 0.0025).unwrap();
        crate::models::simulate_thomas(&model, &Window::unit_square(), &mut rng::from_seed(11)).unwrap()
    }

    #[test]
    fn exact_objective_matches_reference_radial() {
        let pat = pattern();
        let cfg = IntegralConfig::radial(0.2);
        let pairs = PairIndex::build(&pat, 0.2).unwrap();
        let obj = PalmObjective::new(&pat, &pairs, &cfg, None, &ObjectiveOptions::default()).unwrap();
        for model in [
            ModelSpec::Thomas(ThomasParams::new(8.0, 35.0, 0.003).unwrap()),
            ModelSpec::Lgcp(LgcpParams::from_intensity(280.0, 1.2, 0.08).unwrap()),
            ModelSpec::Poisson { lambda: 290.0 },
        ] {
            let reference = log_palm_likelihood(&model, &pat, &pairs, &cfg, None).unwrap();
            assert_relative_eq!(obj.log_palm(&model), reference.log_palm, max_relative = 1e-10);
        }
    }

    #[test]
    fn binned_pairs_are_close_to_exact() {
        let pat = pattern();
        let cfg = IntegralConfig::analytic(0.2);
        let pairs = PairIndex::build(&pat, 0.2).unwrap();
        let exact = PalmObjective::new(&pat, &pairs, &cfg, None, &ObjectiveOptions::default()).unwrap();
        let binned = PalmObjective::new(
            &pat,
            &pairs,
            &cfg,
            None,
            &ObjectiveOptions {
                pair_bins: Some(1024),
                ..Default::default()
            },
        )
        .unwrap();
        let model = ModelSpec::Thomas(ThomasParams::new(10.0, 30.0, 0.0025).unwrap());
        let a = exact.log_palm(&model);
        let b = binned.log_palm(&model);
        assert!((a - b).abs() < 1e-3 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn table_matches_reference_quadrature_with_covariates() {
        let w = Window::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let grid = GridPartition::new(w, 20, 10).unwrap();
        let layer: Vec<f64> = (0..grid.len()).map(|c| grid.cell_center(c).x - 1.0).collect();
        let cov = CovariateField::new(grid, vec!["x".into()], vec![layer]).unwrap();
        let pat = crate::models::simulate_poisson(60.0, &w, &mut rng::from_seed(12)).unwrap();
        let cfg = IntegralConfig::quadrature(0.3, 32);
        let pairs = PairIndex::build(&pat, 0.3).unwrap();
        let obj = PalmObjective::new(
            &pat,
            &pairs,
            &cfg,
            Some(&cov),
            &ObjectiveOptions {
                pair_bins: None,
                table_bins: 512,
            },
        )
        .unwrap();
        let model = ModelSpec::Lgcp(LgcpParams::new(vec![4.0, 0.5], 0.8, 0.1).unwrap());
        let reference = log_palm_likelihood(&model, &pat, &pairs, &cfg, Some(&cov)).unwrap();
        assert_relative_eq!(obj.pair_term(&model), reference.pair_term, max_relative = 1e-10);
        assert_relative_eq!(obj.integral_term(&model), reference.integral_term, max_relative = 1e-3);
    }

    #[test]
    fn invalid_model_gives_negative_infinity() {
        let pat = pattern();
        let cfg = IntegralConfig::radial(0.2);
        let pairs = PairIndex::build(&pat, 0.2).unwrap();
        let obj = PalmObjective::new(&pat, &pairs, &cfg, None, &ObjectiveOptions::default()).unwrap();
        let dead = ModelSpec::Thomas(ThomasParams { mu: 10.0, nu: 0.0, sigma2: 0.0025 });
        assert_eq!(obj.log_palm(&dead), f64::NEG_INFINITY);
        let cov_model = ModelSpec::Lgcp(LgcpParams::new(vec![4.0, 0.5], 0.8, 0.1).unwrap());
        assert_eq!(obj.log_palm(&cov_model), f64::NEG_INFINITY);
    }
}
