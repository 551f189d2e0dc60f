use faer::Mat;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::{CovariateField, LgcpParams, ThomasParams};
use crate::error::{Error, Result};
use crate::geometry::{GridPartition, Point, PointPattern, Window};
use crate::linalg::Cholesky;

/// Parents are simulated on the window expanded by this many dispersal
/// standard deviations.
pub const THOMAS_MARGIN_SDS: f64 = 6.0;

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    let v: f64 = d.sample(rng);
    v as usize
}

fn uniform_in<R: Rng + ?Sized>(x0: f64, y0: f64, w: f64, h: f64, window: &Window, rng: &mut R) -> Point {
    let x = (x0 + rng.random::<f64>() * w).min(window.x_max());
    let y = (y0 + rng.random::<f64>() * h).min(window.y_max());
    Point::new(x, y)
}

/// Homogeneous Poisson process of intensity `lambda` on `window`.
pub fn simulate_poisson<R: Rng + ?Sized>(lambda: f64, window: &Window, rng: &mut R) -> Result<PointPattern> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("Poisson intensity must be >= 0, got {lambda}")));
    }
    let n = poisson_count(lambda * window.area(), rng);
    let points = (0..n)
        .map(|_| {
            uniform_in(
                window.x_min(),
                window.y_min(),
                window.width(),
                window.height(),
                window,
                rng,
            )
        })
        .collect();
    PointPattern::new(points, *window)
}

/// Zero-mean Gaussian field with covariance `σ² exp(−d/φ)` at the centres
/// of a grid, sampled through a dense Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianField {
    sigma: f64,
    len: usize,
    factor: Option<Cholesky>,
}

impl GaussianField {
    pub fn new(sigma2: f64, phi: f64, grid: &GridPartition) -> Result<Self> {
        if !(sigma2 >= 0.0) || !sigma2.is_finite() || !(phi > 0.0) {
            return Err(Error::invalid("Gaussian field needs sigma2 >= 0 and phi > 0"));
        }
        let len = grid.len();
        if sigma2 == 0.0 {
            return Ok(Self {
                sigma: 0.0,
                len,
                factor: None,
            });
        }
        let factor = Cholesky::with_jitter(&correlation_matrix(grid, phi), 1.0)?;
        Ok(Self {
            sigma: sigma2.sqrt(),
            len,
            factor: Some(factor),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Factor of the correlation matrix (unit variance).
    pub fn correlation_factor(&self) -> Option<&Cholesky> {
        self.factor.as_ref()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.factor {
            None => vec![0.0; self.len],
            Some(f) => {
                let z: Vec<f64> = (0..self.len).map(|_| rng.sample(StandardNormal)).collect();
                let mut w = f.mul_lower(&z);
                w.iter_mut().for_each(|v| *v *= self.sigma);
                w
            }
        }
    }
}

/// Exponential correlation matrix between grid cell centres.
pub(crate) fn correlation_matrix(grid: &GridPartition, phi: f64) -> Mat<f64> {
    let centers = grid.cell_centers();
    let k = centers.len();
    Mat::from_fn(k, k, |i, j| (-centers[i].distance(centers[j]) / phi).exp())
}

/// One draw of the Gaussian field at the grid's cell centres.
pub fn simulate_gp_grid<R: Rng + ?Sized>(
    sigma2: f64,
    phi: f64,
    grid: &GridPartition,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(GaussianField::new(sigma2, phi, grid)?.sample(rng))
}

/// Grid-based LGCP simulator. Holds the field factorisation so repeated
/// draws at fixed parameters only pay for a matrix–vector product.
#[derive(Debug, Clone)]
pub struct LgcpSimulator {
    grid: GridPartition,
    field: GaussianField,
    log_mean: Vec<f64>,
}

impl LgcpSimulator {
    pub fn new(params: &LgcpParams, covariates: Option<&CovariateField>, grid: GridPartition) -> Result<Self> {
        let log_mean = match covariates {
            None => {
                if params.has_covariates() {
                    return Err(Error::invalid("covariate slopes given without a covariate field"));
                }
                vec![params.beta0(); grid.len()]
            }
            Some(field) => {
                if field.n_covariates() + 1 != params.beta.len() {
                    return Err(Error::invalid(format!(
                        "{} coefficients for {} covariates",
                        params.beta.len(),
                        field.n_covariates()
                    )));
                }
                (0..grid.len())
                    .map(|c| params.linear_predictor(&field.design_at(grid.cell_center(c))))
                    .collect()
            }
        };
        let field = GaussianField::new(params.sigma2, params.phi, &grid)?;
        Ok(Self {
            grid,
            field,
            log_mean,
        })
    }

    pub fn grid(&self) -> &GridPartition {
        &self.grid
    }

    /// Draw a latent field, then a Poisson count per cell with points placed
    /// uniformly inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PointPattern {
        let w = self.field.sample(rng);
        let area = self.grid.cell_area();
        let (cw, ch) = (self.grid.cell_width(), self.grid.cell_height());
        let window = *self.grid.window();
        let mut points = Vec::new();
        for (c, (&m, &wc)) in self.log_mean.iter().zip(&w).enumerate() {
            let n = poisson_count(area * (m + wc).exp(), rng);
            let o = self.grid.cell_origin(c);
            for _ in 0..n {
                points.push(uniform_in(o.x, o.y, cw, ch, &window, rng));
            }
        }
        PointPattern::new(points, window).expect("cell points lie in the window")
    }
}

/// One LGCP realisation with piecewise-constant intensity on `grid`.
pub fn simulate_lgcp<R: Rng + ?Sized>(
    params: &LgcpParams,
    covariates: Option<&CovariateField>,
    grid: &GridPartition,
    rng: &mut R,
) -> Result<PointPattern> {
    Ok(LgcpSimulator::new(params, covariates, grid.clone())?.sample(rng))
}

/// Thomas process on `window`; parents outside the window within the
/// margin still contribute offspring.
pub fn simulate_thomas<R: Rng + ?Sized>(params: &ThomasParams, window: &Window, rng: &mut R) -> Result<PointPattern> {
    let sd = params.sigma2.sqrt();
    let parent_window = window.expand(THOMAS_MARGIN_SDS * sd)?;
    let n_parents = poisson_count(params.mu * parent_window.area(), rng);
    let mut points = Vec::new();
    for _ in 0..n_parents {
        let parent = uniform_in(
            parent_window.x_min(),
            parent_window.y_min(),
            parent_window.width(),
            parent_window.height(),
            &parent_window,
            rng,
        );
        let n_children = poisson_count(params.nu, rng);
        for _ in 0..n_children {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            let child = Point::new(parent.x + sd * dx, parent.y + sd * dy);
            if window.contains(child) {
                points.push(child);
            }
        }
    }
    PointPattern::new(points, *window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{mean, variance};
    use crate::rng;

    #[test]
    fn poisson_count_moments() {
        let w = Window::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let mut r = rng::from_seed(1);
        let counts: Vec<f64> = (0..2000)
            .map(|_| simulate_poisson(50.0, &w, &mut r).unwrap().len() as f64)
            .collect();
        let m = mean(&counts);
        let se = (100.0f64 / 2000.0).sqrt();
        assert!((m - 100.0).abs() < 4.0 * se, "mean {m}");
        assert!((variance(&counts) / 100.0 - 1.0).abs() < 0.15);
    }

    #[test]
    fn tiny_intensity_gives_empty_pattern() {
        let mut r = rng::from_seed(2);
        let w = Window::unit_square();
        let empties = (0..200)
            .filter(|_| simulate_poisson(1e-9, &w, &mut r).unwrap().is_empty())
            .count();
        assert_eq!(empties, 200);
        assert!(simulate_poisson(-1.0, &w, &mut r).is_err());
    }

    #[test]
    fn zero_variance_field_is_identically_zero() {
        let grid = GridPartition::new(Window::unit_square(), 4, 4).unwrap();
        let w = simulate_gp_grid(0.0, 0.1, &grid, &mut rng::from_seed(3)).unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_field_has_variance_sigma2() {
        let grid = GridPartition::new(Window::unit_square(), 1, 1).unwrap();
        let field = GaussianField::new(2.0, 0.1, &grid).unwrap();
        let mut r = rng::from_seed(4);
        let draws: Vec<f64> = (0..20000).map(|_| field.sample(&mut r)[0]).collect();
        assert!(mean(&draws).abs() < 0.05);
        assert!((variance(&draws) - 2.0).abs() < 0.1);
    }

    #[test]
    fn thomas_without_offspring_is_empty() {
        let p = ThomasParams::new(10.0, 0.0, 0.0025).unwrap();
        let pat = simulate_thomas(&p, &Window::unit_square(), &mut rng::from_seed(5)).unwrap();
        assert!(pat.is_empty());
    }

    #[test]
    fn thomas_offspring_collapse_onto_parents() {
        let p = ThomasParams::new(5.0, 20.0, 1e-12).unwrap();
        let pat = simulate_thomas(&p, &Window::unit_square(), &mut rng::from_seed(6)).unwrap();
        assert!(pat.len() > 20);
        // Nearly every point has a partner within 1e-4.
        let idx = crate::geometry::PairIndex::build(&pat, 1e-4).unwrap();
        let deg = idx.degrees(pat.len());
        let isolated = deg.iter().filter(|&&d| d == 0).count();
        assert!(isolated * 10 < pat.len());
    }

    #[test]
    fn lgcp_with_zero_variance_matches_poisson_mean() {
        let params = LgcpParams::new(vec![100f64.ln()], 0.0, 0.1).unwrap();
        let grid = GridPartition::new(Window::unit_square(), 8, 8).unwrap();
        let sim = LgcpSimulator::new(&params, None, grid).unwrap();
        let mut r = rng::from_seed(7);
        let counts: Vec<f64> = (0..1000).map(|_| sim.sample(&mut r).len() as f64).collect();
        let se = (100.0f64 / 1000.0).sqrt();
        assert!((mean(&counts) - 100.0).abs() < 4.0 * se);
        assert!((variance(&counts) / 100.0 - 1.0).abs() < 0.2);
    }

    #[test]
    fn lgcp_rejects_mismatched_covariates() {
        let params = LgcpParams::new(vec![1.0, 2.0], 0.5, 0.1).unwrap();
        let grid = GridPartition::new(Window::unit_square(), 4, 4).unwrap();
        assert!(LgcpSimulator::new(&params, None, grid).is_err());
    }
}
