//! Process families, their Palm intensities, covariate rasters and
//! simulators.

mod simulate;

pub use simulate::{
    simulate_gp_grid, simulate_lgcp, simulate_poisson, simulate_thomas, GaussianField,
    LgcpSimulator, THOMAS_MARGIN_SDS,
};

#[cfg(test)]
pub(crate) use simulate::correlation_matrix;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridPartition, Point};

/// Log-Gaussian Cox process with log-intensity `x(s)'β + W(s)` and
/// exponential covariance `σ² exp(-d/φ)` for `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgcpParams {
    /// Intercept first, then covariate slopes.
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub phi: f64,
}

impl LgcpParams {
    /// `sigma2 == 0` is accepted as the Poisson limit.
    pub fn new(beta: Vec<f64>, sigma2: f64, phi: f64) -> Result<Self> {
        if beta.is_empty() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("LGCP needs a finite, non-empty coefficient vector"));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid(format!("LGCP variance must be >= 0, got {sigma2}")));
        }
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(Error::invalid(format!("LGCP range must be > 0, got {phi}")));
        }
        Ok(Self { beta, sigma2, phi })
    }

    /// Constant-mean LGCP with overall intensity `lambda`, i.e.
    /// `β₀ = ln λ − σ²/2`.
    pub fn from_intensity(lambda: f64, sigma2: f64, phi: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::invalid(format!("intensity must be > 0, got {lambda}")));
        }
        Self::new(vec![lambda.ln() - 0.5 * sigma2], sigma2, phi)
    }

    pub fn beta0(&self) -> f64 {
        self.beta[0]
    }

    pub fn has_covariates(&self) -> bool {
        self.beta.len() > 1
    }

    /// Overall intensity `exp(β₀ + σ²/2)` of the constant-mean model.
    pub fn intensity(&self) -> f64 {
        (self.beta[0] + 0.5 * self.sigma2).exp()
    }

    pub fn correlation(&self, u: f64) -> f64 {
        (-u / self.phi).exp()
    }

    /// Linear predictor `x'β`; `x` includes the leading intercept entry.
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.beta).map(|(a, b)| a * b).sum()
    }
}

/// Thomas cluster process: Poisson(`mu`) parents, Poisson(`nu`) offspring per
/// parent displaced by `N(0, sigma2 I₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThomasParams {
    pub mu: f64,
    pub nu: f64,
    pub sigma2: f64,
}

impl ThomasParams {
    pub fn new(mu: f64, nu: f64, sigma2: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::invalid(format!("parent intensity must be > 0, got {mu}")));
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::invalid(format!("mean offspring count must be >= 0, got {nu}")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid(format!("dispersal variance must be > 0, got {sigma2}")));
        }
        Ok(Self { mu, nu, sigma2 })
    }

    pub fn intensity(&self) -> f64 {
        self.mu * self.nu
    }
}

/// Covariance kernel of a determinantal point process.
pub trait DppKernel {
    fn cov(&self, a: Point, b: Point) -> f64;
}

/// `C(a, b) = λ exp(−‖a − b‖ / φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialKernel {
    pub lambda: f64,
    pub phi: f64,
}

impl ExponentialKernel {
    pub fn new(lambda: f64, phi: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(phi > 0.0) {
            return Err(Error::invalid("exponential kernel needs lambda > 0 and phi > 0"));
        }
        Ok(Self { lambda, phi })
    }

    /// Palm intensity at separation `u`.
    pub fn palm_at(&self, u: f64) -> f64 {
        self.lambda * (1.0 - (-2.0 * u / self.phi).exp())
    }
}

impl DppKernel for ExponentialKernel {
    fn cov(&self, a: Point, b: Point) -> f64 {
        self.lambda * (-a.distance(b) / self.phi).exp()
    }
}

/// Palm intensity `exp{x'β + σ²/2 + σ² exp(−u/φ)}` of an LGCP.
pub fn palm_intensity_lgcp(params: &LgcpParams, x: &[f64], u: f64) -> Result<f64> {
    if !(params.sigma2 >= 0.0) || !(params.phi > 0.0) {
        return Err(Error::invalid("LGCP needs sigma2 >= 0 and phi > 0"));
    }
    if x.len() != params.beta.len() {
        return Err(Error::invalid(format!(
            "design vector has {} entries, model has {} coefficients",
            x.len(),
            params.beta.len()
        )));
    }
    if !(u >= 0.0) {
        return Err(Error::invalid(format!("distance must be >= 0, got {u}")));
    }
    Ok(lgcp_palm(params.linear_predictor(x), params.sigma2, params.phi, u))
}

#[inline]
pub(crate) fn lgcp_palm(eta: f64, sigma2: f64, phi: f64, u: f64) -> f64 {
    (eta + 0.5 * sigma2 + sigma2 * (-u / phi).exp()).exp()
}

/// Palm intensity `μν + ν/(4πσ²) exp{−u²/(4σ²)}` of a Thomas process.
pub fn palm_intensity_thomas(params: &ThomasParams, u: f64) -> Result<f64> {
    if !(params.mu > 0.0) || !(params.nu >= 0.0) || !(params.sigma2 > 0.0) {
        return Err(Error::invalid("Thomas needs mu > 0, nu >= 0 and sigma2 > 0"));
    }
    if !(u >= 0.0) {
        return Err(Error::invalid(format!("distance must be >= 0, got {u}")));
    }
    Ok(thomas_palm(params, u))
}

#[inline]
pub(crate) fn thomas_palm(p: &ThomasParams, u: f64) -> f64 {
    p.mu * p.nu + p.nu / (4.0 * PI * p.sigma2) * (-u * u / (4.0 * p.sigma2)).exp()
}

/// DPP Palm intensity `C(sᵢ,sᵢ) − C(sᵢ,sⱼ) C(sⱼ,sᵢ) / C(sⱼ,sⱼ)`.
pub fn palm_intensity_dpp<K: DppKernel + ?Sized>(kernel: &K, si: Point, sj: Point) -> Result<f64> {
    let cjj = kernel.cov(sj, sj);
    if !(cjj > 0.0) {
        return Err(Error::invalid(format!("kernel diagonal must be > 0, got {cjj}")));
    }
    let cii = kernel.cov(si, si);
    let value = cii - kernel.cov(si, sj) * kernel.cov(sj, si) / cjj;
    // Rounding can leave a tiny negative at coincident points.
    Ok(value.max(0.0))
}

/// One raster per covariate, aligned with a grid. Lookup is by nearest
/// (containing) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateField {
    grid: GridPartition,
    names: Vec<String>,
    layers: Vec<Vec<f64>>,
}

impl CovariateField {
    pub fn new(grid: GridPartition, names: Vec<String>, layers: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != layers.len() {
            return Err(Error::invalid("one name per covariate layer required"));
        }
        for (name, layer) in names.iter().zip(&layers) {
            if layer.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "covariate '{name}' has {} values, grid has {} cells",
                    layer.len(),
                    grid.len()
                )));
            }
            if layer.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("covariate '{name}' has non-finite values")));
            }
        }
        Ok(Self { grid, names, layers })
    }

    pub fn grid(&self) -> &GridPartition {
        &self.grid
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_covariates(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        &self.layers[k]
    }

    pub fn cell_of(&self, p: Point) -> usize {
        self.grid.cell_index_clamped(p)
    }

    /// Design vector `[1, x₁(cell), …]` of a raster cell.
    pub fn design_for_cell(&self, cell: usize) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(self.layers.iter().map(|l| l[cell]))
            .collect()
    }

    /// Design vector `[1, x₁(p), …]` at a location.
    pub fn design_at(&self, p: Point) -> Vec<f64> {
        self.design_for_cell(self.cell_of(p))
    }
}
