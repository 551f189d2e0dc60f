use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ess {
    pub value: f64,
    /// The chain never moved; `value` is then 1.
    pub degenerate: bool,
}

/// Effective sample size `M / (1 + 2 Σ ρ̂ₜ)` with Geyer's initial positive
/// sequence truncation: lags are summed in pairs `ρ̂₂ₘ + ρ̂₂ₘ₊₁` while the
/// pair sums stay positive.
pub fn effective_sample_size(draws: &[f64]) -> Result<Ess> {
    let n = draws.len();
    if n < 10 {
        return Err(Error::invalid(format!("effective sample size needs >= 10 draws, got {n}")));
    }
    let mean = draws.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = draws.iter().map(|x| x - mean).collect();
    let acov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = acov(0);
    if !(c0 > 0.0) || draws.iter().all(|&x| x == draws[0]) {
        return Ok(Ess {
            value: 1.0,
            degenerate: true,
        });
    }
    // tau = −1 + 2 Σₘ Γₘ with Γ₀ = 1 + ρ̂₁.
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let gamma = (acov(2 * m) + acov(2 * m + 1)) / c0;
        if gamma <= 0.0 {
            break;
        }
        tau += 2.0 * gamma;
        m += 1;
    }
    Ok(Ess {
        value: n as f64 / tau.max(1.0 / n as f64),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn iid_draws() {
        let mut r = rng::from_seed(1);
        let xs: Vec<f64> = (0..10_000).map(|_| r.sample(StandardNormal)).collect();
        let e = effective_sample_size(&xs).unwrap();
        assert!((e.value / 10_000.0 - 1.0).abs() < 0.15, "{}", e.value);
    }

    #[test]
    fn ar1_chain() {
        let mut r = rng::from_seed(2);
        let rho = 0.9;
        let mut x = 0.0;
        let xs: Vec<f64> = (0..20_000)
            .map(|_| {
                let z: f64 = r.sample(StandardNormal);
                x = rho * x + z;
                x
            })
            .collect();
        let e = effective_sample_size(&xs).unwrap();
        let expected = 20_000.0 * (1.0 - rho) / (1.0 + rho);
        assert!((e.value / expected - 1.0).abs() < 0.25, "{} vs {expected}", e.value);
    }

    #[test]
    fn constant_chain_is_flagged() {
        let e = effective_sample_size(&[2.5; 50]).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(e.degenerate);
        assert!(effective_sample_size(&[1.0; 5]).is_err());
    }
}
