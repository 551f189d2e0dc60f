use crate::error::{Error, Result};
use crate::family::ModelFamily;

use super::PalmObjective;

/// Relative finite-difference step: `h_k = 1e-5 · (1 + |θ_k|)`.
pub const FD_RELATIVE_STEP: f64 = 1e-5;

/// Central-difference gradient of `f` at `theta` with steps
/// `rel_step · (1 + |θ_k|)`.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, theta: &[f64], rel_step: f64) -> Result<Vec<f64>> {
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        let h = rel_step * (1.0 + theta[k].abs());
        x[k] = theta[k] + h;
        let up = f(&x);
        x[k] = theta[k] - h;
        let down = f(&x);
        x[k] = theta[k];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::evaluation(format!(
                "non-finite log Palm likelihood at the stencil of coordinate {k}"
            )));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Score of the log Palm likelihood on the family's sampled scale.
pub fn palm_score_fd(objective: &PalmObjective, family: ModelFamily, theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != family.dim() {
        return Err(Error::invalid("parameter vector has the wrong length"));
    }
    central_difference(
        |t| family.to_model(t).map_or(f64::NAN, |m| objective.log_palm(&m)),
        theta,
        FD_RELATIVE_STEP,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PairIndex, Window};
    use crate::models::{simulate_thomas, ThomasParams};
    use crate::palm::{IntegralConfig, ModelSpec, ObjectiveOptions};
    use crate::rng;

    #[test]
    fn quadratic_gradient_is_exact() {
        let g = central_difference(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0], 1e-5).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn non_finite_stencil_is_an_error() {
        let r = central_difference(|x| if x[0] > 0.0 { f64::NEG_INFINITY } else { 0.0 }, &[0.0], 1e-5);
        assert!(matches!(r, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn thomas_score_matches_higher_order_stencil() {
        let truth = ThomasParams::new(10.0, 30.0, 0.0025).unwrap();
        let pat = simulate_thomas(&truth, &Window::unit_square(), &mut rng::from_seed(21)).unwrap();
        let pairs = PairIndex::build(&pat, 0.2).unwrap();
        let obj = PalmObjective::new(&pat, &pairs, &IntegralConfig::radial(0.2), None, &ObjectiveOptions::default())
            .unwrap();
        let family = ModelFamily::Thomas;
        let theta = family.from_model(&ModelSpec::Thomas(truth)).unwrap();
        let score = palm_score_fd(&obj, family, &theta).unwrap();
        let f = |t: &[f64]| obj.log_palm(&family.to_model(t).unwrap());
        for k in 0..3 {
            let h = 1e-3 * (1.0 + theta[k].abs());
            let at = |d: f64| {
                let mut x = theta.clone();
                x[k] += d;
                f(&x)
            };
            let five = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
            let scale = score[k].abs().max(1.0);
            assert!((score[k] - five).abs() < 1e-4 * scale, "{k}: {} vs {five}", score[k]);
        }
    }
}
