//! Small numerical helpers: 1-D quadrature, sample statistics, a derivative
//! free optimizer for chain initialisation.

use std::f64::consts::PI;

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]` to the
/// requested relative tolerance.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (first, first_err) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, first, first_err)];
    let mut total = first;
    let mut err = first_err;
    let mut iterations = 0;
    while err > rel_tol * total.abs().max(f64::MIN_POSITIVE) && iterations < 200 {
        iterations += 1;
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, val, e) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total += v1 + v2 - val;
        err += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // Re-sum to shed accumulated update rounding.
    intervals.iter().map(|iv| iv.2).sum()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels of
/// `order` nodes each.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Type-7 (linear interpolation) quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

/// Column means of a row-major sample.
pub fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let q = rows.first().map_or(0, Vec::len);
    let mut m = vec![0.0; q];
    for r in rows {
        for (acc, v) in m.iter_mut().zip(r) {
            *acc += v;
        }
    }
    let n = rows.len() as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Unbiased sample covariance matrix of a row-major sample.
pub fn covariance_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let q = rows.first().map_or(0, Vec::len);
    let m = column_means(rows);
    let mut c = vec![vec![0.0; q]; q];
    for r in rows {
        for a in 0..q {
            let da = r[a] - m[a];
            for b in a..q {
                c[a][b] += da * (r[b] - m[b]);
            }
        }
    }
    let denom = rows.len() as f64 - 1.0;
    for a in 0..q {
        for b in a..q {
            c[a][b] /= denom;
            c[b][a] = c[a][b];
        }
    }
    c
}

/// Nelder–Mead maximisation. Non-finite objective values count as the worst
/// possible value, so the simplex steers away from regions outside a prior's
/// support.
pub fn nelder_mead_max<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: &[f64],
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let q = start.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(q + 1);
    simplex.push((start.to_vec(), eval(start)));
    for k in 0..q {
        let mut x = start.to_vec();
        x[k] += step[k];
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut evals = q + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[q].1;
        if best.is_finite() && (worst - best).abs() <= 1e-9 * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; q];
        for (x, _) in &simplex[..q] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / q as f64;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0, &simplex[q].0);
        let fr = eval(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0, &simplex[q].0);
            let fe = eval(&xe);
            evals += 1;
            simplex[q] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[q - 1].1 {
            simplex[q] = (xr, fr);
        } else {
            let xc = if fr < simplex[q].1 {
                along(-0.5, &simplex[q].0)
            } else {
                along(0.5, &simplex[q].0)
            };
            let fc = eval(&xc);
            evals += 1;
            if fc < fr.min(simplex[q].1) {
                simplex[q] = (xc, fc);
            } else {
                let best_x = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best_x
                        .iter()
                        .zip(&s.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    let v = eval(&x);
                    *s = (x, v);
                }
                evals += q;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, -v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let p = deg - 1;
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert_relative_eq!(got, exact, epsilon = 1e-13);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn adaptive_quadrature_matches_closed_forms() {
        assert_relative_eq!(
            integrate_adaptive(|x| x.sin(), 0.0, PI, 1e-10),
            2.0,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            integrate_adaptive(|x| (-x * x).exp(), -8.0, 8.0, 1e-10),
            PI.sqrt(),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            integrate_adaptive(|x| x.sqrt(), 0.0, 1.0, 1e-9),
            2.0 / 3.0,
            max_relative = 1e-8
        );
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_relative_eq!(quantile(&xs, 0.5), 2.5);
    }

    #[test]
    fn nelder_mead_finds_quadratic_peak() {
        let (x, v) = nelder_mead_max(
            |p| -(p[0] - 1.0).powi(2) - 3.0 * (p[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &[0.5, 0.5],
            2000,
        );
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(x[1], -2.0, epsilon = 1e-3);
        assert!(v > -1e-6);
    }

    #[test]
    fn nelder_mead_avoids_infeasible_region() {
        let (x, _) = nelder_mead_max(
            |p| if p[0] < 0.5 { f64::NEG_INFINITY } else { -(p[0] - 2.0).powi(2) },
            &[1.0],
            &[0.3],
            500,
        );
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-3);
    }
}
