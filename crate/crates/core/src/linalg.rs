//! Dense symmetric factorisations backed by `faer`.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Lower Cholesky factor `L` with `A + jitter I = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Mat<f64>,
    jitter: f64,
}

impl Cholesky {
    /// Factor a symmetric matrix, retrying with diagonal jitter
    /// `1e-10·scale, 1e-9·scale, …, 1e-4·scale` when it is numerically
    /// indefinite.
    pub fn with_jitter(a: &Mat<f64>, scale: f64) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::invalid("cholesky of a non-square matrix"));
        }
        if let Ok(llt) = a.llt(Side::Lower) {
            return Ok(Self {
                l: llt.L().to_owned(),
                jitter: 0.0,
            });
        }
        let mut jitter = 1e-10 * scale;
        while jitter <= 1e-4 * scale * (1.0 + 1e-9) {
            let mut shifted = a.clone();
            for i in 0..n {
                shifted[(i, i)] += jitter;
            }
            if let Ok(llt) = shifted.llt(Side::Lower) {
                return Ok(Self {
                    l: llt.L().to_owned(),
                    jitter,
                });
            }
            jitter *= 10.0;
        }
        Err(Error::Numerical(format!(
            "cholesky failed for {n}x{n} matrix after jitter {:e}",
            1e-4 * scale
        )))
    }

    /// Factor without jitter.
    pub fn exact(a: &Mat<f64>) -> Result<Self> {
        a.llt(Side::Lower)
            .map(|llt| Self {
                l: llt.L().to_owned(),
                jitter: 0.0,
            })
            .map_err(|_| Error::Numerical("matrix is not positive definite".into()))
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn factor(&self) -> &Mat<f64> {
        &self.l
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        // Column-oriented sweep matches faer's column-major storage.
        for j in 0..n {
            let zj = z[j];
            if zj == 0.0 {
                continue;
            }
            let col = self.l.col_as_slice(j);
            for i in j..n {
                out[i] += col[i] * zj;
            }
        }
        out
    }

    /// Solve `L y = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = b.to_vec();
        for j in 0..n {
            let col = self.l.col_as_slice(j);
            let yj = y[j] / col[j];
            y[j] = yj;
            for i in j + 1..n {
                y[i] -= col[i] * yj;
            }
        }
        y
    }

    /// `log det(L Lᵀ)`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>()
    }
}

/// Build a faer matrix from rows.
pub fn mat_from_rows(rows: &[Vec<f64>]) -> Mat<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

/// Whether a small symmetric matrix is numerically positive definite.
pub fn is_positive_definite(rows: &[Vec<f64>]) -> bool {
    let a = mat_from_rows(rows);
    a.llt(Side::Lower).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd() -> Mat<f64> {
        Mat::from_fn(3, 3, |i, j| if i == j { 4.0 } else { 1.0 / (1.0 + (i + j) as f64) })
    }

    #[test]
    fn solve_and_multiply_are_inverse() {
        let c = Cholesky::exact(&spd()).unwrap();
        let b = [1.0, -2.0, 0.5];
        let y = c.solve_lower(&b);
        let back = c.mul_lower(&y);
        for (u, v) in back.iter().zip(&b) {
            assert_relative_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_det_matches_direct() {
        let a = Mat::from_fn(2, 2, |i, j| [[2.0, 0.5], [0.5, 1.0]][i][j]);
        let c = Cholesky::exact(&a).unwrap();
        assert_relative_eq!(c.log_det(), (2.0f64 - 0.25).ln(), epsilon = 1e-12);
    }

    #[test]
    fn jitter_rescues_semidefinite_matrix() {
        // Rank one: all ones.
        let a = Mat::from_fn(3, 3, |_, _| 1.0);
        let c = Cholesky::with_jitter(&a, 1.0).unwrap();
        assert!(c.jitter() > 0.0);
        assert!(Cholesky::exact(&Mat::from_fn(2, 2, |i, j| if i == j { -1.0 } else { 0.0 })).is_err());
        assert!(Cholesky::with_jitter(&Mat::from_fn(2, 2, |i, j| if i == j { -1.0 } else { 0.0 }), 1.0).is_err());
    }
}
