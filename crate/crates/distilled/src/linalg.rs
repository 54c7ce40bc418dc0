//! Minimal dense linear algebra for the small systems this crate solves
//! (normal equations with ≤ 4 unknowns, joint Gaussians up to a few hundred
//! dimensions). Row-major `Vec<f64>` storage, Cholesky for SPD solves.

use serde::{Deserialize, Serialize};

use crate::error::{DistillError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in &rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: n_rows,
            cols: n_cols,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn column_mean(&self, c: usize) -> f64 {
        assert!(self.rows > 0);
        (0..self.rows).map(|r| self.get(r, c)).sum::<f64>() / self.rows as f64
    }

    pub fn column_std(&self, c: usize) -> f64 {
        let m = self.column_mean(c);
        let var = (0..self.rows)
            .map(|r| {
                let d = self.get(r, c) - m;
                d * d
            })
            .sum::<f64>()
            / self.rows as f64;
        var.sqrt()
    }

    /// Frobenius norm squared.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &Mat) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += alpha * b;
        }
    }
}

/// Cholesky factor L (lower triangular) of an SPD matrix.
pub struct Cholesky {
    n: usize,
    l: Vec<f64>, // row-major lower triangle, full n×n storage
}

/// Factor a symmetric positive-definite matrix. Returns None when a pivot
/// drops below `1e-12 · max_diag`, signalling (near-)singularity.
pub fn cholesky(a: &Mat) -> Option<Cholesky> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let max_diag = (0..n).map(|i| a.get(i, i)).fold(0.0f64, f64::max);
    let tol = 1e-12 * max_diag.max(1e-300);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= tol {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(Cholesky { n, l })
}

impl Cholesky {
    /// Solve A x = b via forward/back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    /// log det A = 2 Σ log L_ii.
    pub fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| self.l[i * self.n + i].ln())
            .sum::<f64>()
            * 2.0
    }
}

/// Least squares for y ≈ X β via normal equations. Falls back to a ridge
/// solve (λ = 1e-6) on a singular Gram matrix; the flag reports which path
/// was taken.
pub struct LstSq {
    pub beta: Vec<f64>,
    pub ridged: bool,
}

pub fn lstsq(x: &Mat, y: &[f64]) -> Result<LstSq> {
    if x.rows() != y.len() {
        return Err(DistillError::ShapeMismatch {
            context: "lstsq",
            expected: x.rows(),
            got: y.len(),
        });
    }
    let p = x.cols();
    let mut gram = Mat::zeros(p, p);
    let mut rhs = vec![0.0; p];
    for r in 0..x.rows() {
        let row = x.row(r);
        for i in 0..p {
            rhs[i] += row[i] * y[r];
            for j in 0..=i {
                let v = gram.get(i, j) + row[i] * row[j];
                gram.set(i, j, v);
                gram.set(j, i, v);
            }
        }
    }
    solve_moments(&gram, &rhs)
}

/// Solve (G + optional λI) β = rhs where G is a Gram / second-moment matrix.
pub fn solve_moments(gram: &Mat, rhs: &[f64]) -> Result<LstSq> {
    if let Some(ch) = cholesky(gram) {
        return Ok(LstSq {
            beta: ch.solve(rhs),
            ridged: false,
        });
    }
    let p = gram.rows();
    let mut ridged = gram.clone();
    for i in 0..p {
        ridged.set(i, i, ridged.get(i, i) + 1e-6);
    }
    let ch = cholesky(&ridged).ok_or(DistillError::NoSamples("degenerate gram matrix"))?;
    Ok(LstSq {
        beta: ch.solve(rhs),
        ridged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Mat::from_rows(vec![vec![4.0, 2.0], vec![2.0, 3.0]]);
        let ch = cholesky(&a).unwrap();
        let x = ch.solve(&[8.0, 7.0]);
        // A x = b with x = (1.25, 1.5)
        assert!((x[0] - 1.25).abs() < 1e-12);
        assert!((x[1] - 1.5).abs() < 1e-12);
        assert!((ch.log_det() - (4.0f64 * 3.0 - 4.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = Mat::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(cholesky(&a).is_none());
    }

    #[test]
    fn lstsq_recovers_exact_line() {
        // y = 2 x + 1 with design [1, x]
        let x = Mat::from_rows(vec![
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 3.0],
        ]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = lstsq(&x, &y).unwrap();
        assert!(!fit.ridged);
        assert!((fit.beta[0] - 1.0).abs() < 1e-10);
        assert!((fit.beta[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn lstsq_ridges_collinear_design() {
        let x = Mat::from_rows(vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]);
        let y = [2.0, 4.0, 6.0];
        let fit = lstsq(&x, &y).unwrap();
        assert!(fit.ridged);
        // Ridge splits the weight between the duplicated columns.
        assert!((fit.beta[0] + fit.beta[1] - 2.0).abs() < 1e-3);
    }
}
