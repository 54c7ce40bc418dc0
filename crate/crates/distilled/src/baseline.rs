//! Sanity baselines: mean-matching in data space and uniform subsampling.

use rand::Rng;

use crate::dataset::{ColumnSpec, SyntheticDataset};
use crate::error::{DistillError, Result};
use crate::linalg::Mat;
use crate::rng::rng_from;

/// Distribution-matching surrogate with an identity encoder: the squared
/// distance between the column means of the synthetic set and the training
/// set, together with its exact gradient with respect to every synthetic
/// entry (2/ipc times the mean gap, broadcast down each column).
pub fn distribution_match_objective(
    d_hat: &SyntheticDataset,
    train: &Mat,
) -> Result<(f64, Mat)> {
    let cols = d_hat.n_features();
    if train.cols() != cols {
        return Err(DistillError::ShapeMismatch {
            context: "distribution_match_objective",
            expected: cols,
            got: train.cols(),
        });
    }
    if train.rows() == 0 {
        return Err(DistillError::NoSamples("distribution_match train"));
    }
    let ipc = d_hat.ipc() as f64;
    let gaps: Vec<f64> = (0..cols)
        .map(|c| d_hat.values().column_mean(c) - train.column_mean(c))
        .collect();
    let value = gaps.iter().map(|g| g * g).sum();
    let mut grad = Mat::zeros(d_hat.ipc(), cols);
    for r in 0..d_hat.ipc() {
        for c in 0..cols {
            grad.set(r, c, 2.0 / ipc * gaps[c]);
        }
    }
    Ok((value, grad))
}

/// Uniform subsample of `ipc` training rows without replacement,
/// deterministic per seed. The paper-style strong baseline: same quantity of
/// clean, fully observed rows.
pub fn sample_subset_baseline(
    train: &Mat,
    schema: &[ColumnSpec],
    ipc: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    let (mat, _) = sample_rows(train, ipc, seed)?;
    SyntheticDataset::new(schema.to_vec(), mat)
}

/// Partial Fisher–Yates draw of `ipc` distinct row indices; also returns
/// which source rows were taken.
pub fn sample_rows(train: &Mat, ipc: usize, seed: u64) -> Result<(Mat, Vec<usize>)> {
    if ipc > train.rows() {
        return Err(DistillError::IpcTooLarge {
            ipc,
            rows: train.rows(),
        });
    }
    if ipc == 0 {
        return Err(DistillError::NoSamples("sample_rows ipc"));
    }
    let mut rng = rng_from(seed);
    let mut idx: Vec<usize> = (0..train.rows()).collect();
    for i in 0..ipc {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    idx.truncate(ipc);
    let mut out = Mat::zeros(ipc, train.cols());
    for (r, &src) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(train.row(src));
    }
    Ok((out, idx))
}
