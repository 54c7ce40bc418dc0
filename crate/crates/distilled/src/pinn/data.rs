//! Boundary-condition sampling and lattice data generation for the
//! Laplace-on-disk problem y(1, θ) = cos θ + α, with train and test α drawn
//! from opposite tails of a standard normal.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DistillError, Result};
use crate::rng::rng_from;

/// Labeled points for one boundary condition: interior (r, θ, y) triples and
/// boundary (θ, g) pairs at the implicit r = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnDataset {
    pub alpha: f64,
    pub interior: Vec<[f64; 3]>,
    pub boundary: Vec<[f64; 2]>,
}

impl PinnDataset {
    pub fn n_points(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailSide {
    /// α < Q(a): the training tail.
    TrainLower,
    /// α > Q(1 − a): the held-out test tail.
    TestUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPrior {
    pub tail_quantile_a: f64,
    pub side: TailSide,
}

impl BoundaryPrior {
    pub fn new(tail_quantile_a: f64, side: TailSide) -> Result<Self> {
        if !(tail_quantile_a > 0.0 && tail_quantile_a <= 0.5) {
            return Err(DistillError::InvalidConfig(format!(
                "tail quantile a must lie in (0, 0.5], got {tail_quantile_a}"
            )));
        }
        Ok(BoundaryPrior {
            tail_quantile_a,
            side,
        })
    }
}

/// Standard normal quantile (inverse CDF) via Acklam's rational
/// approximation; absolute error below 1e-8 over (0, 1).
pub fn standard_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile defined on (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Rejection-sample one tail-restricted α.
fn sample_alpha(prior: BoundaryPrior, rng: &mut rand::rngs::StdRng) -> f64 {
    let a = prior.tail_quantile_a;
    loop {
        let z: f64 = StandardNormal.sample(rng);
        match prior.side {
            TailSide::TrainLower if z < standard_normal_quantile(a) => return z,
            TailSide::TestUpper if z > standard_normal_quantile(1.0 - a) => return z,
            _ => continue,
        }
    }
}

/// Evenly spaced polar lattice: `n_interior` points on an n_r × n_θ grid
/// over (0, 1) × [0, 2π) (origin excluded so θ stays meaningful), plus
/// `n_boundary` evenly spaced boundary angles.
pub fn polar_lattice(n_interior: usize, n_boundary: usize) -> (Vec<(f64, f64)>, Vec<f64>) {
    let n_r = (n_interior as f64).sqrt().floor().max(1.0) as usize;
    let n_theta = n_interior.div_ceil(n_r);
    let mut interior = Vec::with_capacity(n_interior);
    'outer: for i in 0..n_r {
        let r = (i + 1) as f64 / (n_r + 1) as f64;
        for j in 0..n_theta {
            if interior.len() == n_interior {
                break 'outer;
            }
            interior.push((r, 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64));
        }
    }
    let boundary = (0..n_boundary)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_boundary.max(1) as f64)
        .collect();
    (interior, boundary)
}

/// The known solution of the disk problem for boundary offset α.
pub fn exact_solution(r: f64, theta: f64, alpha: f64) -> f64 {
    r * theta.cos() + alpha
}

/// Generate `n_bcs` datasets, one per sampled boundary condition, on a
/// shared lattice. Labels come from the analytic solution; Gaussian noise of
/// std `noise_std` is added to labels (pass 0 for clean test data).
pub fn generate_pinn_data(
    prior: BoundaryPrior,
    n_bcs: usize,
    n_interior: usize,
    n_boundary: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Vec<PinnDataset>> {
    if n_bcs == 0 || n_interior == 0 || n_boundary == 0 {
        return Err(DistillError::NoSamples("generate_pinn_data counts"));
    }
    let (lattice, boundary_thetas) = polar_lattice(n_interior, n_boundary);
    let mut rng = rng_from(seed);
    let mut out = Vec::with_capacity(n_bcs);
    for _ in 0..n_bcs {
        let alpha = sample_alpha(prior, &mut rng);
        let mut noise = |std: f64| -> f64 {
            if std > 0.0 {
                std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            } else {
                0.0
            }
        };
        let interior = lattice
            .iter()
            .map(|&(r, th)| [r, th, exact_solution(r, th, alpha) + noise(noise_std)])
            .collect();
        let boundary = boundary_thetas
            .iter()
            .map(|&th| [th, exact_solution(1.0, th, alpha) + noise(noise_std)])
            .collect();
        out.push(PinnDataset {
            alpha,
            interior,
            boundary,
        });
    }
    Ok(out)
}

/// Pool every labeled point of a collection of datasets as (role, r, θ, y)
/// rows, boundary first — the sampling frame for the subset baseline.
pub fn pooled_points(bcs: &[PinnDataset]) -> (Vec<[f64; 2]>, Vec<[f64; 3]>) {
    let mut boundary = Vec::new();
    let mut interior = Vec::new();
    for bc in bcs {
        boundary.extend_from_slice(&bc.boundary);
        interior.extend_from_slice(&bc.interior);
    }
    (boundary, interior)
}

/// Uniform subsample of pooled train points with the same boundary/interior
/// split as a distilled set of the same size.
pub fn subset_baseline_points(
    bcs: &[PinnDataset],
    n_boundary_rows: usize,
    n_interior_rows: usize,
    seed: u64,
) -> Result<PinnDataset> {
    let (bnd, int) = pooled_points(bcs);
    if n_boundary_rows > bnd.len() || n_interior_rows > int.len() {
        return Err(DistillError::IpcTooLarge {
            ipc: n_boundary_rows + n_interior_rows,
            rows: bnd.len() + int.len(),
        });
    }
    let mut rng = rng_from(seed);
    let pick = |pool_len: usize, k: usize, rng: &mut rand::rngs::StdRng| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..pool_len).collect();
        for i in 0..k {
            let j = rng.gen_range(i..pool_len);
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx
    };
    let bsel = pick(bnd.len(), n_boundary_rows, &mut rng);
    let isel = pick(int.len(), n_interior_rows, &mut rng);
    Ok(PinnDataset {
        alpha: 0.0,
        interior: isel.into_iter().map(|i| int[i]).collect(),
        boundary: bsel.into_iter().map(|i| bnd[i]).collect(),
    })
}
