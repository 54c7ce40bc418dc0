//! Zero-order outer optimizer: two-point Gaussian-smoothing gradient
//! estimates driving an SGD-style loop over the synthetic dataset.
//!
//! The estimator averages M single-sided difference quotients along i.i.d.
//! standard-normal directions v:
//!
//! ```text
//! g = (1/M) Σ_l  [L(D + σ v_l) − L(D)] / σ · v_l
//! ```
//!
//! which costs exactly M + 1 loss evaluations and is unbiased for quadratics.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::SyntheticDataset;
use crate::error::{DistillError, Result};
use crate::linalg::Mat;
use crate::rng::{child_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSchedule {
    /// s_k = c / sqrt(1 + k).
    InverseSqrt { c: f64 },
    Constant { s: f64 },
    /// s_k = s · factor^floor(k / every).
    StepDecay { s: f64, factor: f64, every: usize },
}

pub fn stepsize(schedule: StepSchedule, k: usize) -> f64 {
    match schedule {
        StepSchedule::InverseSqrt { c } => c / (1.0 + k as f64).sqrt(),
        StepSchedule::Constant { s } => s,
        StepSchedule::StepDecay { s, factor, every } => s * factor.powi((k / every.max(1)) as i32),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoConfig {
    /// Perturbation count M per gradient estimate.
    pub m_perturbations: usize,
    /// Smoothing radius σ.
    pub sigma: f64,
    /// Outer iterations.
    pub iterations: usize,
    pub schedule: StepSchedule,
}

impl Default for ZoConfig {
    /// M = 10 probes and the diminishing rule s = 0.1/sqrt(1 + k).
    fn default() -> Self {
        ZoConfig {
            m_perturbations: 10,
            sigma: 0.05,
            iterations: 100,
            schedule: StepSchedule::InverseSqrt { c: 0.1 },
        }
    }
}

impl ZoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_perturbations == 0 {
            return Err(DistillError::InvalidConfig(
                "m_perturbations must be >= 1".into(),
            ));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(DistillError::InvalidConfig(format!(
                "sigma must be a positive real, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub loss: f64,
}

/// One loss trace entry per iteration; indices strictly increasing.
pub type Trace = Vec<TracePoint>;

fn gaussian_direction(rows: usize, cols: usize, rng: &mut rand::rngs::StdRng) -> Mat {
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Mat::from_vec(rows, cols, data)
}

/// Internal variant that also returns the base-point loss so the outer loop
/// pays the M + 1 evaluations exactly once per iteration.
fn gradient_with_base<L>(
    loss: &L,
    d_hat: &SyntheticDataset,
    cfg: &ZoConfig,
    seed: u64,
) -> Result<(Mat, f64)>
where
    L: Fn(&SyntheticDataset) -> Result<f64>,
{
    cfg.validate()?;
    let base = loss(d_hat)?;
    if !base.is_finite() {
        return Err(DistillError::NonFinite {
            context: "zo probe loss",
            index: 0,
        });
    }
    let (rows, cols) = (d_hat.ipc(), d_hat.n_features());
    let mut rng = rng_from(seed);
    let mut grad = Mat::zeros(rows, cols);
    let mut probe = d_hat.clone();
    for l in 0..cfg.m_perturbations {
        let v = gaussian_direction(rows, cols, &mut rng);
        probe
            .values_mut()
            .data_mut()
            .copy_from_slice(d_hat.values().data());
        probe.values_mut().scaled_add(cfg.sigma, &v);
        let perturbed = loss(&probe)?;
        if !perturbed.is_finite() {
            return Err(DistillError::NonFinite {
                context: "zo probe loss",
                index: l + 1,
            });
        }
        grad.scaled_add((perturbed - base) / (cfg.sigma * cfg.m_perturbations as f64), &v);
    }
    Ok((grad, base))
}

/// Two-point gradient estimate of a scalar functional at `d_hat`.
/// Deterministic per seed; errors identify the offending probe (0 = base).
pub fn two_point_gradient<L>(
    loss: L,
    d_hat: &SyntheticDataset,
    cfg: &ZoConfig,
    seed: u64,
) -> Result<Mat>
where
    L: Fn(&SyntheticDataset) -> Result<f64>,
{
    gradient_with_base(&loss, d_hat, cfg, seed).map(|(g, _)| g)
}

/// Distillation loop: per iteration, the loss closure receives the iteration
/// index (its hook for per-iteration task/batch sampling) and the current
/// synthetic dataset; the dataset moves along the negative estimated
/// gradient under the configured stepsize schedule.
///
/// Aborts with a divergence error (carrying the partial trace) when the
/// sampled loss exceeds 1e6 times the initial magnitude.
pub fn zo_distill<L>(
    loss: L,
    d_init: &SyntheticDataset,
    cfg: &ZoConfig,
    seed: u64,
) -> Result<(SyntheticDataset, Trace)>
where
    L: Fn(usize, &SyntheticDataset) -> Result<f64>,
{
    zo_distill_observed(loss, d_init, cfg, seed, |_, _, _| {})
}

/// [`zo_distill`] with an observer called after every update with
/// (iteration, current dataset, sampled loss at that iteration's base point).
pub fn zo_distill_observed<L, O>(
    loss: L,
    d_init: &SyntheticDataset,
    cfg: &ZoConfig,
    seed: u64,
    mut observer: O,
) -> Result<(SyntheticDataset, Trace)>
where
    L: Fn(usize, &SyntheticDataset) -> Result<f64>,
    O: FnMut(usize, &SyntheticDataset, f64),
{
    cfg.validate()?;
    d_init.validate()?;
    let mut d = d_init.clone();
    let mut trace = Trace::with_capacity(cfg.iterations);
    let mut guard: Option<f64> = None;
    for k in 0..cfg.iterations {
        let iter_loss = |probe: &SyntheticDataset| loss(k, probe);
        let (grad, base) = gradient_with_base(&iter_loss, &d, cfg, child_seed(seed, k as u64))?;
        let limit = *guard.get_or_insert(1e6 * base.abs().max(1e-6));
        if base > limit {
            return Err(DistillError::Divergence {
                iteration: k,
                loss: base,
                limit,
                trace: trace.iter().map(|p| (p.iteration, p.loss)).collect(),
            });
        }
        trace.push(TracePoint {
            iteration: k,
            loss: base,
        });
        let s = stepsize(cfg.schedule, k);
        d.values_mut().scaled_add(-s, &grad);
        observer(k, &d, base);
    }
    Ok((d, trace))
}
