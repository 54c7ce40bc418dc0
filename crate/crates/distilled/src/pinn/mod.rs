//! Physics-informed network pipeline for the Laplace equation on the unit
//! disk, r y_r + r² y_rr + y_θθ = 0 with Dirichlet data y(1, θ) = cos θ + α.
//!
//! The synthetic dataset is a point cloud with columns (r, theta, y); its
//! first `boundary_rows` rows are boundary samples (θ, y) at r = 1 and the
//! remainder interior samples. Reconstructing the PDE for a boundary
//! condition means retraining with that condition's boundary data imposed
//! and the synthetic interior re-levelled to it ([`ood_test_error`]); the
//! distillation search drives the budgeted (1+1)-ES from [`crate::dfo`] on
//! a risk (CVaR by default) of exactly that reconstruction error across
//! training conditions ([`adapted_reconstruction_risk`]), with held-out
//! test-tail conditions reserved for reporting.

mod data;
mod jet;
mod mlp;

pub use data::{
    exact_solution, generate_pinn_data, polar_lattice, pooled_points, standard_normal_quantile,
    subset_baseline_points, BoundaryPrior, PinnDataset, TailSide,
};
pub use jet::Jet2;
pub use mlp::{AdamParams, AdamState, Mlp};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{pinn_schema, SyntheticDataset};
use crate::dfo::{dfo_search_observed, DfoConfig};
use crate::error::{DistillError, Result};
use crate::linalg::Mat;
use crate::risk::{risk_aggregate, RiskMeasure};
use crate::rng::{child_seed, rng_from};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Value, first and pure second derivatives with respect to (r, θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub second: [f64; 2],
}

/// Anything evaluable with exact second-order input derivatives.
pub trait Surface {
    fn eval(&self, r: f64, theta: f64) -> SecondOrderEval;

    fn value(&self, r: f64, theta: f64) -> f64 {
        self.eval(r, theta).value
    }
}

impl Surface for Mlp {
    fn eval(&self, r: f64, theta: f64) -> SecondOrderEval {
        second_order_eval(self, r, theta)
    }

    fn value(&self, r: f64, theta: f64) -> f64 {
        Mlp::value(self, r, theta)
    }
}

/// The analytic solution family y = r cos θ + α; exactly harmonic.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    pub alpha: f64,
}

impl Surface for ExactSolution {
    fn eval(&self, r: f64, theta: f64) -> SecondOrderEval {
        SecondOrderEval {
            value: r * theta.cos() + self.alpha,
            grad: [theta.cos(), -r * theta.sin()],
            second: [0.0, -r * theta.cos()],
        }
    }
}

/// Exact network derivatives from two jet passes, one per input coordinate.
pub fn second_order_eval(net: &Mlp, r: f64, theta: f64) -> SecondOrderEval {
    let (jr, _) = net.forward_jet(r, theta, 0);
    let (jt, _) = net.forward_jet(r, theta, 1);
    SecondOrderEval {
        value: jr.v,
        grad: [jr.d, jt.d],
        second: [jr.dd, jt.dd],
    }
}

/// Residual of the polar Laplace equation: r y_r + r² y_rr + y_θθ.
pub fn laplace_residual(eval: &SecondOrderEval, r: f64) -> f64 {
    r * eval.grad[0] + r * r * eval.second[0] + eval.second[1]
}

/// Prediction and residual terms of the PINN loss, computed independently:
/// mean squared label error over all labeled points, and mean squared PDE
/// residual over interior points.
pub fn pinn_loss_parts(net: &impl Surface, data: &PinnDataset) -> Result<(f64, f64)> {
    if data.n_points() == 0 {
        return Err(DistillError::NoSamples("pinn dataset"));
    }
    let mut pred = 0.0;
    let mut residual = 0.0;
    for &[r, th, y] in &data.interior {
        let e = net.eval(r, th);
        pred += (e.value - y) * (e.value - y);
        let res = laplace_residual(&e, r);
        residual += res * res;
    }
    for &[th, g] in &data.boundary {
        let v = net.value(1.0, th);
        pred += (v - g) * (v - g);
    }
    pred /= data.n_points() as f64;
    if !data.interior.is_empty() {
        residual /= data.interior.len() as f64;
    }
    Ok((pred, residual))
}

/// Full PINN loss: prediction MSE plus `residual_weight` times the mean
/// squared Laplace residual.
pub fn pinn_loss(net: &impl Surface, data: &PinnDataset, residual_weight: f64) -> Result<f64> {
    let (pred, residual) = pinn_loss_parts(net, data)?;
    Ok(pred + residual_weight * residual)
}

/// Inner-training configuration shared by every place a PINN gets fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinnTrainConfig {
    pub widths: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub residual_weight: f64,
    pub net_seed: u64,
}

impl Default for PinnTrainConfig {
    fn default() -> Self {
        PinnTrainConfig {
            widths: vec![2, 32, 32, 32, 1],
            epochs: 1000,
            lr: 0.001,
            residual_weight: 1.0,
            net_seed: 0,
        }
    }
}

/// Full-batch PINN loss and its exact parameter gradient: reverse
/// accumulation through the jet passes for interior points (prediction and
/// residual adjoints together), plain backprop for boundary points. `grads`
/// is overwritten.
pub fn pinn_loss_and_grads(
    net: &Mlp,
    data: &PinnDataset,
    residual_weight: f64,
    grads: &mut [f64],
) -> Result<f64> {
    if data.n_points() == 0 {
        return Err(DistillError::NoSamples("pinn_loss_and_grads data"));
    }
    grads.iter_mut().for_each(|g| *g = 0.0);
    let n_lab = data.n_points() as f64;
    let n_int = data.interior.len().max(1) as f64;
    let mut loss = 0.0;
    for &[r, th, y] in &data.interior {
        let (jr, trace_r) = net.forward_jet(r, th, 0);
        let (jt, trace_t) = net.forward_jet(r, th, 1);
        let err = jr.v - y;
        let res = r * jr.d + r * r * jr.dd + jt.dd;
        loss += err * err / n_lab + residual_weight * res * res / n_int;
        let gres = 2.0 * residual_weight * res / n_int;
        net.backward_jet(&trace_r, (2.0 * err / n_lab, gres * r, gres * r * r), grads);
        net.backward_jet(&trace_t, (0.0, 0.0, gres), grads);
    }
    for &[th, g] in &data.boundary {
        let (v, trace) = net.forward_value(1.0, th);
        let err = v - g;
        loss += err * err / n_lab;
        net.backward_value(&trace, 2.0 * err / n_lab, grads);
    }
    Ok(loss)
}

/// Full-batch Adam on the PINN loss; parameter gradients flow by reverse
/// accumulation through the jet passes, including the residual term.
/// Deterministic per seed. Aborts with the epoch index on a non-finite loss.
pub fn train_pinn(data: &PinnDataset, cfg: &PinnTrainConfig) -> Result<Mlp> {
    if data.n_points() == 0 {
        return Err(DistillError::NoSamples("train_pinn data"));
    }
    let mut net = Mlp::new(&cfg.widths, cfg.net_seed)?;
    let mut adam = AdamState::new(net.n_params());
    let adam_params = AdamParams::with_lr(cfg.lr);
    let mut grads = vec![0.0; net.n_params()];
    for epoch in 0..cfg.epochs {
        let loss = pinn_loss_and_grads(&net, data, cfg.residual_weight, &mut grads)?;
        if !loss.is_finite() {
            return Err(DistillError::TrainingDiverged { epoch });
        }
        adam.step(net.params_mut(), &grads, adam_params);
    }
    Ok(net)
}

/// Interpret the first `boundary_rows` rows of a (r, theta, y) synthetic
/// dataset as boundary samples and the rest as interior points, wrapping θ
/// into [0, 2π) and clamping interior r into [0, 1].
pub fn synthetic_to_pinn(d: &SyntheticDataset, boundary_rows: usize) -> Result<PinnDataset> {
    if d.n_features() != 3 {
        return Err(DistillError::ShapeMismatch {
            context: "pinn synthetic dataset",
            expected: 3,
            got: d.n_features(),
        });
    }
    if boundary_rows > d.ipc() {
        return Err(DistillError::IpcTooLarge {
            ipc: boundary_rows,
            rows: d.ipc(),
        });
    }
    let v = d.values();
    let mut boundary = Vec::with_capacity(boundary_rows);
    let mut interior = Vec::with_capacity(d.ipc() - boundary_rows);
    for row in 0..d.ipc() {
        let theta = v.get(row, 1).rem_euclid(TWO_PI);
        let y = v.get(row, 2);
        if row < boundary_rows {
            boundary.push([theta, y]);
        } else {
            interior.push([v.get(row, 0).clamp(0.0, 1.0), theta, y]);
        }
    }
    Ok(PinnDataset {
        alpha: 0.0,
        interior,
        boundary,
    })
}

/// Pack points into a synthetic dataset, boundary rows first (r pinned at 1).
pub fn pinn_to_synthetic(data: &PinnDataset) -> Result<SyntheticDataset> {
    let mut rows = Vec::with_capacity(data.n_points());
    for &[th, g] in &data.boundary {
        rows.push(vec![1.0, th, g]);
    }
    for &[r, th, y] in &data.interior {
        rows.push(vec![r, th, y]);
    }
    SyntheticDataset::new(pinn_schema(), Mat::from_rows(rows))
}

/// A surface plus a constant level offset; derivatives are untouched.
pub struct OffsetSurface<'a, S: Surface> {
    pub inner: &'a S,
    pub offset: f64,
}

impl<S: Surface> Surface for OffsetSurface<'_, S> {
    fn eval(&self, r: f64, theta: f64) -> SecondOrderEval {
        let mut e = self.inner.eval(r, theta);
        e.value += self.offset;
        e
    }

    fn value(&self, r: f64, theta: f64) -> f64 {
        self.inner.value(r, theta) + self.offset
    }
}

/// The outer distillation objective: train one PINN on the synthetic set,
/// evaluate its loss on every training boundary condition, aggregate under
/// the risk measure. This is the scalar the derivative-free search minimizes.
///
/// Each per-condition loss is taken on the level-adapted network: the
/// network is shifted by the constant minimizing that condition's squared
/// prediction error (its mean residual) before scoring, exactly as a
/// deployed network always has its level pinned by the boundary condition it
/// reconstructs. Without this the level gap across the boundary prior —
/// irreducible for a single network and independent of synthetic-data
/// quality — drowns the shape signal the search needs. The optimal shift
/// never increases a condition's loss, so with one condition this stays
/// within the level-fit error of the plain post-training loss.
pub fn outer_objective(
    d_hat: &SyntheticDataset,
    boundary_rows: usize,
    train_bcs: &[PinnDataset],
    risk: RiskMeasure,
    cfg: &PinnTrainConfig,
) -> Result<f64> {
    let data = synthetic_to_pinn(d_hat, boundary_rows)?;
    let net = train_pinn(&data, cfg)?;
    let losses = train_bcs
        .iter()
        .map(|bc| {
            let shifted = OffsetSurface {
                inner: &net,
                offset: optimal_level_shift(&net, bc),
            };
            pinn_loss(&shifted, bc, cfg.residual_weight)
        })
        .collect::<Result<Vec<f64>>>()?;
    risk_aggregate(risk, &losses)
}

/// The constant shift minimizing a condition's squared prediction error:
/// the mean residual over its labeled points.
fn optimal_level_shift(net: &impl Surface, bc: &PinnDataset) -> f64 {
    let mut sum = 0.0;
    for &[r, th, y] in &bc.interior {
        sum += y - net.value(r, th);
    }
    for &[th, g] in &bc.boundary {
        sum += g - net.value(1.0, th);
    }
    sum / bc.n_points().max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Error {
    pub value: f64,
    /// True when some reference was identically zero and the absolute norm
    /// was reported instead of the relative one.
    pub absolute_fallback: bool,
}

/// Relative L2 error sqrt(Σ(ŷ−y)² / Σy²) per boundary condition, averaged
/// over the given test conditions.
pub fn l2_test_error(net: &impl Surface, test_bcs: &[PinnDataset]) -> Result<L2Error> {
    if test_bcs.is_empty() {
        return Err(DistillError::NoSamples("l2_test_error"));
    }
    let mut total = 0.0;
    let mut fallback = false;
    for bc in test_bcs {
        let mut num = 0.0;
        let mut den = 0.0;
        for &[r, th, y] in &bc.interior {
            let v = net.value(r, th);
            num += (v - y) * (v - y);
            den += y * y;
        }
        for &[th, g] in &bc.boundary {
            let v = net.value(1.0, th);
            num += (v - g) * (v - g);
            den += g * g;
        }
        if den == 0.0 {
            fallback = true;
            total += num.sqrt();
        } else {
            total += (num / den).sqrt();
        }
    }
    Ok(L2Error {
        value: total / test_bcs.len() as f64,
        absolute_fallback: fallback,
    })
}

/// Out-of-distribution evaluation: for each held-out boundary condition,
/// train a PINN on the synthetic set's interior points with that condition's
/// boundary data imposed, and measure the relative L2 reconstruction error
/// on the condition's points.
///
/// The synthetic set's own boundary rows are replaced by the imposed
/// condition, and the interior labels are re-levelled once before training:
/// solutions of the disk problem differ across boundary conditions only by
/// the constant offset α, so the transferable content of the synthetic
/// interior is its labels modulo a constant, with the level supplied by the
/// imposed boundary data. Levels are read off through the known boundary
/// family (g − cos θ on the boundary, y − r cos θ inside).
/// Level of a point set read through the boundary family: mean of
/// y − r cos θ.
fn interior_level(interior: &[[f64; 3]]) -> f64 {
    interior
        .iter()
        .map(|&[r, th, y]| y - r * th.cos())
        .sum::<f64>()
        / interior.len().max(1) as f64
}

fn boundary_level(boundary: &[[f64; 2]]) -> f64 {
    boundary.iter().map(|&[th, g]| g - th.cos()).sum::<f64>() / boundary.len().max(1) as f64
}

/// Reconstruct one boundary condition from synthetic interior data: impose
/// the condition's boundary points, re-level the interior labels to it, and
/// train.
fn adapted_solve(
    interior: &[[f64; 3]],
    own_level: f64,
    bc: &PinnDataset,
    cfg: &PinnTrainConfig,
) -> Result<Mlp> {
    let shift = boundary_level(&bc.boundary) - own_level;
    let adapted = PinnDataset {
        alpha: bc.alpha,
        interior: interior.iter().map(|&[r, th, y]| [r, th, y + shift]).collect(),
        boundary: bc.boundary.clone(),
    };
    train_pinn(&adapted, cfg)
}

pub fn ood_test_error(
    d_hat: &SyntheticDataset,
    boundary_rows: usize,
    test_bcs: &[PinnDataset],
    cfg: &PinnTrainConfig,
) -> Result<L2Error> {
    if test_bcs.is_empty() {
        return Err(DistillError::NoSamples("ood_test_error"));
    }
    let base = synthetic_to_pinn(d_hat, boundary_rows)?;
    if base.interior.is_empty() {
        return Err(DistillError::NoSamples("ood_test_error interior"));
    }
    let own_level = interior_level(&base.interior);
    let mut total = 0.0;
    let mut fallback = false;
    for bc in test_bcs {
        let net = adapted_solve(&base.interior, own_level, bc, cfg)?;
        let err = l2_test_error(&net, std::slice::from_ref(bc))?;
        fallback |= err.absolute_fallback;
        total += err.value;
    }
    Ok(L2Error {
        value: total / test_bcs.len() as f64,
        absolute_fallback: fallback,
    })
}

/// Risk of the adapted reconstruction error across boundary conditions: the
/// deployment computation itself (relative L2 of the per-condition adapted
/// solve), as a sample average over the given conditions. This is the scalar
/// the distillation search minimizes; using the very computation the
/// synthetic data exists for keeps the search aligned with the reported
/// test protocol.
pub fn adapted_reconstruction_risk(
    d_hat: &SyntheticDataset,
    boundary_rows: usize,
    bcs: &[PinnDataset],
    risk: RiskMeasure,
    cfg: &PinnTrainConfig,
) -> Result<f64> {
    let base = synthetic_to_pinn(d_hat, boundary_rows)?;
    if base.interior.is_empty() {
        return Err(DistillError::NoSamples("adapted_reconstruction_risk"));
    }
    let own_level = interior_level(&base.interior);
    let losses = bcs
        .iter()
        .map(|bc| {
            let net = adapted_solve(&base.interior, own_level, bc, cfg)?;
            Ok(l2_test_error(&net, std::slice::from_ref(bc))?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    risk_aggregate(risk, &losses)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PinnInit {
    /// Standard normal entries in standardized coordinates; the paper's
    /// choice for the smallest synthetic sets.
    GaussianNoise,
    /// Subsample of pooled training points.
    SubsampleTrain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub budget: usize,
    pub best_outer_loss: f64,
    pub test_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinnDistillReport {
    pub checkpoints: Vec<BudgetPoint>,
    pub final_outer_loss: f64,
    pub final_test_l2: f64,
}

#[derive(Debug, Clone)]
pub struct PinnDistillOutcome {
    pub dataset: SyntheticDataset,
    pub boundary_rows: usize,
    pub report: PinnDistillReport,
}

/// Number of boundary rows a distilled set of `ipc` rows carries: roughly a
/// tenth, never zero.
pub fn boundary_row_count(ipc: usize) -> usize {
    ipc.div_ceil(10)
}

/// Distill a synthetic point cloud against the training boundary conditions.
///
/// The search runs in per-column standardized coordinates (train-set scale)
/// and minimizes [`adapted_reconstruction_risk`] over `outer_eval_bcs`
/// training conditions (evenly spread through `train_bcs` and fixed for the
/// whole run, keeping the objective static and deterministic). The incumbent
/// is snapshotted at each requested budget checkpoint; each checkpoint row
/// reports the incumbent's outer loss and its OOD test error against
/// `test_bcs`, which the objective never sees.
#[allow(clippy::too_many_arguments)]
pub fn distill_pinn(
    train_bcs: &[PinnDataset],
    test_bcs: &[PinnDataset],
    ipc: usize,
    dfo_cfg: &DfoConfig,
    init_mode: PinnInit,
    risk: RiskMeasure,
    train_cfg: &PinnTrainConfig,
    outer_eval_bcs: usize,
    checkpoints: &[usize],
    seed: u64,
) -> Result<PinnDistillOutcome> {
    if ipc < 4 {
        return Err(DistillError::InvalidConfig(format!(
            "pinn distillation needs ipc >= 4, got {ipc}"
        )));
    }
    if train_bcs.is_empty() {
        return Err(DistillError::NoSamples("distill_pinn train conditions"));
    }
    let k_eval = outer_eval_bcs.clamp(1, train_bcs.len());
    let eval_bcs: Vec<PinnDataset> = (0..k_eval)
        .map(|i| train_bcs[i * train_bcs.len() / k_eval].clone())
        .collect();
    let b_rows = boundary_row_count(ipc);

    // Column scales from the pooled training cloud.
    let (bnd, int) = pooled_points(train_bcs);
    let mut pooled = Vec::with_capacity(bnd.len() + int.len());
    for &[th, g] in &bnd {
        pooled.push(vec![1.0, th, g]);
    }
    for &[r, th, y] in &int {
        pooled.push(vec![r, th, y]);
    }
    let pooled = Mat::from_rows(pooled);
    let mu: Vec<f64> = (0..3).map(|c| pooled.column_mean(c)).collect();
    let sd: Vec<f64> = (0..3).map(|c| pooled.column_std(c).max(1e-6)).collect();

    let standardize = |m: &Mat| {
        let mut z = m.clone();
        for r in 0..z.rows() {
            for c in 0..3 {
                z.set(r, c, (m.get(r, c) - mu[c]) / sd[c]);
            }
        }
        z
    };
    let destandardize = |z: &Mat| {
        let mut m = z.clone();
        for r in 0..z.rows() {
            for c in 0..3 {
                m.set(r, c, z.get(r, c) * sd[c] + mu[c]);
            }
        }
        m
    };

    let init_values = match init_mode {
        PinnInit::GaussianNoise => {
            let mut rng = rng_from(child_seed(seed, 0));
            Mat::from_vec(
                ipc,
                3,
                (0..ipc * 3)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect::<Vec<f64>>(),
            )
        }
        PinnInit::SubsampleTrain => {
            let sub =
                subset_baseline_points(train_bcs, b_rows, ipc - b_rows, child_seed(seed, 0))?;
            standardize(pinn_to_synthetic(&sub)?.values())
        }
    };
    let d_init = SyntheticDataset::new(pinn_schema(), init_values)?;

    let objective = |z: &SyntheticDataset| -> Result<f64> {
        let real = z.with_values(destandardize(z.values()))?;
        adapted_reconstruction_risk(&real, b_rows, &eval_bcs, risk, train_cfg)
    };

    let mut wanted: Vec<usize> = checkpoints
        .iter()
        .copied()
        .filter(|&b| b <= dfo_cfg.budget)
        .collect();
    wanted.sort_unstable();
    wanted.dedup();
    let mut snapshots: Vec<(usize, f64, SyntheticDataset)> = Vec::new();
    let outcome = dfo_search_observed(
        objective,
        &d_init,
        dfo_cfg,
        child_seed(seed, 1),
        |eval, best, best_loss| {
            if wanted.binary_search(&eval).is_ok() {
                snapshots.push((eval, best_loss, best.clone()));
            }
        },
    )?;

    let mut budget_points = Vec::with_capacity(snapshots.len());
    for (budget, best_loss, z) in &snapshots {
        let real = sanitize(&z.with_values(destandardize(z.values()))?, b_rows)?;
        let l2 = ood_test_error(&real, b_rows, test_bcs, train_cfg)?;
        budget_points.push(BudgetPoint {
            budget: *budget,
            best_outer_loss: *best_loss,
            test_l2: l2.value,
        });
    }

    let final_real = sanitize(
        &outcome.best.with_values(destandardize(outcome.best.values()))?,
        b_rows,
    )?;
    let final_l2 = ood_test_error(&final_real, b_rows, test_bcs, train_cfg)?;
    let report = PinnDistillReport {
        checkpoints: budget_points,
        final_outer_loss: outcome.best_loss,
        final_test_l2: final_l2.value,
    };
    Ok(PinnDistillOutcome {
        dataset: final_real,
        boundary_rows: b_rows,
        report,
    })
}

/// Clamp/wrap a synthetic point cloud into the PinnDataset invariant ranges.
fn sanitize(d: &SyntheticDataset, boundary_rows: usize) -> Result<SyntheticDataset> {
    let mut v = d.values().clone();
    for row in 0..v.rows() {
        let theta = v.get(row, 1).rem_euclid(TWO_PI);
        v.set(row, 1, theta);
        if row < boundary_rows {
            v.set(row, 0, 1.0);
        } else {
            v.set(row, 0, v.get(row, 0).clamp(0.0, 1.0));
        }
    }
    d.with_values(v)
}

pub mod io {
    //! Point clouds persist as CSV with columns role,r,theta,y; boundary
    //! rows carry r = 1 and their label in the y column.

    use std::io::Write;
    use std::path::Path;

    use super::{PinnDataset, SyntheticDataset};
    use crate::error::{DistillError, Result};

    pub fn write_points_csv(data: &PinnDataset, path: &Path) -> Result<()> {
        let mut out = String::from("role,r,theta,y\n");
        for &[th, g] in &data.boundary {
            out.push_str(&format!("boundary,1,{th},{g}\n"));
        }
        for &[r, th, y] in &data.interior {
            out.push_str(&format!("interior,{r},{th},{y}\n"));
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn write_synthetic_csv(
        d: &SyntheticDataset,
        boundary_rows: usize,
        path: &Path,
    ) -> Result<()> {
        let data = super::synthetic_to_pinn(d, boundary_rows)?;
        write_points_csv(&data, path)
    }

    pub fn read_points_csv(path: &Path) -> Result<PinnDataset> {
        let text = std::fs::read_to_string(path)?;
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for line in text.lines().skip(1) {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(DistillError::InvalidConfig(format!(
                    "bad point row {line:?} in {}",
                    path.display()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse().map_err(|_| {
                    DistillError::InvalidConfig(format!("bad number {s:?} in {}", path.display()))
                })
            };
            let (r, th, y) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
            match fields[0] {
                "boundary" => boundary.push([th, y]),
                _ => interior.push([r, th, y]),
            }
        }
        Ok(PinnDataset {
            alpha: 0.0,
            interior,
            boundary,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_dataset(alpha: f64, n_interior: usize, n_boundary: usize) -> PinnDataset {
        let (lat, bth) = polar_lattice(n_interior, n_boundary);
        PinnDataset {
            alpha,
            interior: lat
                .iter()
                .map(|&(r, th)| [r, th, exact_solution(r, th, alpha)])
                .collect(),
            boundary: bth.iter().map(|&th| [th, th.cos() + alpha]).collect(),
        }
    }

    #[test]
    fn constant_surface_has_zero_residual() {
        let net = Mlp::from_params(&[2, 1], vec![0.0, 0.0, 3.5]).unwrap();
        let e = second_order_eval(&net, 0.4, 1.0);
        assert_eq!(laplace_residual(&e, 0.4), 0.0);
    }

    #[test]
    fn exact_solution_is_harmonic_to_machine_precision() {
        for alpha in [-2.0, -0.5, 0.0, 1.3] {
            let f = ExactSolution { alpha };
            for i in 0..20 {
                for j in 0..20 {
                    let r = (i as f64 + 0.5) / 20.0;
                    let th = TWO_PI * j as f64 / 20.0;
                    let res = laplace_residual(&f.eval(r, th), r);
                    assert!(res.abs() < 1e-8, "residual {res} at ({r}, {th}, {alpha})");
                }
            }
        }
    }

    #[test]
    fn quadratic_in_r_residual_hand_value() {
        // y = r²: y_r = 2r, y_rr = 2, y_θθ = 0, so the residual is 4r² = 1
        // at r = 0.5.
        let e = SecondOrderEval {
            value: 0.25,
            grad: [1.0, 0.0],
            second: [2.0, 0.0],
        };
        assert!((laplace_residual(&e, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_net_gives_zero_loss() {
        let data = grid_dataset(0.7, 25, 8);
        let loss = pinn_loss(&ExactSolution { alpha: 0.7 }, &data, 1.0).unwrap();
        assert!(loss < 1e-8, "loss {loss}");
    }

    #[test]
    fn zero_net_unit_labels_gives_unit_mse() {
        let n: usize = 2 * 3 + 3 + 3 * 1 + 1;
        let net = Mlp::from_params(&[2, 3, 1], vec![0.0; n]).unwrap();
        let mut data = grid_dataset(0.0, 9, 3);
        for p in data.interior.iter_mut() {
            p[2] = 1.0;
        }
        for p in data.boundary.iter_mut() {
            p[1] = 1.0;
        }
        let loss = pinn_loss(&net, &data, 0.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_decomposes_into_parts() {
        let net = Mlp::new(&[2, 6, 6, 1], 5).unwrap();
        let data = grid_dataset(-0.4, 16, 4);
        let (pred, res) = pinn_loss_parts(&net, &data).unwrap();
        let total = pinn_loss(&net, &data, 1.0).unwrap();
        assert!((total - (pred + res)).abs() < 1e-12);
        let weighted = pinn_loss(&net, &data, 0.25).unwrap();
        assert!((weighted - (pred + 0.25 * res)).abs() < 1e-12);
    }

    #[test]
    fn training_fits_exact_solution_data() {
        let data = grid_dataset(0.3, 180, 20);
        let cfg = PinnTrainConfig {
            widths: vec![2, 16, 16, 16, 1],
            epochs: 1000,
            lr: 0.01,
            residual_weight: 1.0,
            net_seed: 3,
        };
        let net = train_pinn(&data, &cfg).unwrap();
        let loss = pinn_loss(&net, &data, 1.0).unwrap();
        assert!(loss < 1e-3, "final training loss {loss}");
    }

    #[test]
    fn zero_epochs_returns_initialized_net() {
        let data = grid_dataset(0.0, 9, 3);
        let cfg = PinnTrainConfig {
            epochs: 0,
            net_seed: 9,
            ..PinnTrainConfig::default()
        };
        let net = train_pinn(&data, &cfg).unwrap();
        assert_eq!(net, Mlp::new(&cfg.widths, 9).unwrap());
    }

    #[test]
    fn training_is_bit_reproducible() {
        let data = grid_dataset(0.1, 16, 4);
        let cfg = PinnTrainConfig {
            widths: vec![2, 8, 1],
            epochs: 40,
            ..PinnTrainConfig::default()
        };
        let a = train_pinn(&data, &cfg).unwrap();
        let b = train_pinn(&data, &cfg).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn train_gradients_match_finite_differences_including_residual() {
        // Width-4 net; compare the analytic gradient of the full PINN loss
        // against central differences over every parameter.
        let data = grid_dataset(0.2, 6, 2);
        let net = Mlp::new(&[2, 4, 1], 7).unwrap();
        let w = 1.0;
        let mut grads = vec![0.0; net.n_params()];
        let direct = pinn_loss_and_grads(&net, &data, w, &mut grads).unwrap();
        assert!((direct - pinn_loss(&net, &data, w).unwrap()).abs() < 1e-12);
        let h = 1e-5;
        for i in 0..net.n_params() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let lp = pinn_loss(&plus, &data, w).unwrap();
            let lm = pinn_loss(&minus, &data, w).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let rel = (grads[i] - fd).abs() / fd.abs().max(1e-4);
            assert!(rel < 1e-3, "param {i}: analytic {} vs fd {fd}", grads[i]);
        }
    }

    #[test]
    fn synthetic_roundtrip_keeps_roles_positional() {
        let data = grid_dataset(0.0, 6, 3);
        let d = pinn_to_synthetic(&data).unwrap();
        let back = synthetic_to_pinn(&d, 3).unwrap();
        assert_eq!(back.boundary.len(), 3);
        assert_eq!(back.interior.len(), 6);
        for (a, b) in back.interior.iter().zip(&data.interior) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conversion_clamps_and_wraps() {
        let values = Mat::from_rows(vec![
            vec![5.0, -1.0, 2.0],           // boundary row: r forced to 1, θ wrapped
            vec![1.7, 7.0, 0.5],            // interior: r clamped to 1
            vec![-0.3, 2.0 * TWO_PI, -0.5], // interior: r clamped to 0, θ wrapped to 0
        ]);
        let d = SyntheticDataset::new(pinn_schema(), values).unwrap();
        let p = synthetic_to_pinn(&d, 1).unwrap();
        assert!((p.boundary[0][0] - (TWO_PI - 1.0)).abs() < 1e-12);
        assert_eq!(p.interior[0][0], 1.0);
        assert_eq!(p.interior[1][0], 0.0);
        assert!(p.interior[1][1].abs() < 1e-9);
    }

    #[test]
    fn exact_solution_reconstruction_has_zero_l2() {
        let bc = grid_dataset(0.9, 16, 4);
        let err = l2_test_error(&ExactSolution { alpha: 0.9 }, &[bc]).unwrap();
        assert!(err.value < 1e-6);
        assert!(!err.absolute_fallback);
    }

    #[test]
    fn doubling_surface_has_unit_relative_error() {
        #[derive(Clone, Copy)]
        struct Doubled(f64);
        impl Surface for Doubled {
            fn eval(&self, r: f64, theta: f64) -> SecondOrderEval {
                let e = ExactSolution { alpha: self.0 }.eval(r, theta);
                SecondOrderEval {
                    value: 2.0 * e.value,
                    grad: [2.0 * e.grad[0], 2.0 * e.grad[1]],
                    second: [2.0 * e.second[0], 2.0 * e.second[1]],
                }
            }
        }
        let bc = grid_dataset(0.5, 16, 4);
        let err = l2_test_error(&Doubled(0.5), &[bc]).unwrap();
        assert!((err.value - 1.0).abs() < 1e-12, "err {}", err.value);
    }

    #[test]
    fn all_zero_reference_falls_back_to_absolute() {
        let mut bc = grid_dataset(0.0, 4, 2);
        for p in bc.interior.iter_mut() {
            p[2] = 0.0;
        }
        for p in bc.boundary.iter_mut() {
            p[1] = 0.0;
        }
        let err = l2_test_error(&ExactSolution { alpha: 0.0 }, &[bc]).unwrap();
        assert!(err.absolute_fallback);
    }

    #[test]
    fn cvar_outer_dominates_mean_outer() {
        let train: Vec<PinnDataset> = [-1.2, -0.9, -0.5]
            .iter()
            .map(|&a| grid_dataset(a, 9, 3))
            .collect();
        let d = pinn_to_synthetic(&grid_dataset(-0.9, 6, 2)).unwrap();
        let cfg = PinnTrainConfig {
            widths: vec![2, 8, 1],
            epochs: 60,
            ..PinnTrainConfig::default()
        };
        let mean = outer_objective(&d, 2, &train, RiskMeasure::Mean, &cfg).unwrap();
        let cvar = outer_objective(
            &d,
            2,
            &train,
            RiskMeasure::cvar(0.34).unwrap(),
            &cfg,
        )
        .unwrap();
        assert!(cvar >= mean, "cvar {cvar} vs mean {mean}");
    }

    #[test]
    fn single_bc_outer_objective_equals_post_training_loss() {
        // Trained on the condition's own clean data, the optimal level shift
        // is a fit-error-sized correction that can only lower the prediction
        // term, so the outer objective reproduces the post-training loss
        // from below, up to that correction.
        let bc = grid_dataset(-0.8, 9, 3);
        let d = pinn_to_synthetic(&bc).unwrap();
        let cfg = PinnTrainConfig {
            widths: vec![2, 8, 1],
            epochs: 600,
            lr: 0.01,
            ..PinnTrainConfig::default()
        };
        let outer = outer_objective(
            &d,
            bc.boundary.len(),
            std::slice::from_ref(&bc),
            RiskMeasure::Mean,
            &cfg,
        )
        .unwrap();
        let net = train_pinn(&synthetic_to_pinn(&d, bc.boundary.len()).unwrap(), &cfg).unwrap();
        let direct = pinn_loss(&net, &bc, cfg.residual_weight).unwrap();
        assert!(outer <= direct + 1e-12, "outer {outer} vs direct {direct}");
        assert!(
            (outer - direct).abs() < 0.05 * direct.abs() + 1e-4,
            "outer {outer} vs direct {direct}"
        );
    }

    #[test]
    fn degenerate_budget_returns_wellformed_report() {
        let train: Vec<PinnDataset> = [-1.0, -0.7]
            .iter()
            .map(|&a| grid_dataset(a, 12, 4))
            .collect();
        let test: Vec<PinnDataset> = vec![grid_dataset(0.9, 12, 4)];
        let cfg = PinnTrainConfig {
            widths: vec![2, 6, 1],
            epochs: 25,
            lr: 0.01,
            residual_weight: 1.0,
            net_seed: 0,
        };
        let dfo = crate::dfo::DfoConfig {
            budget: 1,
            mutation_scale: 0.05,
            scale_adapt: 1.5,
        };
        let out = distill_pinn(
            &train,
            &test,
            8,
            &dfo,
            PinnInit::SubsampleTrain,
            RiskMeasure::Mean,
            &cfg,
            2,
            &[1],
            3,
        )
        .unwrap();
        assert_eq!(out.boundary_rows, 1);
        assert_eq!(out.dataset.ipc(), 8);
        assert_eq!(out.report.checkpoints.len(), 1);
        assert!(out.report.final_test_l2.is_finite());
        assert!(out.report.final_outer_loss.is_finite());
    }

    #[test]
    fn checkpoint_outer_losses_are_nonincreasing() {
        // Nested budgets share one seed stream, so the incumbent at a larger
        // checkpoint can never be worse.
        let train: Vec<PinnDataset> = [-1.2, -0.8, -0.5]
            .iter()
            .map(|&a| grid_dataset(a, 12, 4))
            .collect();
        let test: Vec<PinnDataset> = vec![grid_dataset(1.0, 12, 4)];
        let cfg = PinnTrainConfig {
            widths: vec![2, 6, 1],
            epochs: 25,
            lr: 0.01,
            residual_weight: 1.0,
            net_seed: 0,
        };
        let dfo = crate::dfo::DfoConfig {
            budget: 12,
            mutation_scale: 0.05,
            scale_adapt: 1.5,
        };
        let out = distill_pinn(
            &train,
            &test,
            8,
            &dfo,
            PinnInit::SubsampleTrain,
            RiskMeasure::Mean,
            &cfg,
            2,
            &[2, 6, 12],
            9,
        )
        .unwrap();
        let losses: Vec<f64> = out
            .report
            .checkpoints
            .iter()
            .map(|p| p.best_outer_loss)
            .collect();
        assert_eq!(losses.len(), 3);
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
    }

    #[test]
    fn points_csv_roundtrip() {
        let data = grid_dataset(0.25, 5, 2);
        let dir = std::env::temp_dir().join("distilled-pinn-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("points.csv");
        io::write_points_csv(&data, &path).unwrap();
        let back = io::read_points_csv(&path).unwrap();
        assert_eq!(back.interior.len(), 5);
        assert_eq!(back.boundary.len(), 2);
        for (a, b) in back.interior.iter().zip(&data.interior) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }
}
