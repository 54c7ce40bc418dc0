//! Risk measures and the inference-task contract.
//!
//! A distillation objective is "risk of a divergence over evaluation data":
//! each batch yields a scalar loss, and a risk measure aggregates the batch
//! losses. Mean is the risk-neutral choice; CVaR averages the worst tail.

use serde::{Deserialize, Serialize};

use crate::dataset::SyntheticDataset;
use crate::error::{DistillError, Result};
use crate::rng::child_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RiskMeasure {
    Mean,
    /// Mean of the worst `ceil(tail_fraction · n)` losses, tail_fraction in
    /// (0, 1]. At tail_fraction = 1 this is exactly the mean.
    CVaR { tail_fraction: f64 },
}

impl RiskMeasure {
    pub fn cvar(tail_fraction: f64) -> Result<Self> {
        if !(tail_fraction > 0.0 && tail_fraction <= 1.0) || !tail_fraction.is_finite() {
            return Err(DistillError::InvalidConfig(format!(
                "cvar tail_fraction must lie in (0, 1], got {tail_fraction}"
            )));
        }
        Ok(RiskMeasure::CVaR { tail_fraction })
    }
}

/// Aggregate per-sample losses under a risk measure.
///
/// CVaR sorts descending with ties broken by original index (stable sort),
/// then averages the worst `ceil(t · n)` entries. The full-tail case routes
/// through the same summation as Mean so the two agree bit-for-bit.
pub fn risk_aggregate(measure: RiskMeasure, losses: &[f64]) -> Result<f64> {
    if losses.is_empty() {
        return Err(DistillError::NoSamples("risk_aggregate"));
    }
    for (i, l) in losses.iter().enumerate() {
        if !l.is_finite() {
            return Err(DistillError::NonFinite {
                context: "risk_aggregate loss",
                index: i,
            });
        }
    }
    let n = losses.len();
    let k = match measure {
        RiskMeasure::Mean => n,
        RiskMeasure::CVaR { tail_fraction } => {
            RiskMeasure::cvar(tail_fraction)?; // re-validate, struct literals bypass the ctor
            ((tail_fraction * n as f64).ceil() as usize).clamp(1, n)
        }
    };
    if k == n {
        return Ok(losses.iter().sum::<f64>() / n as f64);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| losses[b].partial_cmp(&losses[a]).unwrap());
    Ok(idx[..k].iter().map(|&i| losses[i]).sum::<f64>() / k as f64)
}

/// An inference task bound to an evaluation-data type: given a synthetic
/// dataset, a batch handle and a seed, produce a scalar loss. Implementations
/// must be deterministic in (dataset, batch, seed).
pub trait InferenceTask {
    type Batch;

    fn task_id(&self) -> &str;

    fn evaluate(&self, d_hat: &SyntheticDataset, batch: &Self::Batch, seed: u64) -> Result<f64>;
}

/// Sample-average approximation of the distillation risk: evaluate the task
/// on every batch (each with an independently split child seed) and
/// aggregate with the risk measure. Batch failures carry the batch index.
pub fn empirical_risk<T: InferenceTask>(
    task: &T,
    d_hat: &SyntheticDataset,
    batches: &[T::Batch],
    measure: RiskMeasure,
    seed: u64,
) -> Result<f64> {
    if batches.is_empty() {
        return Err(DistillError::NoSamples("empirical_risk batches"));
    }
    let mut losses = Vec::with_capacity(batches.len());
    for (i, batch) in batches.iter().enumerate() {
        let loss = task
            .evaluate(d_hat, batch, child_seed(seed, i as u64))
            .map_err(|e| DistillError::Batch {
                batch: i,
                source: Box::new(e),
            })?;
        losses.push(loss);
    }
    risk_aggregate(measure, &losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{pinn_schema, SyntheticDataset};
    use crate::linalg::Mat;
    use proptest::prelude::*;

    fn any_dataset() -> SyntheticDataset {
        SyntheticDataset::new(pinn_schema(), Mat::from_rows(vec![vec![0.5, 1.0, 0.0]])).unwrap()
    }

    #[test]
    fn mean_of_one_two_three() {
        assert_eq!(risk_aggregate(RiskMeasure::Mean, &[1.0, 2.0, 3.0]).unwrap(), 2.0);
    }

    #[test]
    fn full_tail_cvar_equals_mean_exactly() {
        let losses = [1.0, 2.0, 3.0];
        let mean = risk_aggregate(RiskMeasure::Mean, &losses).unwrap();
        let cvar = risk_aggregate(RiskMeasure::cvar(1.0).unwrap(), &losses).unwrap();
        assert_eq!(mean, cvar);
        assert_eq!(cvar, 2.0);
    }

    #[test]
    fn cvar_worst_two_of_five() {
        // ceil(0.4 · 5) = 2 worst elements of [1..5] are {5, 4}.
        let got = risk_aggregate(RiskMeasure::cvar(0.4).unwrap(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(got.unwrap(), 4.5);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(
            risk_aggregate(RiskMeasure::Mean, &[]),
            Err(DistillError::NoSamples(_))
        ));
        assert!(matches!(
            risk_aggregate(RiskMeasure::Mean, &[1.0, f64::NAN]),
            Err(DistillError::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn rejects_bad_tail_fraction() {
        assert!(RiskMeasure::cvar(0.0).is_err());
        assert!(RiskMeasure::cvar(1.5).is_err());
    }

    struct ConstantLoss(f64);
    impl InferenceTask for ConstantLoss {
        type Batch = usize;
        fn task_id(&self) -> &str {
            "constant"
        }
        fn evaluate(&self, _: &SyntheticDataset, _: &usize, _: u64) -> Result<f64> {
            Ok(self.0)
        }
    }

    struct BatchIndexLoss;
    impl InferenceTask for BatchIndexLoss {
        type Batch = usize;
        fn task_id(&self) -> &str {
            "batch-index"
        }
        fn evaluate(&self, _: &SyntheticDataset, batch: &usize, _: u64) -> Result<f64> {
            Ok(*batch as f64)
        }
    }

    #[test]
    fn constant_loss_mean_over_batches() {
        let d = any_dataset();
        let got = empirical_risk(&ConstantLoss(3.0), &d, &[0, 1, 2, 3, 4], RiskMeasure::Mean, 7);
        assert_eq!(got.unwrap(), 3.0);
    }

    #[test]
    fn worst_one_of_five_batches() {
        let d = any_dataset();
        let measure = RiskMeasure::cvar(0.2).unwrap();
        let got = empirical_risk(&BatchIndexLoss, &d, &[0, 1, 2, 3, 4], measure, 7);
        assert_eq!(got.unwrap(), 4.0);
    }

    #[test]
    fn mean_over_identical_batches_equals_single_batch() {
        let d = any_dataset();
        let one = empirical_risk(&ConstantLoss(1.25), &d, &[9], RiskMeasure::Mean, 7).unwrap();
        let many =
            empirical_risk(&ConstantLoss(1.25), &d, &[9; 6], RiskMeasure::Mean, 7).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn batch_errors_carry_index() {
        struct FailsAtTwo;
        impl InferenceTask for FailsAtTwo {
            type Batch = usize;
            fn task_id(&self) -> &str {
                "fails"
            }
            fn evaluate(&self, _: &SyntheticDataset, b: &usize, _: u64) -> Result<f64> {
                if *b == 2 {
                    Err(DistillError::NoSamples("inner"))
                } else {
                    Ok(0.0)
                }
            }
        }
        let d = any_dataset();
        match empirical_risk(&FailsAtTwo, &d, &[0, 1, 2], RiskMeasure::Mean, 7) {
            Err(DistillError::Batch { batch, .. }) => assert_eq!(batch, 2),
            other => panic!("expected batch error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn cvar_is_permutation_invariant(
            mut losses in prop::collection::vec(-50.0..50.0f64, 1..40),
            t in 0.05..1.0f64,
            rot in 0usize..40,
        ) {
            let measure = RiskMeasure::cvar(t).unwrap();
            let before = risk_aggregate(measure, &losses).unwrap();
            let n = losses.len();
            losses.rotate_left(rot % n);
            let after = risk_aggregate(measure, &losses).unwrap();
            prop_assert!((before - after).abs() < 1e-9);
        }

        #[test]
        fn cvar_is_nonincreasing_in_tail_fraction(
            losses in prop::collection::vec(-50.0..50.0f64, 1..40),
            t_lo in 0.05..1.0f64,
            t_hi in 0.05..1.0f64,
        ) {
            let (lo, hi) = if t_lo <= t_hi { (t_lo, t_hi) } else { (t_hi, t_lo) };
            let at_lo = risk_aggregate(RiskMeasure::cvar(lo).unwrap(), &losses).unwrap();
            let at_hi = risk_aggregate(RiskMeasure::cvar(hi).unwrap(), &losses).unwrap();
            prop_assert!(at_lo >= at_hi - 1e-9, "CVaR({lo}) = {at_lo} < CVaR({hi}) = {at_hi}");
        }
    }
}
