//! Risk aggregation: Mean vs CVaR over batch losses, and the empirical-risk
//! wrapper that drives every distillation objective.
//!
//! ```bash
//! cargo run -p distilled --example risk_measures
//! ```

use distilled::dataset::{dbn_schema, SyntheticDataset};
use distilled::linalg::Mat;
use distilled::risk::{empirical_risk, risk_aggregate, InferenceTask, RiskMeasure};

/// A toy inference task whose loss is the squared distance between the
/// synthetic dataset's mean and a per-batch target.
struct MeanGap;

impl InferenceTask for MeanGap {
    type Batch = f64;

    fn task_id(&self) -> &str {
        "mean-gap"
    }

    fn evaluate(
        &self,
        d_hat: &SyntheticDataset,
        target: &f64,
        _seed: u64,
    ) -> distilled::error::Result<f64> {
        let gap = d_hat.values().column_mean(0) - target;
        Ok(gap * gap)
    }
}

fn main() {
    let losses = [0.3, 1.9, 0.4, 0.2, 4.1, 0.8, 0.5, 0.6];
    println!("batch losses: {losses:?}");
    for tail in [1.0, 0.5, 0.25] {
        let cvar = risk_aggregate(RiskMeasure::cvar(tail).unwrap(), &losses).unwrap();
        println!("  CVaR(tail {tail:4}) = {cvar:.4}");
    }
    println!(
        "  Mean          = {:.4}  (identical to CVaR at tail 1.0)",
        risk_aggregate(RiskMeasure::Mean, &losses).unwrap()
    );

    let d = SyntheticDataset::new(
        dbn_schema(1, 1),
        Mat::from_rows(vec![vec![0.4], vec![0.6], vec![0.5]]),
    )
    .unwrap();
    let batches = [0.0, 0.5, 1.0, 2.0];
    let mean = empirical_risk(&MeanGap, &d, &batches, RiskMeasure::Mean, 7).unwrap();
    let cvar = empirical_risk(
        &MeanGap,
        &d,
        &batches,
        RiskMeasure::cvar(0.25).unwrap(),
        7,
    )
    .unwrap();
    println!("empirical risk of the mean-gap task over targets {batches:?}:");
    println!("  mean risk = {mean:.4}, worst-batch CVaR(0.25) = {cvar:.4}");
}
