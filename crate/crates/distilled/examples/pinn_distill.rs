//! A compact PINN distillation: train-tail boundary conditions in, a
//! synthetic point cloud out, judged by out-of-distribution reconstruction
//! error on test-tail conditions the search never sees.
//!
//! ```bash
//! cargo run -p distilled --release --example pinn_distill
//! ```

use distilled::dfo::DfoConfig;
use distilled::pinn::{
    boundary_row_count, distill_pinn, generate_pinn_data, ood_test_error, pinn_to_synthetic,
    subset_baseline_points, BoundaryPrior, PinnInit, PinnTrainConfig, TailSide,
};
use distilled::risk::RiskMeasure;

fn main() {
    let a = 0.4;
    let train_bcs = generate_pinn_data(
        BoundaryPrior::new(a, TailSide::TrainLower).unwrap(),
        12,
        128,
        12,
        0.05,
        3,
    )
    .unwrap();
    let test_bcs = generate_pinn_data(
        BoundaryPrior::new(a, TailSide::TestUpper).unwrap(),
        6,
        128,
        12,
        0.0,
        5,
    )
    .unwrap();
    println!(
        "train alphas < {:.3}, test alphas > {:.3} (opposite tails, a = {a})",
        train_bcs.iter().map(|b| b.alpha).fold(f64::NEG_INFINITY, f64::max),
        test_bcs.iter().map(|b| b.alpha).fold(f64::INFINITY, f64::min)
    );

    let ipc = 24;
    let cfg = PinnTrainConfig {
        widths: vec![2, 16, 16, 16, 1],
        epochs: 400,
        lr: 0.01,
        residual_weight: 1.0,
        net_seed: 0,
    };
    let dfo = DfoConfig {
        budget: 60,
        mutation_scale: 0.05,
        scale_adapt: 1.5,
    };
    let out = distill_pinn(
        &train_bcs,
        &test_bcs,
        ipc,
        &dfo,
        PinnInit::SubsampleTrain,
        RiskMeasure::cvar(0.2).unwrap(),
        &cfg,
        3,
        &[10, 30, 60],
        7,
    )
    .unwrap();
    println!("distilled {ipc} rows ({} boundary) with budget {}:", out.boundary_rows, dfo.budget);
    for p in &out.report.checkpoints {
        println!(
            "  budget {:>3}: outer risk {:.4}, test L2 {:.4}",
            p.budget, p.best_outer_loss, p.test_l2
        );
    }

    let b_rows = boundary_row_count(ipc);
    let subset = subset_baseline_points(&train_bcs, b_rows, ipc - b_rows, 11).unwrap();
    let subset_l2 = ood_test_error(&pinn_to_synthetic(&subset).unwrap(), b_rows, &test_bcs, &cfg)
        .unwrap();
    println!("  distilled final test L2 {:.4}", out.report.final_test_l2);
    println!("  subset baseline test L2 {:.4}", subset_l2.value);
}
