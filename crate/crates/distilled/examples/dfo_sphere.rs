//! The budgeted (1+1) evolution strategy on the sphere function, with the
//! one-fifth-rule step adaptation visible in the trace.
//!
//! ```bash
//! cargo run -p distilled --example dfo_sphere
//! ```

use distilled::dataset::{dbn_schema, SyntheticDataset};
use distilled::dfo::{dfo_search, DfoConfig};
use distilled::linalg::Mat;

fn main() {
    let d0 = SyntheticDataset::new(
        dbn_schema(2, 1),
        Mat::from_vec(5, 2, vec![1.0; 10]),
    )
    .unwrap();
    let sphere = |d: &SyntheticDataset| -> distilled::error::Result<f64> {
        Ok(d.values().norm_sq())
    };
    let cfg = DfoConfig {
        budget: 400,
        mutation_scale: 0.1,
        scale_adapt: 1.5,
    };
    let out = dfo_search(sphere, &d0, &cfg, 29).unwrap();
    println!("(1+1)-ES on the 10-dimensional sphere, budget 400:");
    for p in out.trace.iter().step_by(50) {
        println!("  eval {:>3}: best loss {:.6}", p.eval, p.best_loss);
    }
    println!("  final best loss {:.3e} after exactly {} evaluations", out.best_loss, out.trace.len());
    let accepted = out
        .trace
        .windows(2)
        .filter(|w| w[1].best_loss < w[0].best_loss)
        .count();
    println!("  accepted candidates: {accepted} (~one fifth of the budget)");
}
