//! The distribution-matching sanity baseline: exact-gradient descent on the
//! mean-matching objective, next to the subset baseline it is meant to
//! calibrate against.
//!
//! ```bash
//! cargo run -p distilled --example distribution_match
//! ```

use distilled::baseline::{distribution_match_objective, sample_subset_baseline};
use distilled::dataset::dbn_schema;
use distilled::linalg::Mat;
use distilled::rng::rng_from;
use rand_distr::{Distribution, StandardNormal};

fn main() {
    let mut rng = rng_from(3);
    let mut train = Mat::zeros(400, 6);
    for r in 0..400 {
        for c in 0..6 {
            let z: f64 = StandardNormal.sample(&mut rng);
            train.set(r, c, c as f64 * 0.5 + (1.0 + c as f64 * 0.2) * z);
        }
    }
    let schema = dbn_schema(6, 1);
    let mut d = sample_subset_baseline(&train, &schema, 8, 5).unwrap();
    let (initial, _) = distribution_match_objective(&d, &train).unwrap();
    println!("subset of 8 rows: mean-gap objective {initial:.5}");
    for step in 0..120 {
        let (value, grad) = distribution_match_objective(&d, &train).unwrap();
        if step % 30 == 0 {
            println!("  step {step:>3}: objective {value:.6}");
        }
        d.values_mut().scaled_add(-0.5, &grad);
    }
    let (final_obj, _) = distribution_match_objective(&d, &train).unwrap();
    println!("after 120 exact-gradient steps: {final_obj:.2e}");
    println!("(a sanity baseline only: matching means says nothing about the inference task)");
}
