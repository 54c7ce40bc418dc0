//! The categorical mixture-AR pipeline: posterior mixture weights from
//! transition counts, one-step forecasting, and the greedy coordinate
//! distiller (the case with no gradient at all).
//!
//! ```bash
//! cargo run -p distilled --example mixar_distill
//! ```

use distilled::linalg::Mat;
use distilled::mixar::{
    forecast, greedy_distill_categorical, posterior_mixture_weights, reconstruction_loss,
    sample_series, transition_counts, MixtureArModel,
};

fn main() {
    // Two well-separated 3-state components: a forward cycle and a lazy
    // self-loop chain.
    let cycle = Mat::from_rows(vec![
        vec![0.1, 0.8, 0.1],
        vec![0.1, 0.1, 0.8],
        vec![0.8, 0.1, 0.1],
    ]);
    let lazy = Mat::from_rows(vec![
        vec![0.8, 0.1, 0.1],
        vec![0.1, 0.8, 0.1],
        vec![0.1, 0.1, 0.8],
    ]);
    let components = vec![cycle, lazy];

    // Ground truth: pure first component.
    let truth = MixtureArModel::new(1, components.clone(), vec![1.0, 0.0]).unwrap();
    let train = sample_series(&truth, 10, 1001, 3).unwrap();
    println!("sampled 10 sequences x 1001 steps from the cycle component");

    let counts = transition_counts(&train).unwrap();
    let posterior = posterior_mixture_weights(&components, &counts, 0.5).unwrap();
    println!("posterior mixture weights from 10k transitions: [{:.4}, {:.4}]", posterior[0], posterior[1]);

    let x0 = vec![1.0, 0.0, 0.0];
    let fc = forecast(&truth, &x0).unwrap();
    println!("one-step forecast from state 0: {fc:?}");

    let out = greedy_distill_categorical(&train, 2, 8, &components, 10, 7).unwrap();
    println!(
        "greedy distiller: loss {:.4} -> {:.4} over {} improvements",
        out.trace.first().unwrap(),
        out.trace.last().unwrap(),
        out.trace.len() - 1
    );
    println!("  final posterior weights from the distilled windows: [{:.4}, {:.4}]",
        out.final_weights[0], out.final_weights[1]);
    let d = out.dataset;
    println!("  distilled windows ({} rows x {} entries):", d.ipc(), d.n_features());
    for r in 0..d.ipc() {
        let states: Vec<u8> = d.values().row(r).iter().map(|&v| v as u8).collect();
        println!("    {states:?}");
    }
    // Sanity: the distilled model forecasts the training series no worse
    // than the uniform-weight mixture.
    let uniform = MixtureArModel::new(1, components.clone(), vec![0.5, 0.5]).unwrap();
    let distilled_model = MixtureArModel::new(1, components, out.final_weights).unwrap();
    println!(
        "  reconstruction loss on train: distilled {:.4} vs uniform-mixture {:.4}",
        reconstruction_loss(&distilled_model, &train).unwrap(),
        reconstruction_loss(&uniform, &train).unwrap()
    );
}
