//! Mixture-AR study: recovery of transition structure and mixture weights
//! from data generated by one known component, plus the greedy categorical
//! distiller against its subsample initialization.

use super::{fmt, write_csv, ExperimentConfig, RunOutput};
use crate::error::Result;
use crate::linalg::Mat;
use crate::mixar::{
    greedy_distill_categorical, joint_states, posterior_mixture_weights, sample_series,
    transition_counts, transition_frequencies, MixtureArModel,
};
use crate::rng::child_seed_str;

/// Well-separated components over the joint space: a forward-cycle-heavy
/// matrix and a self-loop-heavy matrix.
pub fn separated_components(n_features: usize, n_components: usize) -> Vec<Mat> {
    let nbar = joint_states(n_features);
    let off = 0.2 / (nbar - 1) as f64;
    let mut comps = Vec::with_capacity(n_components);
    for q in 0..n_components {
        let mut m = Mat::from_vec(nbar, nbar, vec![off; nbar * nbar]);
        for i in 0..nbar {
            // Component q concentrates on the shift-by-(q+1) successor;
            // distinct shifts keep components far apart.
            let target = (i + q + 1) % nbar;
            m.set(i, target, 0.8 + off - m.get(i, target));
            let row_sum: f64 = m.row(i).iter().sum();
            for j in 0..nbar {
                m.set(i, j, m.get(i, j) / row_sum);
            }
        }
        comps.push(m);
    }
    comps
}

pub fn run_mixar(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let x = &cfg.mixar;
    let components = separated_components(x.n_features, x.n_components);
    let mut results: Vec<Vec<String>> = Vec::new();
    let mut trace_rows: Vec<Vec<String>> = Vec::new();

    for seed_idx in 0..x.seeds {
        let seed_of =
            |what: &str| child_seed_str(cfg.root_seed, &format!("mixar/{what}/seed{seed_idx}"));
        // Single-component ground truth: everything comes from component 0.
        let mut weights = vec![0.0; x.n_components];
        weights[0] = 1.0;
        let truth = MixtureArModel::new(x.n_features, components.clone(), weights)?;
        let train = sample_series(&truth, x.n_seqs, x.t_len, seed_of("series"))?;

        // Transition-frequency recovery against the generating matrix.
        let freq = transition_frequencies(&train)?;
        let mean = truth.mean_matrix();
        let freq_err = freq
            .matrix
            .data()
            .iter()
            .zip(mean.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);

        // Posterior mixture-weight recovery from the full training counts.
        let counts = transition_counts(&train)?;
        let posterior =
            posterior_mixture_weights(&components, &counts, 1.0 / x.n_components as f64)?;
        let weight_err = 1.0 - posterior[0];

        // Greedy distillation; the zero-sweep run is the subsample baseline.
        let baseline = greedy_distill_categorical(
            &train,
            x.ipc,
            x.window,
            &components,
            0,
            seed_of("distill"),
        )?;
        let distilled = greedy_distill_categorical(
            &train,
            x.ipc,
            x.window,
            &components,
            x.max_sweeps,
            seed_of("distill"),
        )?;
        let monotone = distilled.trace.windows(2).all(|w| w[1] <= w[0]);

        for (metric, value) in [
            ("freq_recovery_max_err", freq_err),
            ("posterior_weight_err", weight_err),
            ("baseline_loss", baseline.trace[0]),
            ("distilled_loss", *distilled.trace.last().unwrap()),
            ("trace_monotone", if monotone { 1.0 } else { 0.0 }),
            ("distilled_weight_on_truth", distilled.final_weights[0]),
        ] {
            results.push(vec![seed_idx.to_string(), metric.to_string(), fmt(value)]);
        }
        for (step, loss) in distilled.trace.iter().enumerate() {
            trace_rows.push(vec![seed_idx.to_string(), step.to_string(), fmt(*loss)]);
        }
    }

    let results_path = cfg.out_dir.join("results.csv");
    write_csv(&results_path, "seed,metric,value", &results)?;
    let trace_path = cfg.out_dir.join("trace.csv");
    write_csv(&trace_path, "seed,step,loss", &trace_rows)?;
    Ok(RunOutput {
        files: vec![results_path, trace_path],
    })
}
