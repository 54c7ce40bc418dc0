//! The Gaussian DBN machinery end to end: generate a random network, sample
//! observations, corrupt them into heterogeneous partitions, EM-impute, and
//! compare log-likelihoods.
//!
//! ```bash
//! cargo run -p distilled --example gdbn_pipeline
//! ```

use distilled::gdbn::{
    corrupt_partitions, em_impute, fit_parameters, learn_structure, log_likelihood, random_gdbn,
    sample_gdbn, MaskedMatrix,
};

fn main() {
    let (n_vars, n_slices) = (8, 2);
    let dbn = random_gdbn(n_vars, n_slices, 0.2, 5).unwrap();
    let n_edges: usize = (0..n_vars)
        .map(|v| dbn.structure.within_parents[v].len() + dbn.structure.inter_parents[v].len())
        .sum();
    println!("random GDBN: {n_vars} vars x {n_slices} slices, {n_edges} template edges");

    let train = sample_gdbn(&dbn, 800, 7).unwrap();
    let test = sample_gdbn(&dbn, 400, 9).unwrap();
    println!("sampled 800 train / 400 test observations");

    let corrupted = corrupt_partitions(&train, 4, 0.10, 0.1, 11).unwrap();
    for (i, p) in corrupted.partitions.iter().enumerate() {
        println!(
            "  partition {i}: {} rows, hidden columns {:?}",
            p.rows.rows(),
            p.hidden_cols
        );
    }

    // Learn from clean data as a reference.
    let structure = learn_structure(&train, n_vars, n_slices, 3).unwrap();
    let fitted = fit_parameters(&train, &structure).unwrap();
    let ll_truth = log_likelihood(&dbn, &test).unwrap() / 400.0;
    let ll_clean = log_likelihood(&fitted, &test).unwrap() / 400.0;

    // EM on one corrupted partition, starting from the clean fit.
    let masked = &corrupted.partitions[0].rows;
    let em = em_impute(&fitted, masked, 8, 1e-6).unwrap();
    println!(
        "EM on partition 0: observed-data LL climbed {:.2} -> {:.2} over {} iterations",
        em.ll_trace.first().unwrap(),
        em.ll_trace.last().unwrap(),
        em.ll_trace.len()
    );
    let ll_em = log_likelihood(&em.model, &test).unwrap() / 400.0;
    println!("mean test log-likelihood per row:");
    println!("  true network       {ll_truth:.3}");
    println!("  fit on clean train {ll_clean:.3}");
    println!("  EM refit, 1/4 of the rows with masks and noise: {ll_em:.3}");

    // Completed matrices pass the complete-data gate; masked ones do not.
    assert!(MaskedMatrix::complete(em.completed).require_complete().is_ok());
    assert!(masked.require_complete().is_err());
}
