//! Score-based structure learning and parameter fitting.
//!
//! Everything runs off pooled second moments: a node family (a variable's
//! slice-0 model, or its transition model tied across slices ≥ 1) is fit by
//! least squares from moment blocks, scored by BIC, and greedy hill climbing
//! adds the admissible edge with the best score gain until none helps.
//! Candidate edges are scanned in a fixed lexicographic order and ties keep
//! the current structure, so learning is deterministic.

use super::{DbnStructure, GaussianDbn, NodeParams};
use crate::error::{DistillError, Result};
use crate::linalg::{solve_moments, Mat};

/// Noise floor for fitted node models; prevents infinite densities on
/// interpolating fits of tiny synthetic datasets.
pub(crate) const NOISE_FLOOR: f64 = 1e-3;

/// Pooled first/second moments: m1 = Σ E[x], m2 = Σ E[x xᵀ] over rows.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    pub n: f64,
    pub m1: Vec<f64>,
    pub m2: Mat,
}

impl Moments {
    pub fn from_data(data: &Mat) -> Moments {
        let d = data.cols();
        let mut m1 = vec![0.0; d];
        let mut m2 = Mat::zeros(d, d);
        for r in 0..data.rows() {
            let row = data.row(r);
            for i in 0..d {
                m1[i] += row[i];
                for j in 0..=i {
                    let v = m2.get(i, j) + row[i] * row[j];
                    m2.set(i, j, v);
                    m2.set(j, i, v);
                }
            }
        }
        Moments {
            n: data.rows() as f64,
            m1,
            m2,
        }
    }

    pub fn zeros(d: usize) -> Moments {
        Moments {
            n: 0.0,
            m1: vec![0.0; d],
            m2: Mat::zeros(d, d),
        }
    }
}

pub(crate) struct FamilyFit {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub sigma2: f64,
    pub ridged: bool,
}

/// Instances of a node family: (target column, parent columns) per slice the
/// family covers.
fn family_instances(s: &DbnStructure, var: usize, init: bool) -> Vec<(usize, Vec<usize>)> {
    if init {
        vec![(s.col(var, 0), s.node_parent_cols(var, 0))]
    } else {
        (1..s.n_slices)
            .map(|slice| (s.col(var, slice), s.node_parent_cols(var, slice)))
            .collect()
    }
}

/// Least squares for one family from pooled moments, intercept included.
pub(crate) fn fit_family(
    moments: &Moments,
    instances: &[(usize, Vec<usize>)],
) -> Result<FamilyFit> {
    let k = instances[0].1.len();
    let n_eff = moments.n * instances.len() as f64;
    let mut a = Mat::zeros(k + 1, k + 1);
    let mut rhs = vec![0.0; k + 1];
    let mut syy = 0.0;
    a.set(0, 0, n_eff);
    for (y, parents) in instances {
        syy += moments.m2.get(*y, *y);
        rhs[0] += moments.m1[*y];
        for (ia, &pa) in parents.iter().enumerate() {
            a.set(0, ia + 1, a.get(0, ia + 1) + moments.m1[pa]);
            a.set(ia + 1, 0, a.get(0, ia + 1));
            rhs[ia + 1] += moments.m2.get(pa, *y);
            for (ib, &pb) in parents.iter().enumerate() {
                a.set(ia + 1, ib + 1, a.get(ia + 1, ib + 1) + moments.m2.get(pa, pb));
            }
        }
    }
    let sol = solve_moments(&a, &rhs)?;
    let fitted: f64 = sol.beta.iter().zip(&rhs).map(|(b, r)| b * r).sum();
    let sigma2 = ((syy - fitted) / n_eff).max(0.0);
    Ok(FamilyFit {
        intercept: sol.beta[0],
        weights: sol.beta[1..].to_vec(),
        sigma2,
        ridged: sol.ridged,
    })
}

/// BIC of one family: the maximized Gaussian log-likelihood minus
/// (params/2)·ln n, with the variance floored so interpolating fits cannot
/// claim unbounded scores.
fn family_bic(moments: &Moments, instances: &[(usize, Vec<usize>)]) -> Result<f64> {
    const LN_2PI: f64 = 1.8378770664093453;
    let fit = fit_family(moments, instances)?;
    let n_eff = moments.n * instances.len() as f64;
    let sigma2 = fit.sigma2.max(NOISE_FLOOR * NOISE_FLOOR);
    let ll = -0.5 * n_eff * (LN_2PI + sigma2.ln() + 1.0);
    let n_params = fit.weights.len() as f64 + 2.0;
    Ok(ll - 0.5 * n_params * n_eff.ln())
}

/// Total BIC of a structure on complete data; the comparison oracle used by
/// tests and the quantity hill climbing maximizes.
pub fn bic_score(data: &Mat, structure: &DbnStructure) -> Result<f64> {
    let moments = Moments::from_data(data);
    let mut total = 0.0;
    for v in 0..structure.n_vars {
        total += family_bic(&moments, &family_instances(structure, v, true))?;
        if structure.n_slices > 1 {
            total += family_bic(&moments, &family_instances(structure, v, false))?;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Candidate {
    Within { from: usize, to: usize },
    Inter { from: usize, to: usize },
}

/// Greedy BIC hill climbing over admissible template edges: within-slice
/// forward (from < to under the variable order) and inter-slice, parent
/// count capped per node.
pub fn learn_structure(
    data: &Mat,
    n_vars: usize,
    n_slices: usize,
    max_parents: usize,
) -> Result<DbnStructure> {
    if data.rows() < 2 {
        return Err(DistillError::NoSamples("learn_structure needs >= 2 rows"));
    }
    if data.cols() != n_vars * n_slices {
        return Err(DistillError::ShapeMismatch {
            context: "learn_structure columns",
            expected: n_vars * n_slices,
            got: data.cols(),
        });
    }
    let moments = Moments::from_data(data);
    let mut structure = DbnStructure::empty(n_vars, n_slices);

    let mut candidates = Vec::new();
    for from in 0..n_vars {
        for to in from + 1..n_vars {
            candidates.push(Candidate::Within { from, to });
        }
    }
    if n_slices > 1 {
        for from in 0..n_vars {
            for to in 0..n_vars {
                candidates.push(Candidate::Inter { from, to });
            }
        }
    }

    let score_var = |s: &DbnStructure, v: usize| -> Result<f64> {
        let mut total = family_bic(&moments, &family_instances(s, v, true))?;
        if s.n_slices > 1 {
            total += family_bic(&moments, &family_instances(s, v, false))?;
        }
        Ok(total)
    };
    let mut var_scores: Vec<f64> = (0..n_vars)
        .map(|v| score_var(&structure, v))
        .collect::<Result<_>>()?;

    loop {
        let mut best: Option<(f64, Candidate)> = None;
        for &cand in &candidates {
            let (from, to, within) = match cand {
                Candidate::Within { from, to } => (from, to, true),
                Candidate::Inter { from, to } => (from, to, false),
            };
            let parents = if within {
                &structure.within_parents[to]
            } else {
                &structure.inter_parents[to]
            };
            if parents.contains(&from) {
                continue;
            }
            if structure.within_parents[to].len() + structure.inter_parents[to].len() + 1
                > max_parents
            {
                continue;
            }
            let mut trial = structure.clone();
            if within {
                trial.within_parents[to].push(from);
            } else {
                trial.inter_parents[to].push(from);
            }
            let delta = score_var(&trial, to)? - var_scores[to];
            if delta > best.map_or(1e-9, |(d, _)| d) {
                best = Some((delta, cand));
            }
        }
        match best {
            Some((delta, cand)) => {
                let to = match cand {
                    Candidate::Within { from, to } => {
                        structure.within_parents[to].push(from);
                        to
                    }
                    Candidate::Inter { from, to } => {
                        structure.inter_parents[to].push(from);
                        to
                    }
                };
                var_scores[to] += delta;
            }
            None => break,
        }
    }
    Ok(structure)
}

/// Per-family least squares on complete data with the given parent sets;
/// noise std is the maximum-likelihood residual std floored at 1e-3.
/// Singular designs fall back to a tiny ridge and are flagged on the model.
pub fn fit_parameters(data: &Mat, structure: &DbnStructure) -> Result<GaussianDbn> {
    if data.rows() <= structure.max_parent_count() + 1 {
        return Err(DistillError::NoSamples(
            "fit_parameters needs rows > max parent count + 1",
        ));
    }
    let moments = Moments::from_data(data);
    fit_from_moments(&moments, structure)
}

/// The M-step shared by complete-data fitting and EM: node parameters from
/// (expected) pooled moments.
pub(crate) fn fit_from_moments(
    moments: &Moments,
    structure: &DbnStructure,
) -> Result<GaussianDbn> {
    let mut init = Vec::with_capacity(structure.n_vars);
    let mut trans = Vec::with_capacity(structure.n_vars);
    let mut ridge_nodes = Vec::new();
    for v in 0..structure.n_vars {
        let fit = fit_family(moments, &family_instances(structure, v, true))?;
        if fit.ridged {
            ridge_nodes.push(format!("v{v}@init"));
        }
        init.push(NodeParams {
            weights: fit.weights,
            intercept: fit.intercept,
            noise_std: fit.sigma2.sqrt().max(NOISE_FLOOR),
        });
        if structure.n_slices > 1 {
            let fit = fit_family(moments, &family_instances(structure, v, false))?;
            if fit.ridged {
                ridge_nodes.push(format!("v{v}@trans"));
            }
            trans.push(NodeParams {
                weights: fit.weights,
                intercept: fit.intercept,
                noise_std: fit.sigma2.sqrt().max(NOISE_FLOOR),
            });
        } else {
            trans.push(init[v].clone());
        }
    }
    Ok(GaussianDbn {
        structure: structure.clone(),
        init,
        trans,
        ridge_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdbn::{log_likelihood, random_gdbn, sample_gdbn};
    use crate::rng::rng_from;
    use rand_distr::{Distribution, StandardNormal};

    fn chain_data(rows: usize, noise: f64, seed: u64) -> Mat {
        // Two columns with y = 2x + noise; modeled as 2 vars, 1 slice.
        let mut rng = rng_from(seed);
        let mut out = Mat::zeros(rows, 2);
        for r in 0..rows {
            let x: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            out.set(r, 0, x);
            out.set(r, 1, 2.0 * x + noise * e);
        }
        out
    }

    #[test]
    fn recovers_chain_edge() {
        let data = chain_data(5000, 1.0, 3);
        let s = learn_structure(&data, 2, 1, 3).unwrap();
        assert_eq!(s.within_parents[1], vec![0]);
        assert!(s.within_parents[0].is_empty());

        // BIC comparison oracle over the 2-node enumeration.
        let empty = DbnStructure::empty(2, 1);
        let mut with_edge = DbnStructure::empty(2, 1);
        with_edge.within_parents[1].push(0);
        let s_empty = bic_score(&data, &empty).unwrap();
        let s_edge = bic_score(&data, &with_edge).unwrap();
        assert!(s_edge > s_empty);
        assert!((bic_score(&data, &s).unwrap() - s_edge).abs() < 1e-9);
    }

    #[test]
    fn single_column_learns_nothing() {
        let mut rng = rng_from(5);
        let data = Mat::from_vec(
            50,
            1,
            (0..50).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>(),
        );
        let s = learn_structure(&data, 1, 1, 3).unwrap();
        assert!(s.within_parents[0].is_empty());
        assert!(s.inter_parents[0].is_empty());
    }

    #[test]
    fn zero_parent_cap_blocks_all_edges() {
        let data = chain_data(500, 0.1, 7);
        let s = learn_structure(&data, 2, 1, 0).unwrap();
        assert!(s.within_parents.iter().all(Vec::is_empty));
    }

    #[test]
    fn learning_is_deterministic() {
        let dbn = random_gdbn(6, 2, 0.3, 11).unwrap();
        let data = sample_gdbn(&dbn, 400, 13).unwrap();
        let a = learn_structure(&data, 6, 2, 3).unwrap();
        let b = learn_structure(&data, 6, 2, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_linear_fit_hits_noise_floor() {
        // y = 2x + 1 exactly: weight 2, intercept 1, noise at the 1e-3 floor.
        let mut data = Mat::zeros(50, 2);
        let mut rng = rng_from(17);
        for r in 0..50 {
            let x: f64 = StandardNormal.sample(&mut rng);
            data.set(r, 0, x);
            data.set(r, 1, 2.0 * x + 1.0);
        }
        let mut s = DbnStructure::empty(2, 1);
        s.within_parents[1].push(0);
        let dbn = fit_parameters(&data, &s).unwrap();
        assert!((dbn.init[1].weights[0] - 2.0).abs() < 1e-9);
        assert!((dbn.init[1].intercept - 1.0).abs() < 1e-9);
        assert_eq!(dbn.init[1].noise_std, NOISE_FLOOR);
    }

    #[test]
    fn no_parents_fit_is_marginal_gaussian() {
        let mut rng = rng_from(19);
        let vals: Vec<f64> = (0..2000).map(|_| 3.0 + 0.7 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect();
        let data = Mat::from_vec(2000, 1, vals.clone());
        let s = DbnStructure::empty(1, 1);
        let dbn = fit_parameters(&data, &s).unwrap();
        let mean = data.column_mean(0);
        let std = data.column_std(0);
        assert!((dbn.init[0].intercept - mean).abs() < 1e-12);
        assert!((dbn.init[0].noise_std - std).abs() < 1e-9);
    }

    #[test]
    fn collinear_parents_flag_the_ridge_fallback() {
        // Two identical parent columns make the design singular.
        let mut rng = rng_from(23);
        let mut data = Mat::zeros(100, 3);
        for r in 0..100 {
            let x: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            data.set(r, 0, x);
            data.set(r, 1, x);
            data.set(r, 2, x + 0.1 * e);
        }
        let mut s = DbnStructure::empty(3, 1);
        s.within_parents[2] = vec![0, 1];
        let dbn = fit_parameters(&data, &s).unwrap();
        assert_eq!(dbn.ridge_nodes, vec!["v2@init".to_string()]);
    }

    #[test]
    fn sample_fit_round_trip_recovers_weights() {
        // Known structure, 10k rows: max weight error < 0.05, five networks.
        for seed in 0..5 {
            let dbn = random_gdbn(6, 2, 0.4, 100 + seed).unwrap();
            let data = sample_gdbn(&dbn, 10_000, 200 + seed).unwrap();
            let fitted = fit_parameters(&data, &dbn.structure).unwrap();
            let mut max_err = 0.0f64;
            for v in 0..6 {
                for (a, b) in dbn.init[v].weights.iter().zip(&fitted.init[v].weights) {
                    max_err = max_err.max((a - b).abs());
                }
                for (a, b) in dbn.trans[v].weights.iter().zip(&fitted.trans[v].weights) {
                    max_err = max_err.max((a - b).abs());
                }
            }
            assert!(max_err < 0.05, "seed {seed}: max weight error {max_err}");
        }
    }

    #[test]
    fn fitted_model_scores_close_to_truth_on_fresh_data() {
        let dbn = random_gdbn(5, 2, 0.4, 31).unwrap();
        let train = sample_gdbn(&dbn, 5000, 33).unwrap();
        let test = sample_gdbn(&dbn, 1000, 35).unwrap();
        let learned = learn_structure(&train, 5, 2, 3).unwrap();
        let fitted = fit_parameters(&train, &learned).unwrap();
        let ll_true = log_likelihood(&dbn, &test).unwrap() / 1000.0;
        let ll_fit = log_likelihood(&fitted, &test).unwrap() / 1000.0;
        assert!(
            (ll_fit - ll_true).abs() < 0.05 * ll_true.abs().max(1.0),
            "fit {ll_fit} vs truth {ll_true}"
        );
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let data = chain_data(3, 1.0, 37);
        let mut s = DbnStructure::empty(2, 1);
        s.within_parents[1] = vec![0];
        // 3 rows with max parent count 1 + 1 = 2: 3 > 2 passes; shrink more.
        let tiny = Mat::from_rows(vec![data.row(0).to_vec(), data.row(1).to_vec()]);
        assert!(fit_parameters(&tiny, &s).is_err());
    }
}
