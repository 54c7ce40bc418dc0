//! EM imputation of partially observed rows under a linear-Gaussian network.
//!
//! E-step: per mask pattern, factor the visible block of the joint
//! covariance once, fill hidden entries with their conditional means and
//! accumulate expected second moments (conditional means plus the hidden
//! conditional covariance — the full expected statistics, which is what
//! makes the observed-data likelihood provably nondecreasing). M-step:
//! refit node families from the pooled expected moments with the structure
//! held fixed.

use std::collections::BTreeMap;

use super::structure::{fit_from_moments, Moments};
use super::{joint_gaussian, GaussianDbn, MaskedMatrix};
use crate::error::{DistillError, Result};
use crate::linalg::{cholesky, Mat};

#[derive(Debug, Clone)]
pub struct EmOutcome {
    /// Input data with masked entries replaced by conditional means under
    /// the final model.
    pub completed: Mat,
    /// The refit network (structure unchanged, parameters re-estimated).
    pub model: GaussianDbn,
    /// Observed-data log-likelihood per iteration, nondecreasing.
    pub ll_trace: Vec<f64>,
}

struct EStep {
    moments: Moments,
    completed: Mat,
    observed_ll: f64,
}

fn e_step(model: &GaussianDbn, data: &MaskedMatrix) -> Result<EStep> {
    const LN_2PI: f64 = 1.8378770664093453;
    let d = data.cols();
    let joint = joint_gaussian(model);
    let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for r in 0..data.rows() {
        groups.entry(data.row_mask(r).to_vec()).or_default().push(r);
    }
    let mut moments = Moments::zeros(d);
    moments.n = data.rows() as f64;
    let mut completed = data.data().clone();
    let mut observed_ll = 0.0;

    for (pattern, rows) in groups {
        let visible: Vec<usize> = (0..d).filter(|&c| !pattern[c]).collect();
        let hidden: Vec<usize> = (0..d).filter(|&c| pattern[c]).collect();
        let nv = visible.len();
        let nh = hidden.len();

        let mut sigma_vv = Mat::zeros(nv, nv);
        for (a, &i) in visible.iter().enumerate() {
            for (b, &j) in visible.iter().enumerate() {
                sigma_vv.set(a, b, joint.cov.get(i, j));
            }
        }
        let chol = cholesky(&sigma_vv).ok_or(DistillError::InvalidConfig(
            "joint covariance not positive definite on visible block".into(),
        ))?;
        let logdet = chol.log_det();

        // X = Σ_vv⁻¹ Σ_vh, one solve per hidden column; C = Σ_hh − Σ_hv X.
        let mut x_cols: Vec<Vec<f64>> = Vec::with_capacity(nh);
        for &h in &hidden {
            let rhs: Vec<f64> = visible.iter().map(|&v| joint.cov.get(v, h)).collect();
            x_cols.push(chol.solve(&rhs));
        }
        let mut cond_cov = Mat::zeros(nh, nh);
        for (a, &ha) in hidden.iter().enumerate() {
            for (b, &hb) in hidden.iter().enumerate() {
                let mut acc = joint.cov.get(ha, hb);
                for (vi, &v) in visible.iter().enumerate() {
                    acc -= joint.cov.get(v, ha) * x_cols[b][vi];
                }
                cond_cov.set(a, b, acc);
            }
        }

        for &r in &rows {
            let row = data.data().row(r);
            let dv: Vec<f64> = visible.iter().map(|&v| row[v] - joint.mean[v]).collect();
            let y = chol.solve(&dv);
            let quad: f64 = dv.iter().zip(&y).map(|(a, b)| a * b).sum();
            observed_ll += -0.5 * (nv as f64 * LN_2PI + logdet + quad);

            // Conditional mean of the hidden block.
            let mut e_row = row.to_vec();
            for (a, &h) in hidden.iter().enumerate() {
                let mut m = joint.mean[h];
                for (vi, &dvi) in dv.iter().enumerate() {
                    m += x_cols[a][vi] * dvi;
                }
                e_row[h] = m;
                completed.set(r, h, m);
            }

            // Expected moments: outer product of the mean completion plus
            // the conditional covariance on the hidden block.
            for i in 0..d {
                moments.m1[i] += e_row[i];
                for j in 0..=i {
                    let v = moments.m2.get(i, j) + e_row[i] * e_row[j];
                    moments.m2.set(i, j, v);
                    moments.m2.set(j, i, v);
                }
            }
            for (a, &ha) in hidden.iter().enumerate() {
                for (b, &hb) in hidden.iter().enumerate() {
                    let v = moments.m2.get(ha, hb) + cond_cov.get(a, b);
                    moments.m2.set(ha, hb, v);
                }
            }
        }
    }
    Ok(EStep {
        moments,
        completed,
        observed_ll,
    })
}

/// Alternate conditional-mean completion and moment-based refits until the
/// observed-data log-likelihood improves by less than `tol` or `max_iters`
/// is reached. With no mask the data comes back unchanged and the network is
/// refit once. Rows with every entry masked are an error.
pub fn em_impute(
    dbn: &GaussianDbn,
    data: &MaskedMatrix,
    max_iters: usize,
    tol: f64,
) -> Result<EmOutcome> {
    if data.rows() == 0 {
        return Err(DistillError::NoSamples("em_impute data"));
    }
    for r in 0..data.rows() {
        if data.row_mask(r).iter().all(|&m| m) {
            return Err(DistillError::RowFullyMasked { row: r });
        }
    }
    if !data.any_masked() {
        let model = fit_from_moments(&Moments::from_data(data.data()), &dbn.structure)?;
        let ll = super::log_likelihood(&model, data.data())?;
        return Ok(EmOutcome {
            completed: data.data().clone(),
            model,
            ll_trace: vec![ll],
        });
    }

    let mut model = dbn.clone();
    let mut ll_trace = Vec::new();
    let mut completed = data.data().clone();
    for iter in 0..max_iters.max(1) {
        let step = e_step(&model, data)?;
        completed = step.completed;
        let improved = ll_trace
            .last()
            .is_none_or(|&prev| step.observed_ll - prev >= tol);
        ll_trace.push(step.observed_ll);
        if iter > 0 && !improved {
            break;
        }
        model = fit_from_moments(&step.moments, &model.structure)?;
    }
    Ok(EmOutcome {
        completed,
        model,
        ll_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdbn::{random_gdbn, sample_gdbn, DbnStructure, NodeParams};
    use crate::rng::rng_from;
    use rand::Rng;

    fn two_node_exact_model(noise_y: f64) -> GaussianDbn {
        // x ~ N(0, 0.5²), y = 2x + N(0, noise_y²); 2 vars, 1 slice.
        let mut s = DbnStructure::empty(2, 1);
        s.within_parents[1] = vec![0];
        GaussianDbn {
            structure: s,
            init: vec![
                NodeParams {
                    weights: vec![],
                    intercept: 0.0,
                    noise_std: 0.5,
                },
                NodeParams {
                    weights: vec![2.0],
                    intercept: 0.0,
                    noise_std: noise_y,
                },
            ],
            trans: vec![
                NodeParams {
                    weights: vec![],
                    intercept: 0.0,
                    noise_std: 0.5,
                },
                NodeParams {
                    weights: vec![2.0],
                    intercept: 0.0,
                    noise_std: noise_y,
                },
            ],
            ridge_nodes: Vec::new(),
        }
    }

    #[test]
    fn no_mask_refits_once_and_returns_data() {
        let dbn = random_gdbn(4, 2, 0.4, 3).unwrap();
        let data = sample_gdbn(&dbn, 200, 5).unwrap();
        let masked = MaskedMatrix::complete(data.clone());
        let out = em_impute(&dbn, &masked, 10, 1e-6).unwrap();
        assert_eq!(out.completed, data);
        assert_eq!(out.ll_trace.len(), 1);
    }

    #[test]
    fn conditional_mean_imputation_hand_case() {
        // y = 2x with tiny noise; x masked, y = 4 observed: E[x | y] → 2.
        let dbn = two_node_exact_model(1e-5);
        let data = Mat::from_rows(vec![vec![0.0, 4.0]]);
        let masked = MaskedMatrix::new(data, vec![true, false]).unwrap();
        let out = em_impute(&dbn, &masked, 1, 1e-9).unwrap();
        assert!(
            (out.completed.get(0, 0) - 2.0).abs() < 1e-6,
            "imputed {}",
            out.completed.get(0, 0)
        );
    }

    #[test]
    fn fully_masked_row_is_an_error() {
        let dbn = two_node_exact_model(0.1);
        let masked =
            MaskedMatrix::new(Mat::from_rows(vec![vec![0.0, 0.0]]), vec![true, true]).unwrap();
        match em_impute(&dbn, &masked, 3, 1e-6) {
            Err(DistillError::RowFullyMasked { row }) => assert_eq!(row, 0),
            other => panic!("expected fully-masked error, got {other:?}"),
        }
    }

    #[test]
    fn observed_ll_is_nondecreasing_on_random_instances() {
        // MCAR masks over sampled data, many instances; EM must be monotone
        // up to 1e-8 slack.
        for seed in 0..20 {
            let dbn = random_gdbn(5, 2, 0.4, 300 + seed).unwrap();
            let data = sample_gdbn(&dbn, 120, 400 + seed).unwrap();
            let mut rng = rng_from(500 + seed);
            let mask: Vec<bool> = (0..data.rows() * data.cols())
                .map(|_| rng.gen_bool(0.1))
                .collect();
            // Guard against fully masked rows in the random draw.
            let mut mask = mask;
            for r in 0..data.rows() {
                if mask[r * data.cols()..(r + 1) * data.cols()].iter().all(|&m| m) {
                    mask[r * data.cols()] = false;
                }
            }
            let masked = MaskedMatrix::new(data, mask).unwrap();
            // Start EM from a perturbed model so it has room to climb.
            let start = random_gdbn(5, 2, 0.4, 600 + seed).unwrap();
            let out = em_impute(&start, &masked, 8, 1e-12).unwrap();
            for w in out.ll_trace.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-8,
                    "seed {seed}: LL decreased {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn mcar_mask_final_ll_beats_initial() {
        let dbn = random_gdbn(6, 2, 0.3, 41).unwrap();
        let data = sample_gdbn(&dbn, 150, 43).unwrap();
        let mut rng = rng_from(47);
        let mut mask: Vec<bool> = (0..data.rows() * data.cols())
            .map(|_| rng.gen_bool(0.1))
            .collect();
        for r in 0..data.rows() {
            if mask[r * data.cols()..(r + 1) * data.cols()].iter().all(|&m| m) {
                mask[r * data.cols()] = false;
            }
        }
        let masked = MaskedMatrix::new(data, mask).unwrap();
        let start = random_gdbn(6, 2, 0.3, 53).unwrap();
        let out = em_impute(&start, &masked, 10, 1e-9).unwrap();
        assert!(out.ll_trace.last().unwrap() >= out.ll_trace.first().unwrap());
    }
}
