//! The medical-fusion pipeline: corrupt a clean sample into heterogeneous
//! partitions (hidden columns + observation noise), evaluate a synthetic
//! dataset by the likelihood its fitted network assigns to EM-completed
//! training subsamples, and distill with the zero-order outer loop.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{em_impute, fit_parameters, learn_structure, log_likelihood, MaskedMatrix};
use crate::dataset::{dbn_schema, ColumnRole, SyntheticDataset};
use crate::error::{DistillError, Result};
use crate::linalg::Mat;
use crate::rng::{child_seed, rng_from};
use crate::zo::{zo_distill_observed, Trace, ZoConfig};

/// One heterogeneous source: rows with the partition's hidden columns
/// masked and noise added to everything visible.
#[derive(Debug, Clone)]
pub struct Partition {
    pub rows: MaskedMatrix,
    pub hidden_cols: Vec<usize>,
    /// Row indices into the source matrix, for reassembly.
    pub source_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PartitionedTrainSet {
    pub partitions: Vec<Partition>,
    pub noise_std: f64,
    pub n_cols: usize,
}

impl PartitionedTrainSet {
    pub fn total_rows(&self) -> usize {
        self.partitions.iter().map(|p| p.rows.rows()).sum()
    }

    /// Importance weight of a partition: its visible-column fraction, so a
    /// fully observed partition weighs 1.
    pub fn partition_weight(&self, p: usize) -> f64 {
        1.0 - self.partitions[p].hidden_cols.len() as f64 / self.n_cols as f64
    }

    /// Undo the round-robin split, ignoring masks and noise. The lossless-
    /// corruption check (hide_frac = 0, noise = 0) reassembles the input
    /// exactly.
    pub fn reassemble(&self) -> Mat {
        let mut rows = vec![vec![0.0; self.n_cols]; self.total_rows()];
        for part in &self.partitions {
            for (local, &src) in part.source_rows.iter().enumerate() {
                rows[src] = part.rows.data().row(local).to_vec();
            }
        }
        Mat::from_rows(rows)
    }
}

/// Split rows round-robin into `k` near-equal partitions; per partition,
/// mask ceil(hide_frac · n_cols) randomly chosen columns (independent draws
/// per partition) and add i.i.d. N(0, noise_std²) to every visible entry.
pub fn corrupt_partitions(
    clean: &Mat,
    k: usize,
    hide_frac: f64,
    noise_std: f64,
    seed: u64,
) -> Result<PartitionedTrainSet> {
    if k == 0 {
        return Err(DistillError::InvalidConfig("need k >= 1 partitions".into()));
    }
    if !(0.0..1.0).contains(&hide_frac) {
        return Err(DistillError::InvalidConfig(format!(
            "hide_frac must lie in [0, 1), got {hide_frac}"
        )));
    }
    let n_cols = clean.cols();
    let n_hide = (hide_frac * n_cols as f64).ceil() as usize;
    if n_hide >= n_cols {
        return Err(DistillError::InvalidConfig(format!(
            "hide_frac {hide_frac} would mask all {n_cols} columns"
        )));
    }
    let mut rng = rng_from(seed);
    let mut partitions = Vec::with_capacity(k);
    for p in 0..k {
        let source_rows: Vec<usize> = (p..clean.rows()).step_by(k).collect();
        let mut cols: Vec<usize> = (0..n_cols).collect();
        for i in 0..n_hide {
            let j = rng.gen_range(i..n_cols);
            cols.swap(i, j);
        }
        let mut hidden_cols: Vec<usize> = cols[..n_hide].to_vec();
        hidden_cols.sort_unstable();
        let mut data = Mat::zeros(source_rows.len(), n_cols);
        let mut mask = vec![false; source_rows.len() * n_cols];
        for (local, &src) in source_rows.iter().enumerate() {
            for c in 0..n_cols {
                if hidden_cols.contains(&c) {
                    mask[local * n_cols + c] = true;
                } else {
                    let noise: f64 = if noise_std > 0.0 {
                        noise_std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                    } else {
                        0.0
                    };
                    data.set(local, c, clean.get(src, c) + noise);
                }
            }
        }
        partitions.push(Partition {
            rows: MaskedMatrix::new(data, mask)?,
            hidden_cols,
            source_rows,
        });
    }
    Ok(PartitionedTrainSet {
        partitions,
        noise_std,
        n_cols,
    })
}

/// Knobs of the inner loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedicalOpts {
    pub max_parents: usize,
    pub em_iters: usize,
    pub em_tol: f64,
    pub subsample_size: usize,
}

impl Default for MedicalOpts {
    fn default() -> Self {
        MedicalOpts {
            max_parents: 3,
            em_iters: 4,
            em_tol: 1e-4,
            subsample_size: 128,
        }
    }
}

/// Dimensions of a DBN-shaped synthetic dataset, read from its schema.
pub fn dataset_dims(d: &SyntheticDataset) -> Result<(usize, usize)> {
    let mut n_vars = 0;
    let mut n_slices = 0;
    for spec in d.schema() {
        match spec.role {
            ColumnRole::DbnVariable { var, slice } => {
                n_vars = n_vars.max(var + 1);
                n_slices = n_slices.max(slice + 1);
            }
            _ => {
                return Err(DistillError::InvalidConfig(
                    "dataset schema is not DBN-shaped".into(),
                ))
            }
        }
    }
    Ok((n_vars, n_slices))
}

/// One evaluation of the distillation loss:
///
/// 1. learn structure and fit parameters on the synthetic dataset;
/// 2. EM-impute the (masked) training subsample starting from that model;
/// 3. score: negative mean log-likelihood the synthetic model assigns to
///    the validation matrix — the EM-completed subsample when no explicit
///    validation set is supplied.
///
/// Pure function of its inputs; all randomness is upstream.
pub fn dd_loss_eval(
    d_hat: &SyntheticDataset,
    subsample: &MaskedMatrix,
    validation: Option<&Mat>,
    opts: &MedicalOpts,
) -> Result<f64> {
    d_hat.validate()?;
    let (n_vars, n_slices) = dataset_dims(d_hat)?;
    let structure = learn_structure(d_hat.values(), n_vars, n_slices, opts.max_parents)?;
    let model = fit_parameters(d_hat.values(), &structure)?;
    let em = em_impute(&model, subsample, opts.em_iters, opts.em_tol)?;
    let val = validation.unwrap_or(&em.completed);
    if val.rows() == 0 {
        return Err(DistillError::NoSamples("dd_loss_eval validation"));
    }
    Ok(-log_likelihood(&model, val)? / val.rows() as f64)
}

/// Fit a network to `data` and return the mean per-row log-likelihood of
/// `eval` under it — the reporting metric for distilled sets, subset
/// baselines and the full-train upper bound.
pub fn fit_and_score(
    data: &Mat,
    n_vars: usize,
    n_slices: usize,
    max_parents: usize,
    eval: &Mat,
) -> Result<f64> {
    let structure = learn_structure(data, n_vars, n_slices, max_parents)?;
    let model = fit_parameters(data, &structure)?;
    Ok(log_likelihood(&model, eval)? / eval.rows() as f64)
}

/// Weighted subsample without replacement across partitions
/// (Efraimidis–Spirakis keys u^(1/w)), weights = visible-column fraction.
fn draw_subsample(train: &PartitionedTrainSet, size: usize, seed: u64) -> Result<MaskedMatrix> {
    let mut rng = rng_from(seed);
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(train.total_rows());
    for (p, part) in train.partitions.iter().enumerate() {
        let w = train.partition_weight(p).max(1e-9);
        for r in 0..part.rows.rows() {
            let u: f64 = rng.gen_range(0.0f64..1.0).max(1e-12);
            keyed.push((u.powf(1.0 / w), p, r));
        }
    }
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let take = size.min(keyed.len());
    let picked: Vec<MaskedMatrix> = keyed[..take]
        .iter()
        .map(|&(_, p, r)| train.partitions[p].rows.row_matrix(r))
        .collect();
    let refs: Vec<&MaskedMatrix> = picked.iter().collect();
    MaskedMatrix::vstack(&refs)
}

/// Initialize the synthetic dataset by sampling rows across partitions in
/// proportion to their sizes (largest-remainder rounding), filling masked
/// entries with standard normal draws.
fn init_synthetic(
    train: &PartitionedTrainSet,
    n_vars: usize,
    n_slices: usize,
    ipc: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    let total = train.total_rows();
    if ipc > total {
        return Err(DistillError::IpcTooLarge { ipc, rows: total });
    }
    let mut rng = rng_from(seed);
    // Largest-remainder quotas per partition.
    let raw: Vec<f64> = train
        .partitions
        .iter()
        .map(|p| ipc as f64 * p.rows.rows() as f64 / total as f64)
        .collect();
    let mut quota: Vec<usize> = raw.iter().map(|q| q.floor() as usize).collect();
    let mut leftover = ipc - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..train.partitions.len()).collect();
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .partial_cmp(&(raw[a] - raw[a].floor()))
            .unwrap()
            .then(a.cmp(&b))
    });
    for &p in &order {
        if leftover == 0 {
            break;
        }
        if quota[p] < train.partitions[p].rows.rows() {
            quota[p] += 1;
            leftover -= 1;
        }
    }

    let mut rows = Vec::with_capacity(ipc);
    for (p, part) in train.partitions.iter().enumerate() {
        let n = part.rows.rows();
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..quota[p].min(n) {
            let j = rng.gen_range(i..n);
            idx.swap(i, j);
        }
        for &r in idx[..quota[p].min(n)].iter() {
            let mut row = part.rows.data().row(r).to_vec();
            for (c, v) in row.iter_mut().enumerate() {
                if part.rows.is_masked(r, c) {
                    *v = StandardNormal.sample(&mut rng);
                }
            }
            rows.push(row);
        }
    }
    SyntheticDataset::new(dbn_schema(n_vars, n_slices), Mat::from_rows(rows))
}

/// Distill a complete synthetic dataset from heterogeneous partitions with
/// the zero-order loop; per iteration the loss is [`dd_loss_eval`] against a
/// fresh importance-weighted subsample. The observer sees every update.
#[allow(clippy::too_many_arguments)]
pub fn distill_medical<O>(
    train: &PartitionedTrainSet,
    n_vars: usize,
    n_slices: usize,
    ipc: usize,
    zo_cfg: &ZoConfig,
    opts: &MedicalOpts,
    seed: u64,
    observer: O,
) -> Result<(SyntheticDataset, Trace)>
where
    O: FnMut(usize, &SyntheticDataset, f64),
{
    if ipc < 2 {
        return Err(DistillError::InvalidConfig(
            "medical distillation needs ipc >= 2".into(),
        ));
    }
    let d_init = init_synthetic(train, n_vars, n_slices, ipc, child_seed(seed, 0))?;
    let subsample_seed = child_seed(seed, 1);
    let loss = |k: usize, d: &SyntheticDataset| -> Result<f64> {
        let subsample = draw_subsample(train, opts.subsample_size, child_seed(subsample_seed, k as u64))?;
        dd_loss_eval(d, &subsample, None, opts)
    };
    zo_distill_observed(loss, &d_init, zo_cfg, child_seed(seed, 2), observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdbn::{random_gdbn, sample_gdbn, GaussianDbn};
    use crate::zo::StepSchedule;

    fn small_train(seed: u64, noise: f64, hide: f64) -> (PartitionedTrainSet, GaussianDbn) {
        let dbn = random_gdbn(5, 2, 0.3, seed).unwrap();
        let clean = sample_gdbn(&dbn, 200, seed + 1).unwrap();
        let train = corrupt_partitions(&clean, 3, hide, noise, seed + 2).unwrap();
        (train, dbn)
    }

    #[test]
    fn five_partitions_hide_four_of_forty_columns() {
        let dbn = random_gdbn(20, 2, 0.15, 3).unwrap();
        let clean = sample_gdbn(&dbn, 100, 5).unwrap();
        let train = corrupt_partitions(&clean, 5, 0.10, 0.1, 7).unwrap();
        assert_eq!(train.partitions.len(), 5);
        for p in &train.partitions {
            assert_eq!(p.hidden_cols.len(), 4);
        }
        assert_eq!(train.total_rows(), 100);
    }

    #[test]
    fn lossless_corruption_reassembles_exactly() {
        let dbn = random_gdbn(4, 2, 0.4, 11).unwrap();
        let clean = sample_gdbn(&dbn, 37, 13).unwrap();
        let train = corrupt_partitions(&clean, 4, 0.0, 0.0, 17).unwrap();
        assert_eq!(train.reassemble(), clean);
    }

    #[test]
    fn masked_column_sets_differ_across_partitions() {
        // With 40 columns and 4 hidden per partition, collisions of the
        // whole hidden set across two partitions are vanishingly rare.
        let dbn = random_gdbn(20, 2, 0.15, 19).unwrap();
        let clean = sample_gdbn(&dbn, 50, 23).unwrap();
        let train = corrupt_partitions(&clean, 5, 0.10, 0.1, 29).unwrap();
        let distinct: std::collections::HashSet<_> = train
            .partitions
            .iter()
            .map(|p| p.hidden_cols.clone())
            .collect();
        assert!(distinct.len() >= 2);
    }

    #[test]
    fn masking_everything_is_an_error() {
        let clean = Mat::from_rows(vec![vec![1.0, 2.0]; 10]);
        assert!(corrupt_partitions(&clean, 2, 0.9, 0.0, 1).is_err());
    }

    #[test]
    fn loss_of_clean_sample_tracks_true_model() {
        // A large clean synthetic set fit and scored against clean
        // validation lands within 5% of the truth's mean LL.
        let (_, dbn) = small_train(31, 0.1, 0.1);
        let big = sample_gdbn(&dbn, 4000, 37).unwrap();
        let validation = sample_gdbn(&dbn, 800, 41).unwrap();
        let d_hat = SyntheticDataset::new(dbn_schema(5, 2), big).unwrap();
        let loss = dd_loss_eval(
            &d_hat,
            &MaskedMatrix::complete(validation.clone()),
            Some(&validation),
            &MedicalOpts::default(),
        )
        .unwrap();
        let truth = -log_likelihood(&dbn, &validation).unwrap() / validation.rows() as f64;
        assert!(
            (loss - truth).abs() < 0.05 * truth.abs(),
            "loss {loss} vs truth {truth}"
        );
    }

    #[test]
    fn in_sample_loss_is_optimistic() {
        // Small synthetic set so the train/test gap dominates sampling noise.
        let (_, dbn) = small_train(43, 0.1, 0.1);
        let d_mat = sample_gdbn(&dbn, 60, 47).unwrap();
        let fresh = sample_gdbn(&dbn, 2000, 53).unwrap();
        let d_hat = SyntheticDataset::new(dbn_schema(5, 2), d_mat.clone()).unwrap();
        let opts = MedicalOpts::default();
        let in_sample = dd_loss_eval(
            &d_hat,
            &MaskedMatrix::complete(d_mat.clone()),
            Some(&d_mat),
            &opts,
        )
        .unwrap();
        let held_out =
            dd_loss_eval(&d_hat, &MaskedMatrix::complete(d_mat), Some(&fresh), &opts).unwrap();
        assert!(in_sample <= held_out, "in {in_sample} vs out {held_out}");
    }

    #[test]
    fn subsample_respects_weights_and_masks() {
        let (train, _) = small_train(59, 0.1, 0.2);
        let sub = draw_subsample(&train, 64, 61).unwrap();
        assert_eq!(sub.rows(), 64);
        assert_eq!(sub.cols(), 10);
        assert!(sub.any_masked());
        let again = draw_subsample(&train, 64, 61).unwrap();
        assert_eq!(sub, again);
    }

    #[test]
    fn init_fills_masked_entries_and_keeps_shape() {
        let (train, _) = small_train(67, 0.1, 0.2);
        let d = init_synthetic(&train, 5, 2, 20, 71).unwrap();
        assert_eq!(d.ipc(), 20);
        assert_eq!(d.n_features(), 10);
        d.validate().unwrap();
    }

    #[test]
    fn ipc_beyond_rows_is_an_error() {
        let (train, _) = small_train(73, 0.1, 0.1);
        assert!(matches!(
            init_synthetic(&train, 5, 2, 999, 1),
            Err(DistillError::IpcTooLarge { .. })
        ));
    }

    #[test]
    fn degenerate_no_corruption_run_stays_near_full_data_optimum() {
        // Zero-noise, zero-masking partitions with ipc = all rows: the
        // initial loss already sits near the full-data optimum and the short
        // run keeps it within 5%.
        let dbn = random_gdbn(4, 2, 0.3, 79).unwrap();
        let clean = sample_gdbn(&dbn, 60, 83).unwrap();
        let train = corrupt_partitions(&clean, 3, 0.0, 0.0, 89).unwrap();
        let opts = MedicalOpts {
            subsample_size: 60,
            ..MedicalOpts::default()
        };
        let zo = ZoConfig {
            m_perturbations: 4,
            sigma: 1e-3,
            iterations: 10,
            schedule: StepSchedule::Constant { s: 1e-4 },
        };
        let (_, trace) = distill_medical(&train, 4, 2, 60, &zo, &opts, 97, |_, _, _| {}).unwrap();
        // Full-data optimum: fit on the clean data, score the subsample
        // (which is the same 60 rows, complete).
        let full = fit_and_score(&clean, 4, 2, 3, &clean).unwrap();
        let optimum = -full;
        for p in &trace {
            assert!(
                (p.loss - optimum).abs() < 0.05 * optimum.abs().max(1.0),
                "iteration {}: loss {} vs optimum {optimum}",
                p.iteration,
                p.loss
            );
        }
    }
}
