//! Gaussian dynamic Bayesian networks: linear-Gaussian nodes over variables
//! replicated across time slices, with within-slice edges and slice t → t+1
//! edges. The transition template is tied across slices, so a network is
//! described by one within-slice DAG, one inter-slice edge set, slice-0
//! parameters and transition parameters.
//!
//! Complete data travels as [`Mat`] (columns slice-major, `v{i}_t{s}`);
//! partially observed data travels as [`MaskedMatrix`] and must be imputed
//! before any likelihood or fitting operation will accept it.

mod em;
mod medical;
mod structure;

pub use em::{em_impute, EmOutcome};
pub use medical::{
    corrupt_partitions, dd_loss_eval, distill_medical, fit_and_score, MedicalOpts, Partition,
    PartitionedTrainSet,
};
pub use structure::{bic_score, fit_parameters, learn_structure};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DistillError, Result};
use crate::linalg::Mat;
use crate::rng::rng_from;

/// Parent sets of the two-slice template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbnStructure {
    pub n_vars: usize,
    pub n_slices: usize,
    /// Topological order of the within-slice DAG.
    pub var_order: Vec<usize>,
    /// Per variable: same-slice parent variables.
    pub within_parents: Vec<Vec<usize>>,
    /// Per variable: previous-slice parent variables.
    pub inter_parents: Vec<Vec<usize>>,
}

impl DbnStructure {
    pub fn empty(n_vars: usize, n_slices: usize) -> Self {
        DbnStructure {
            n_vars,
            n_slices,
            var_order: (0..n_vars).collect(),
            within_parents: vec![Vec::new(); n_vars],
            inter_parents: vec![Vec::new(); n_vars],
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_vars * self.n_slices
    }

    /// Flat column index of variable `var` at slice `slice`.
    pub fn col(&self, var: usize, slice: usize) -> usize {
        slice * self.n_vars + var
    }

    /// Unrolled parent columns of node (var, slice): within-slice parents at
    /// the same slice, then (for slices past the first) inter-slice parents
    /// at the previous slice. Weight vectors align with this order.
    pub fn node_parent_cols(&self, var: usize, slice: usize) -> Vec<usize> {
        let mut cols: Vec<usize> = self.within_parents[var]
            .iter()
            .map(|&p| self.col(p, slice))
            .collect();
        if slice > 0 {
            cols.extend(self.inter_parents[var].iter().map(|&p| self.col(p, slice - 1)));
        }
        cols
    }

    pub fn max_parent_count(&self) -> usize {
        (0..self.n_vars)
            .map(|v| self.within_parents[v].len() + self.inter_parents[v].len())
            .max()
            .unwrap_or(0)
    }
}

/// Linear-Gaussian node: value = intercept + weights · parents + N(0, std²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianDbn {
    pub structure: DbnStructure,
    /// Slice-0 node parameters; weights over within-slice parents.
    pub init: Vec<NodeParams>,
    /// Transition node parameters shared by slices ≥ 1; weights over
    /// within-slice then inter-slice parents.
    pub trans: Vec<NodeParams>,
    /// Fit metadata: node families whose least squares needed the ridge
    /// fallback.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ridge_nodes: Vec<String>,
}

impl GaussianDbn {
    pub fn node(&self, var: usize, slice: usize) -> &NodeParams {
        if slice == 0 {
            &self.init[var]
        } else {
            &self.trans[var]
        }
    }

    pub fn validate(&self) -> Result<()> {
        for np in self.init.iter().chain(&self.trans) {
            if !(np.noise_std > 0.0) {
                return Err(DistillError::InvalidConfig(
                    "noise_std must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Conditional mean of node (var, slice) given a full row.
    fn node_mean(&self, var: usize, slice: usize, row: &[f64]) -> f64 {
        let np = self.node(var, slice);
        let cols = self.structure.node_parent_cols(var, slice);
        let mut mu = np.intercept;
        for (w, &c) in np.weights.iter().zip(&cols) {
            mu += w * row[c];
        }
        mu
    }
}

/// Random template DAG: admissible edges drawn with probability `edge_prob`
/// under a random topological order, at most 3 parents per node. Source
/// nodes are N(0, 0.5²); other nodes have intercept 0, noise std 0.5 and
/// weights uniform on ±[0.1, 1] so every edge stays detectable.
pub fn random_gdbn(n_vars: usize, n_slices: usize, edge_prob: f64, seed: u64) -> Result<GaussianDbn> {
    const MAX_PARENTS: usize = 3;
    if n_vars == 0 || n_slices < 2 {
        return Err(DistillError::InvalidConfig(format!(
            "random_gdbn needs n_vars >= 1 and n_slices >= 2, got ({n_vars}, {n_slices})"
        )));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(DistillError::InvalidConfig(format!(
            "edge_prob must lie in [0, 1], got {edge_prob}"
        )));
    }
    let mut rng = rng_from(seed);
    let mut var_order: Vec<usize> = (0..n_vars).collect();
    var_order.shuffle(&mut rng);

    let mut within = vec![Vec::new(); n_vars];
    for jpos in 0..n_vars {
        for ipos in 0..jpos {
            let (i, j) = (var_order[ipos], var_order[jpos]);
            if rng.gen_bool(edge_prob) && within[j].len() < MAX_PARENTS {
                within[j].push(i);
            }
        }
    }
    let mut inter = vec![Vec::new(); n_vars];
    for i in 0..n_vars {
        for (j, inter_j) in inter.iter_mut().enumerate() {
            if rng.gen_bool(edge_prob) && within[j].len() + inter_j.len() < MAX_PARENTS {
                inter_j.push(i);
            }
        }
    }

    let mut draw_weight = |rng: &mut rand::rngs::StdRng| -> f64 {
        let mag = rng.gen_range(0.1..1.0);
        if rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    let node_params = |k: usize, rng: &mut rand::rngs::StdRng, draw: &mut dyn FnMut(&mut rand::rngs::StdRng) -> f64| NodeParams {
        weights: (0..k).map(|_| draw(rng)).collect(),
        intercept: 0.0,
        noise_std: 0.5,
    };
    let init: Vec<NodeParams> = (0..n_vars)
        .map(|v| node_params(within[v].len(), &mut rng, &mut draw_weight))
        .collect();
    let trans: Vec<NodeParams> = (0..n_vars)
        .map(|v| node_params(within[v].len() + inter[v].len(), &mut rng, &mut draw_weight))
        .collect();

    Ok(GaussianDbn {
        structure: DbnStructure {
            n_vars,
            n_slices,
            var_order,
            within_parents: within,
            inter_parents: inter,
        },
        init,
        trans,
        ridge_nodes: Vec::new(),
    })
}

/// Ancestral sampling in topological order (slices ascending, variables in
/// the template's order). Output shape n_obs × (n_vars · n_slices).
pub fn sample_gdbn(dbn: &GaussianDbn, n_obs: usize, seed: u64) -> Result<Mat> {
    dbn.validate()?;
    let s = &dbn.structure;
    let mut rng = rng_from(seed);
    let mut out = Mat::zeros(n_obs, s.n_cols());
    for r in 0..n_obs {
        for slice in 0..s.n_slices {
            for &v in &s.var_order {
                let np = dbn.node(v, slice);
                let mu = dbn.node_mean(v, slice, out.row(r));
                let z: f64 = StandardNormal.sample(&mut rng);
                out.set(r, s.col(v, slice), mu + np.noise_std * z);
            }
        }
    }
    Ok(out)
}

/// Total Gaussian log-density of complete data: Σ over rows and nodes of
/// ln N(x; parent mean, noise²).
pub fn log_likelihood(dbn: &GaussianDbn, data: &Mat) -> Result<f64> {
    let s = &dbn.structure;
    if data.cols() != s.n_cols() {
        return Err(DistillError::ShapeMismatch {
            context: "log_likelihood columns",
            expected: s.n_cols(),
            got: data.cols(),
        });
    }
    const LN_2PI: f64 = 1.8378770664093453;
    let mut ll = 0.0;
    for r in 0..data.rows() {
        let row = data.row(r);
        for slice in 0..s.n_slices {
            for v in 0..s.n_vars {
                let np = dbn.node(v, slice);
                let mu = dbn.node_mean(v, slice, row);
                let d = row[s.col(v, slice)] - mu;
                let var = np.noise_std * np.noise_std;
                ll += -0.5 * (LN_2PI + var.ln() + d * d / var);
            }
        }
    }
    Ok(ll)
}

/// Joint Gaussian over all unrolled node values implied by the network.
#[derive(Debug, Clone)]
pub struct JointGaussian {
    pub mean: Vec<f64>,
    pub cov: Mat,
}

/// Mean solves (I − W)μ = b along the topological order; covariance is
/// M Mᵀ with M = (I − W)⁻¹ diag(noise), built row by row the same way.
pub fn joint_gaussian(dbn: &GaussianDbn) -> JointGaussian {
    let s = &dbn.structure;
    let d = s.n_cols();
    let mut mean = vec![0.0; d];
    let mut m = Mat::zeros(d, d);
    for slice in 0..s.n_slices {
        for &v in &s.var_order {
            let node_col = s.col(v, slice);
            let np = dbn.node(v, slice);
            let parents = s.node_parent_cols(v, slice);
            let mut mu = np.intercept;
            for (w, &p) in np.weights.iter().zip(&parents) {
                mu += w * mean[p];
            }
            mean[node_col] = mu;
            // Row of M: σ e_node + Σ w · row(parent).
            m.set(node_col, node_col, np.noise_std);
            for (w, &p) in np.weights.iter().zip(&parents) {
                for k in 0..d {
                    let add = w * m.get(p, k);
                    if add != 0.0 {
                        m.set(node_col, k, m.get(node_col, k) + add);
                    }
                }
            }
        }
    }
    let mut cov = Mat::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in 0..d {
                acc += m.get(i, k) * m.get(j, k);
            }
            cov.set(i, j, acc);
            cov.set(j, i, acc);
        }
    }
    JointGaussian { mean, cov }
}

/// A matrix with a missing-entry mask (true = missing).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    data: Mat,
    mask: Vec<bool>,
}

impl MaskedMatrix {
    pub fn new(data: Mat, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != data.rows() * data.cols() {
            return Err(DistillError::ShapeMismatch {
                context: "masked matrix mask",
                expected: data.rows() * data.cols(),
                got: mask.len(),
            });
        }
        Ok(MaskedMatrix { data, mask })
    }

    pub fn complete(data: Mat) -> Self {
        let mask = vec![false; data.rows() * data.cols()];
        MaskedMatrix { data, mask }
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }

    pub fn data(&self) -> &Mat {
        &self.data
    }

    pub fn is_masked(&self, r: usize, c: usize) -> bool {
        self.mask[r * self.data.cols() + c]
    }

    pub fn row_mask(&self, r: usize) -> &[bool] {
        &self.mask[r * self.data.cols()..(r + 1) * self.data.cols()]
    }

    pub fn any_masked(&self) -> bool {
        self.mask.iter().any(|&m| m)
    }

    /// Fraction of entries visible.
    pub fn visible_fraction(&self) -> f64 {
        let hidden = self.mask.iter().filter(|&&m| m).count();
        1.0 - hidden as f64 / self.mask.len() as f64
    }

    /// The bridge to complete-data operations: errors until imputed.
    pub fn require_complete(&self) -> Result<&Mat> {
        if self.any_masked() {
            return Err(DistillError::MaskedData("impute first"));
        }
        Ok(&self.data)
    }

    /// Stack masked rows from several sources.
    pub fn vstack(parts: &[&MaskedMatrix]) -> Result<MaskedMatrix> {
        let cols = parts
            .first()
            .ok_or(DistillError::NoSamples("vstack"))?
            .cols();
        let mut data = Vec::new();
        let mut mask = Vec::new();
        for p in parts {
            if p.cols() != cols {
                return Err(DistillError::ShapeMismatch {
                    context: "vstack columns",
                    expected: cols,
                    got: p.cols(),
                });
            }
            data.extend_from_slice(p.data.data());
            mask.extend_from_slice(&p.mask);
        }
        let rows = data.len() / cols;
        Ok(MaskedMatrix {
            data: Mat::from_vec(rows, cols, data),
            mask,
        })
    }

    /// Copy with masked entries replaced by the given fill values.
    pub fn filled_with(&self, fill: impl Fn(usize, usize) -> f64) -> Mat {
        let mut out = self.data.clone();
        for r in 0..out.rows() {
            for c in 0..out.cols() {
                if self.is_masked(r, c) {
                    out.set(r, c, fill(r, c));
                }
            }
        }
        out
    }

    /// Single masked row extracted as its own matrix.
    pub fn row_matrix(&self, r: usize) -> MaskedMatrix {
        MaskedMatrix {
            data: Mat::from_vec(1, self.cols(), self.data.row(r).to_vec()),
            mask: self.row_mask(r).to_vec(),
        }
    }
}

pub mod io {
    //! Datasets persist as CSV (`v{i}_t{s}` header, missing entries empty);
    //! models persist as JSON carrying parents, weights, intercepts, noise
    //! stds and dimensions.

    use std::io::Write;
    use std::path::Path;

    use super::{GaussianDbn, MaskedMatrix};
    use crate::error::{DistillError, Result};
    use crate::linalg::Mat;

    pub fn write_masked_csv(m: &MaskedMatrix, n_vars: usize, path: &Path) -> Result<()> {
        let n_slices = m.cols() / n_vars;
        let mut out = String::new();
        let header: Vec<String> = (0..n_slices)
            .flat_map(|s| (0..n_vars).map(move |v| format!("v{v}_t{s}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..m.rows() {
            let cells: Vec<String> = (0..m.cols())
                .map(|c| {
                    if m.is_masked(r, c) {
                        String::new()
                    } else {
                        format!("{}", m.data().get(r, c))
                    }
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        std::fs::File::create(path)?.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn write_matrix_csv(m: &Mat, n_vars: usize, path: &Path) -> Result<()> {
        write_masked_csv(&MaskedMatrix::complete(m.clone()), n_vars, path)
    }

    pub fn read_masked_csv(path: &Path) -> Result<MaskedMatrix> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let cols = header.split(',').count();
        let mut data = Vec::new();
        let mut mask = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            for cell in line.split(',') {
                if cell.trim().is_empty() {
                    data.push(0.0);
                    mask.push(true);
                } else {
                    data.push(cell.trim().parse::<f64>().map_err(|_| {
                        DistillError::InvalidConfig(format!(
                            "bad cell {cell:?} in {}",
                            path.display()
                        ))
                    })?);
                    mask.push(false);
                }
            }
        }
        let rows = data.len() / cols;
        MaskedMatrix::new(Mat::from_vec(rows, cols, data), mask)
    }

    pub fn write_model_json(dbn: &GaussianDbn, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(dbn)?;
        std::fs::File::create(path)?.write_all(json.as_bytes())?;
        Ok(())
    }

    pub fn read_model_json(path: &Path) -> Result<GaussianDbn> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_is_all_sources() {
        let dbn = random_gdbn(6, 2, 0.0, 3).unwrap();
        for v in 0..6 {
            assert!(dbn.structure.within_parents[v].is_empty());
            assert!(dbn.structure.inter_parents[v].is_empty());
            assert_eq!(dbn.init[v].noise_std, 0.5);
            assert_eq!(dbn.init[v].intercept, 0.0);
        }
    }

    #[test]
    fn paper_scale_dims_and_caps() {
        for (n_vars, n_slices) in [(20, 2), (20, 10)] {
            let dbn = random_gdbn(n_vars, n_slices, 0.15, 7).unwrap();
            assert_eq!(dbn.structure.n_cols(), n_vars * n_slices);
            assert!(dbn.structure.max_parent_count() <= 3);
            for v in 0..n_vars {
                for &w in &dbn.init[v].weights {
                    assert!((0.1..=1.0).contains(&w.abs()));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(random_gdbn(0, 2, 0.1, 0).is_err());
        assert!(random_gdbn(3, 1, 0.1, 0).is_err());
        assert!(random_gdbn(3, 2, 1.5, 0).is_err());
    }

    #[test]
    fn source_node_sample_mean_obeys_clt_bound() {
        let dbn = random_gdbn(1, 2, 0.0, 5).unwrap();
        let data = sample_gdbn(&dbn, 10_000, 9).unwrap();
        // 3 σ/√n with σ = 0.5.
        let bound = 3.0 * 0.5 / (10_000f64).sqrt();
        assert!(data.column_mean(0).abs() < bound);
        assert!(data.column_mean(1).abs() < bound);
    }

    #[test]
    fn empty_sample_has_correct_shape() {
        let dbn = random_gdbn(4, 3, 0.2, 1).unwrap();
        let data = sample_gdbn(&dbn, 0, 2).unwrap();
        assert_eq!(data.rows(), 0);
        assert_eq!(data.cols(), 12);
    }

    #[test]
    fn source_log_density_hand_value() {
        // Single source node, observation 0: ln N(0; 0, 0.25) ≈ −0.22579.
        let dbn = random_gdbn(1, 2, 0.0, 5).unwrap();
        let data = Mat::from_rows(vec![vec![0.0, 0.0]]);
        let ll = log_likelihood(&dbn, &data).unwrap();
        assert!((ll - 2.0 * -0.225791352644727).abs() < 1e-9);
    }

    #[test]
    fn observation_at_mean_maximizes_ll() {
        let dbn = random_gdbn(3, 2, 0.4, 11).unwrap();
        let joint = joint_gaussian(&dbn);
        let at_mean = Mat::from_rows(vec![joint.mean.clone()]);
        let ll_mean = log_likelihood(&dbn, &at_mean).unwrap();
        let mut rng = rng_from(13);
        for _ in 0..20 {
            let jittered: Vec<f64> = joint.mean.iter().map(|m| m + rng.gen_range(-1.0..1.0)).collect();
            let ll = log_likelihood(&dbn, &Mat::from_rows(vec![jittered])).unwrap();
            assert!(ll <= ll_mean + 1e-12);
        }
    }

    #[test]
    fn true_model_beats_independence_model_on_its_own_sample() {
        let dbn = random_gdbn(6, 2, 0.5, 17).unwrap();
        let data = sample_gdbn(&dbn, 1000, 19).unwrap();
        // Independence model: same marginals, no edges.
        let joint = joint_gaussian(&dbn);
        let structure = DbnStructure::empty(6, 2);
        let indep = GaussianDbn {
            init: (0..6)
                .map(|v| NodeParams {
                    weights: vec![],
                    intercept: joint.mean[v],
                    noise_std: joint.cov.get(v, v).sqrt(),
                })
                .collect(),
            trans: (6..12)
                .map(|c| NodeParams {
                    weights: vec![],
                    intercept: joint.mean[c],
                    noise_std: joint.cov.get(c, c).sqrt(),
                })
                .collect(),
            structure,
            ridge_nodes: Vec::new(),
        };
        let ll_true = log_likelihood(&dbn, &data).unwrap();
        let ll_indep = log_likelihood(&indep, &data).unwrap();
        assert!(ll_true > ll_indep, "true {ll_true} vs independent {ll_indep}");
    }

    #[test]
    fn log_likelihood_is_additive_over_row_blocks() {
        let dbn = random_gdbn(4, 2, 0.3, 23).unwrap();
        let data = sample_gdbn(&dbn, 64, 29).unwrap();
        let top = Mat::from_rows((0..32).map(|r| data.row(r).to_vec()).collect());
        let bottom = Mat::from_rows((32..64).map(|r| data.row(r).to_vec()).collect());
        let whole = log_likelihood(&dbn, &data).unwrap();
        let parts = log_likelihood(&dbn, &top).unwrap() + log_likelihood(&dbn, &bottom).unwrap();
        assert!((whole - parts).abs() < 1e-9);
    }

    #[test]
    fn joint_gaussian_matches_sampled_moments() {
        let dbn = random_gdbn(4, 2, 0.5, 31).unwrap();
        let joint = joint_gaussian(&dbn);
        let data = sample_gdbn(&dbn, 60_000, 37).unwrap();
        for c in 0..8 {
            assert!(
                (data.column_mean(c) - joint.mean[c]).abs() < 0.05,
                "mean of column {c}"
            );
            let sample_var = data.column_std(c).powi(2);
            assert!(
                (sample_var - joint.cov.get(c, c)).abs() < 0.1 * joint.cov.get(c, c).max(0.1),
                "variance of column {c}: {sample_var} vs {}",
                joint.cov.get(c, c)
            );
        }
    }

    #[test]
    fn masked_matrix_requires_completion() {
        let m = MaskedMatrix::new(Mat::zeros(2, 2), vec![false, true, false, false]).unwrap();
        assert!(matches!(
            m.require_complete(),
            Err(DistillError::MaskedData(_))
        ));
        assert!(MaskedMatrix::complete(Mat::zeros(2, 2))
            .require_complete()
            .is_ok());
    }

    #[test]
    fn model_json_roundtrip() {
        let dbn = random_gdbn(5, 2, 0.3, 41).unwrap();
        let dir = std::env::temp_dir().join("distilled-gdbn-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        io::write_model_json(&dbn, &path).unwrap();
        let back = io::read_model_json(&path).unwrap();
        assert_eq!(dbn, back);
    }

    #[test]
    fn masked_csv_roundtrip() {
        let data = Mat::from_rows(vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]]);
        let mask = vec![false, true, false, false, false, false, true, false];
        let m = MaskedMatrix::new(data, mask).unwrap();
        let dir = std::env::temp_dir().join("distilled-gdbn-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        io::write_masked_csv(&m, 2, &path).unwrap();
        let back = io::read_masked_csv(&path).unwrap();
        assert_eq!(back.rows(), 2);
        assert!(back.is_masked(0, 1));
        assert!(back.is_masked(1, 2));
        assert_eq!(back.data().get(1, 3), 8.0);
    }
}
