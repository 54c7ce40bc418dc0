//! Categorical mixture autoregressive model over the joint state space
//! {0,1,2}^n: lexicographic state encoding, transition counting, Dirichlet
//! posterior over mixture weights, one-step forecasting and a greedy
//! coordinate-descent distiller for the (gradient-free) categorical case.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{categorical_schema, SyntheticDataset};
use crate::error::{DistillError, Result};
use crate::linalg::Mat;
use crate::rng::rng_from;

pub const N_STATES_PER_FEATURE: usize = 3;

/// Joint state count 3^n.
pub fn joint_states(n_features: usize) -> usize {
    N_STATES_PER_FEATURE.pow(n_features as u32)
}

/// Base-3 encoding of a feature vector, feature 0 most significant.
pub fn encode_state(x: &[u8]) -> Result<usize> {
    let mut code = 0usize;
    for (i, &v) in x.iter().enumerate() {
        if v > 2 {
            return Err(DistillError::StateOutOfRange {
                value: i64::from(v),
                index: i,
            });
        }
        code = code * 3 + v as usize;
    }
    Ok(code)
}

/// Inverse of [`encode_state`].
pub fn decode_state(code: usize, n_features: usize) -> Vec<u8> {
    let mut out = vec![0u8; n_features];
    let mut rem = code;
    for i in (0..n_features).rev() {
        out[i] = (rem % 3) as u8;
        rem /= 3;
    }
    out
}

/// N sequences of length T over {0,1,2}^n, stored flat in (sequence, time,
/// feature) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalSeries {
    n_features: usize,
    t_len: usize,
    data: Vec<u8>,
}

impl CategoricalSeries {
    pub fn new(n_features: usize, t_len: usize, data: Vec<u8>) -> Result<Self> {
        if n_features == 0 || t_len == 0 || !data.len().is_multiple_of(n_features * t_len) {
            return Err(DistillError::InvalidConfig(format!(
                "series dims ({n_features} features, T={t_len}) do not tile {} entries",
                data.len()
            )));
        }
        for (i, &v) in data.iter().enumerate() {
            if v > 2 {
                return Err(DistillError::StateOutOfRange {
                    value: i64::from(v),
                    index: i,
                });
            }
        }
        Ok(CategoricalSeries {
            n_features,
            t_len,
            data,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn n_seqs(&self) -> usize {
        self.data.len() / (self.n_features * self.t_len)
    }

    pub fn state(&self, seq: usize, t: usize) -> &[u8] {
        let off = (seq * self.t_len + t) * self.n_features;
        &self.data[off..off + self.n_features]
    }

    pub fn encoded(&self, seq: usize, t: usize) -> usize {
        encode_state(self.state(seq, t)).expect("validated on construction")
    }
}

/// Mixture of row-stochastic transition matrices over the joint state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureArModel {
    pub n_features: usize,
    pub components: Vec<Mat>,
    pub mixture_weights: Vec<f64>,
}

impl MixtureArModel {
    pub fn new(n_features: usize, components: Vec<Mat>, mixture_weights: Vec<f64>) -> Result<Self> {
        let model = MixtureArModel {
            n_features,
            components,
            mixture_weights,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let nbar = joint_states(self.n_features);
        if self.components.is_empty() || self.components.len() != self.mixture_weights.len() {
            return Err(DistillError::InvalidConfig(
                "component and weight counts differ".into(),
            ));
        }
        for m in &self.components {
            if m.rows() != nbar || m.cols() != nbar {
                return Err(DistillError::ShapeMismatch {
                    context: "mixar component",
                    expected: nbar,
                    got: m.rows(),
                });
            }
            for r in 0..nbar {
                let row = m.row(r);
                if row.iter().any(|&p| p < 0.0) {
                    return Err(DistillError::NotADistribution("negative transition entry"));
                }
                if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(DistillError::NotADistribution("component row sum"));
                }
            }
        }
        if (self.mixture_weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
            || self.mixture_weights.iter().any(|&w| w < 0.0)
        {
            return Err(DistillError::NotADistribution("mixture weights"));
        }
        Ok(())
    }

    /// Effective transition matrix Σ_q m_q M_q.
    pub fn mean_matrix(&self) -> Mat {
        let nbar = joint_states(self.n_features);
        let mut out = Mat::zeros(nbar, nbar);
        for (w, m) in self.mixture_weights.iter().zip(&self.components) {
            out.scaled_add(*w, m);
        }
        out
    }
}

/// Raw transition counts: entry (i, j) is the number of observed t → t+1
/// steps from joint state i to joint state j, summed over sequences.
pub fn transition_counts(series: &CategoricalSeries) -> Result<Mat> {
    if series.t_len < 2 {
        return Err(DistillError::InvalidConfig(
            "transition counting needs T >= 2".into(),
        ));
    }
    let nbar = joint_states(series.n_features);
    let mut counts = Mat::zeros(nbar, nbar);
    for seq in 0..series.n_seqs() {
        for t in 0..series.t_len - 1 {
            let i = series.encoded(seq, t);
            let j = series.encoded(seq, t + 1);
            counts.set(i, j, counts.get(i, j) + 1.0);
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionFrequencies {
    pub matrix: Mat,
    /// Rows with no observed visits, completed as uniform (the Dirichlet
    /// prior mean).
    pub unvisited_rows: Vec<usize>,
}

/// Row-normalized empirical transition frequencies.
pub fn transition_frequencies(series: &CategoricalSeries) -> Result<TransitionFrequencies> {
    let counts = transition_counts(series)?;
    let nbar = counts.rows();
    let mut matrix = Mat::zeros(nbar, nbar);
    let mut unvisited = Vec::new();
    for i in 0..nbar {
        let total: f64 = counts.row(i).iter().sum();
        if total == 0.0 {
            unvisited.push(i);
            for j in 0..nbar {
                matrix.set(i, j, 1.0 / nbar as f64);
            }
        } else {
            for j in 0..nbar {
                matrix.set(i, j, counts.get(i, j) / total);
            }
        }
    }
    Ok(TransitionFrequencies {
        matrix,
        unvisited_rows: unvisited,
    })
}

/// Posterior mixture weights given fixed components and a transition count
/// matrix, under the uniform Dirichlet prior with concentration `alpha`.
///
/// Component scores are count-weighted log-likelihoods
/// Σ_ij counts(i,j) · log(M_q(i,j) + ε) with ε = 1e-12 guarding structural
/// zeros; weights are normalized in log space with max subtraction. All-zero
/// counts fall back to the prior mean (uniform).
pub fn posterior_mixture_weights(
    components: &[Mat],
    counts: &Mat,
    _alpha: f64,
) -> Result<Vec<f64>> {
    const EPS: f64 = 1e-12;
    let m = components.len();
    if m == 0 {
        return Err(DistillError::NoSamples("posterior components"));
    }
    for (i, v) in counts.data().iter().enumerate() {
        if *v < 0.0 || !v.is_finite() {
            return Err(DistillError::NonFinite {
                context: "transition counts",
                index: i,
            });
        }
    }
    let total: f64 = counts.data().iter().sum();
    if total == 0.0 {
        return Ok(vec![1.0 / m as f64; m]);
    }
    let scores: Vec<f64> = components
        .iter()
        .map(|comp| {
            counts
                .data()
                .iter()
                .zip(comp.data())
                .filter(|(c, _)| **c > 0.0)
                .map(|(c, p)| c * (p + EPS).ln())
                .sum::<f64>()
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|w| w / z).collect())
}

/// One-step forecast: Î = (Σ_q m_q M_q)ᵀ x for a state distribution (or
/// one-hot) x over the joint space.
pub fn forecast(model: &MixtureArModel, x: &[f64]) -> Result<Vec<f64>> {
    let nbar = joint_states(model.n_features);
    if x.len() != nbar {
        return Err(DistillError::ShapeMismatch {
            context: "forecast input",
            expected: nbar,
            got: x.len(),
        });
    }
    if x.iter().any(|&p| p < -1e-12) || (x.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DistillError::NotADistribution("forecast input"));
    }
    let mean = model.mean_matrix();
    let mut out = vec![0.0; nbar];
    for i in 0..nbar {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += xi * mean.get(i, j);
        }
    }
    Ok(out)
}

/// Mean squared distance between the one-step forecast from each observed
/// state and the one-hot of the state that actually followed.
///
/// Grouping transitions by (from, to) pair, the loss is
/// (1/K) Σ_ij C_ij (‖M̄_i‖² − 2 M̄_ij + 1) with C the transition counts.
pub fn reconstruction_loss(model: &MixtureArModel, series: &CategoricalSeries) -> Result<f64> {
    let counts = transition_counts(series)?;
    reconstruction_loss_from_counts(model, &counts)
}

/// [`reconstruction_loss`] against a precomputed transition-count matrix.
pub fn reconstruction_loss_from_counts(model: &MixtureArModel, counts: &Mat) -> Result<f64> {
    let nbar = joint_states(model.n_features);
    if counts.rows() != nbar {
        return Err(DistillError::ShapeMismatch {
            context: "reconstruction counts",
            expected: nbar,
            got: counts.rows(),
        });
    }
    let total: f64 = counts.data().iter().sum();
    if total == 0.0 {
        return Err(DistillError::NoSamples("reconstruction transitions"));
    }
    let mean = model.mean_matrix();
    let mut loss = 0.0;
    for i in 0..nbar {
        let row_visits: f64 = counts.row(i).iter().sum();
        if row_visits == 0.0 {
            continue;
        }
        let row_norm_sq: f64 = mean.row(i).iter().map(|p| p * p).sum();
        for j in 0..nbar {
            let c = counts.get(i, j);
            if c > 0.0 {
                loss += c * (row_norm_sq - 2.0 * mean.get(i, j) + 1.0);
            }
        }
    }
    Ok(loss / total)
}

/// Sample series from the model's effective transition matrix, starting each
/// sequence from the uniform distribution over joint states.
pub fn sample_series(
    model: &MixtureArModel,
    n_seqs: usize,
    t_len: usize,
    seed: u64,
) -> Result<CategoricalSeries> {
    if n_seqs == 0 || t_len == 0 {
        return Err(DistillError::NoSamples("sample_series"));
    }
    let nbar = joint_states(model.n_features);
    let mean = model.mean_matrix();
    let mut rng = rng_from(seed);
    let mut data = Vec::with_capacity(n_seqs * t_len * model.n_features);
    for _ in 0..n_seqs {
        let mut state = rng.gen_range(0..nbar);
        data.extend_from_slice(&decode_state(state, model.n_features));
        for _ in 1..t_len {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut next = nbar - 1;
            for j in 0..nbar {
                acc += mean.get(state, j);
                if u < acc {
                    next = j;
                    break;
                }
            }
            state = next;
            data.extend_from_slice(&decode_state(state, model.n_features));
        }
    }
    CategoricalSeries::new(model.n_features, t_len, data)
}

#[derive(Debug, Clone)]
pub struct GreedyDistillOutcome {
    pub dataset: SyntheticDataset,
    /// Initial loss followed by the loss after each accepted improvement.
    pub trace: Vec<f64>,
    pub final_weights: Vec<f64>,
}

/// Greedy coordinate-descent distiller for the categorical case, where no
/// gradient exists. The synthetic set is `ipc` windows of `length` steps;
/// sweeps visit entries row-major, try each of the 3 states and keep the
/// value minimizing the pipeline loss
///   posterior weights from D̂ → forecast on train → reconstruction loss.
/// Stops after `max_sweeps` or a full sweep without improvement.
pub fn greedy_distill_categorical(
    train: &CategoricalSeries,
    ipc: usize,
    length: usize,
    components: &[Mat],
    max_sweeps: usize,
    seed: u64,
) -> Result<GreedyDistillOutcome> {
    if ipc == 0 {
        return Err(DistillError::NoSamples("greedy distill ipc"));
    }
    if length < 2 {
        return Err(DistillError::InvalidConfig(
            "window length must be >= 2".into(),
        ));
    }
    if train.t_len() < length {
        return Err(DistillError::InvalidConfig(format!(
            "window length {length} exceeds series length {}",
            train.t_len()
        )));
    }
    let n = train.n_features();
    let m = components.len() as f64;
    let alpha = 1.0 / m;
    let train_counts = transition_counts(train)?;

    // Windows subsampled from the training sequences.
    let mut rng = rng_from(seed);
    let mut windows: Vec<u8> = Vec::with_capacity(ipc * length * n);
    for _ in 0..ipc {
        let seq = rng.gen_range(0..train.n_seqs());
        let start = rng.gen_range(0..=train.t_len() - length);
        for t in 0..length {
            windows.extend_from_slice(train.state(seq, start + t));
        }
    }

    let series_of = |data: &[u8]| CategoricalSeries::new(n, length, data.to_vec()).unwrap();
    let loss_of = |data: &[u8]| -> Result<f64> {
        let counts = transition_counts(&series_of(data))?;
        let weights = posterior_mixture_weights(components, &counts, alpha)?;
        let model = MixtureArModel::new(n, components.to_vec(), weights)?;
        reconstruction_loss_from_counts(&model, &train_counts)
    };

    let mut best_loss = loss_of(&windows)?;
    let mut trace = vec![best_loss];
    for _ in 0..max_sweeps {
        let mut improved = false;
        for entry in 0..windows.len() {
            let current = windows[entry];
            let mut best_state = current;
            for cand in 0..N_STATES_PER_FEATURE as u8 {
                if cand == current {
                    continue;
                }
                windows[entry] = cand;
                let l = loss_of(&windows)?;
                if l < best_loss {
                    best_loss = l;
                    best_state = cand;
                }
            }
            windows[entry] = best_state;
            if best_state != current {
                improved = true;
                trace.push(best_loss);
            }
        }
        if !improved {
            break;
        }
    }

    let final_counts = transition_counts(&series_of(&windows))?;
    let final_weights = posterior_mixture_weights(components, &final_counts, alpha)?;
    let values = Mat::from_vec(
        ipc,
        length * n,
        windows.iter().map(|&v| f64::from(v)).collect(),
    );
    let dataset = SyntheticDataset::new(categorical_schema(length, n), values)?;
    Ok(GreedyDistillOutcome {
        dataset,
        trace,
        final_weights,
    })
}

/// Interpret a categorical synthetic dataset (windows as rows) back as a
/// series.
pub fn dataset_as_series(d: &SyntheticDataset, n_features: usize) -> Result<CategoricalSeries> {
    let length = d.n_features() / n_features;
    let data: Vec<u8> = d.values().data().iter().map(|&v| v as u8).collect();
    CategoricalSeries::new(n_features, length, data)
}

pub mod io {
    //! CSV persistence: one line per (sequence, t) with the state vector.

    use std::io::Write;
    use std::path::Path;

    use super::CategoricalSeries;
    use crate::error::Result;

    pub fn write_series_csv(series: &CategoricalSeries, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("sequence_id,t");
        for f in 0..series.n_features() {
            out.push_str(&format!(",f{f}"));
        }
        out.push('\n');
        for seq in 0..series.n_seqs() {
            for t in 0..series.t_len() {
                out.push_str(&format!("{seq},{t}"));
                for &v in series.state(seq, t) {
                    out.push_str(&format!(",{v}"));
                }
                out.push('\n');
            }
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn read_series_csv(path: &Path) -> Result<CategoricalSeries> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let n_features = header.split(',').count().saturating_sub(2);
        let mut data = Vec::new();
        let mut t_len = 0usize;
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let _seq = parts.next();
            let t: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .unwrap_or_default();
            t_len = t_len.max(t + 1);
            for p in parts {
                data.push(p.trim().parse::<u8>().map_err(|_| {
                    crate::error::DistillError::InvalidConfig(format!(
                        "bad state value {p:?} in {}",
                        path.display()
                    ))
                })?);
            }
        }
        CategoricalSeries::new(n_features, t_len, data)
    }
}
