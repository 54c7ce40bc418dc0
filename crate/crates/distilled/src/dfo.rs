//! Budgeted derivative-free search over a synthetic dataset: a (1+1)
//! evolution strategy with one-fifth-rule step adaptation.
//!
//! Each candidate is the incumbent plus entrywise Gaussian noise; a candidate
//! replaces the incumbent only on strict improvement. The mutation scale
//! grows by `scale_adapt` on success and shrinks by `scale_adapt^(1/4)` on
//! failure, holding the success rate near one fifth.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::SyntheticDataset;
use crate::error::{DistillError, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfoConfig {
    /// Number of candidate evaluations; the search spends exactly
    /// `budget + 1` loss evaluations counting the initial point.
    pub budget: usize,
    pub mutation_scale: f64,
    /// One-fifth-rule factor, > 1.
    pub scale_adapt: f64,
}

impl Default for DfoConfig {
    fn default() -> Self {
        DfoConfig {
            budget: 100,
            mutation_scale: 0.1,
            scale_adapt: 1.5,
        }
    }
}

impl DfoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(DistillError::InvalidConfig("dfo budget must be >= 1".into()));
        }
        if !(self.mutation_scale > 0.0) {
            return Err(DistillError::InvalidConfig(
                "mutation_scale must be positive".into(),
            ));
        }
        if !(self.scale_adapt > 1.0) {
            return Err(DistillError::InvalidConfig(
                "scale_adapt must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

/// One record per loss evaluation. `candidate_loss` is +inf for candidates
/// rejected on a non-finite evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfoTracePoint {
    pub eval: usize,
    pub candidate_loss: f64,
    pub best_loss: f64,
}

#[derive(Debug, Clone)]
pub struct DfoOutcome {
    pub best: SyntheticDataset,
    pub best_loss: f64,
    pub trace: Vec<DfoTracePoint>,
}

/// (1+1)-ES minimization of `loss` starting from `d_init`; bit-reproducible
/// per seed. Non-finite candidate losses count against the budget as
/// rejections; a non-finite loss at the initial point is an error.
pub fn dfo_search<L>(
    loss: L,
    d_init: &SyntheticDataset,
    cfg: &DfoConfig,
    seed: u64,
) -> Result<DfoOutcome>
where
    L: Fn(&SyntheticDataset) -> Result<f64>,
{
    dfo_search_observed(loss, d_init, cfg, seed, |_, _, _| {})
}

/// [`dfo_search`] with an observer called after every evaluation with
/// (evaluation index, incumbent, incumbent loss); evaluation 0 is the
/// initial point. Used to snapshot the incumbent at budget checkpoints.
pub fn dfo_search_observed<L, O>(
    loss: L,
    d_init: &SyntheticDataset,
    cfg: &DfoConfig,
    seed: u64,
    mut observer: O,
) -> Result<DfoOutcome>
where
    L: Fn(&SyntheticDataset) -> Result<f64>,
    O: FnMut(usize, &SyntheticDataset, f64),
{
    cfg.validate()?;
    d_init.validate()?;
    let mut best = d_init.clone();
    let mut best_loss = loss(&best)?;
    if !best_loss.is_finite() {
        return Err(DistillError::NonFinite {
            context: "dfo initial loss",
            index: 0,
        });
    }
    let mut trace = Vec::with_capacity(cfg.budget + 1);
    trace.push(DfoTracePoint {
        eval: 0,
        candidate_loss: best_loss,
        best_loss,
    });
    observer(0, &best, best_loss);

    let mut rng = rng_from(seed);
    let mut scale = cfg.mutation_scale;
    let shrink = cfg.scale_adapt.powf(0.25);
    let mut candidate = best.clone();
    for eval in 1..=cfg.budget {
        candidate
            .values_mut()
            .data_mut()
            .copy_from_slice(best.values().data());
        for v in candidate.values_mut().data_mut() {
            let step: f64 = StandardNormal.sample(&mut rng);
            *v += scale * step;
        }
        let cand_loss = loss(&candidate)?;
        let accept = cand_loss.is_finite() && cand_loss < best_loss;
        if accept {
            std::mem::swap(&mut best, &mut candidate);
            best_loss = cand_loss;
            scale *= cfg.scale_adapt;
        } else {
            scale /= shrink;
        }
        trace.push(DfoTracePoint {
            eval,
            candidate_loss: if cand_loss.is_finite() {
                cand_loss
            } else {
                f64::INFINITY
            },
            best_loss,
        });
        observer(eval, &best, best_loss);
    }
    Ok(DfoOutcome {
        best,
        best_loss,
        trace,
    })
}
