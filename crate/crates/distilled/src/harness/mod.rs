//! Experiment harness: deterministic, machine-readable reproductions of the
//! three case studies at configurable scale.
//!
//! Every run is a pure function of its resolved configuration and root seed:
//! result files are byte-identical across reruns. Wall-clock timestamps go
//! only to `run.log`, which is excluded from that contract.

mod baselines;
mod config;
mod medical;
mod mixar;
mod pinn;

pub use baselines::run_baselines;
pub use config::{apply_config_file, parse_config_text};
pub use medical::run_medical;
pub use mixar::run_mixar;
pub use pinn::run_pinn;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DistillError, Result};
use crate::rng::child_seed_str;
use crate::zo::StepSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Medical,
    Pinn,
    Mixar,
    Baselines,
}

impl std::str::FromStr for Experiment {
    type Err = DistillError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "medical" => Ok(Experiment::Medical),
            "pinn" => Ok(Experiment::Pinn),
            "mixar" => Ok(Experiment::Mixar),
            "baselines" => Ok(Experiment::Baselines),
            other => Err(DistillError::InvalidConfig(format!(
                "unknown experiment {other:?} (expected medical|pinn|mixar|baselines)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Minutes-scale dimensions preserving every ordering claim.
    Desk,
    /// The published experimental dimensions; hours of compute.
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = DistillError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(DistillError::InvalidConfig(format!(
                "unknown preset {other:?} (expected desk|paper)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedicalConfig {
    pub n_vars: usize,
    pub n_slices: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_partitions: usize,
    pub hide_frac: f64,
    pub noise_std: f64,
    pub edge_prob: f64,
    pub max_parents: usize,
    /// Synthetic-set sizes, each paired with an iteration budget.
    pub ipc: Vec<usize>,
    pub iterations: Vec<usize>,
    pub seeds: usize,
    pub m_perturbations: usize,
    pub sigma: f64,
    pub schedule: StepSchedule,
    pub subsample_size: usize,
    pub em_iters: usize,
    pub em_tol: f64,
}

impl MedicalConfig {
    pub fn desk() -> Self {
        MedicalConfig {
            n_vars: 10,
            n_slices: 2,
            n_train: 500,
            n_test: 500,
            n_partitions: 3,
            hide_frac: 0.10,
            noise_std: 0.1,
            edge_prob: 0.15,
            max_parents: 3,
            ipc: vec![10, 20],
            iterations: vec![100, 400],
            seeds: 3,
            m_perturbations: 10,
            sigma: 0.05,
            schedule: StepSchedule::InverseSqrt { c: 0.02 },
            subsample_size: 128,
            em_iters: 4,
            em_tol: 1e-4,
        }
    }

    pub fn paper() -> Self {
        MedicalConfig {
            n_vars: 20,
            n_slices: 2,
            n_train: 1000,
            n_test: 1000,
            n_partitions: 5,
            hide_frac: 0.10,
            noise_std: 0.1,
            edge_prob: 0.15,
            max_parents: 3,
            ipc: vec![10, 20, 50, 100],
            iterations: vec![160, 1000, 4000, 5500],
            seeds: 3,
            m_perturbations: 10,
            sigma: 0.05,
            schedule: StepSchedule::Constant { s: 4e-5 },
            subsample_size: 200,
            em_iters: 4,
            em_tol: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ipc.len() != self.iterations.len() {
            return Err(DistillError::InvalidConfig(format!(
                "medical.ipc has {} entries but medical.iterations has {}",
                self.ipc.len(),
                self.iterations.len()
            )));
        }
        if self.seeds == 0 {
            return Err(DistillError::InvalidConfig("medical.seeds must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinnConfig {
    pub n_train_bcs: usize,
    pub n_test_bcs: usize,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub noise_std: f64,
    pub tail_a: f64,
    pub widths: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub residual_weight: f64,
    /// CVaR tail fraction for the outer risk; 1.0 degrades to the mean.
    pub risk_tail: f64,
    pub ipc: Vec<usize>,
    /// Budget checkpoints; the largest is the full search budget.
    pub budgets: Vec<usize>,
    pub seeds: usize,
    pub mutation_scale: f64,
    pub scale_adapt: f64,
    /// Training conditions the search objective averages over.
    pub outer_eval_bcs: usize,
    /// Synthetic sets no larger than this initialize from Gaussian noise
    /// instead of a training subsample.
    pub init_noise_ipc_max: usize,
    /// Tail-separation sweep for the OOD-stability table.
    pub ood_a: Vec<f64>,
    pub ood_ipc: usize,
    pub ood_budget: usize,
}

impl PinnConfig {
    pub fn desk() -> Self {
        PinnConfig {
            n_train_bcs: 20,
            n_test_bcs: 8,
            n_interior: 384,
            n_boundary: 16,
            noise_std: 0.05,
            tail_a: 0.4,
            widths: vec![2, 16, 16, 16, 1],
            epochs: 600,
            lr: 0.01,
            residual_weight: 1.0,
            risk_tail: 0.2,
            ipc: vec![10, 20, 40],
            budgets: vec![5, 20, 100],
            seeds: 3,
            mutation_scale: 0.05,
            scale_adapt: 1.5,
            outer_eval_bcs: 3,
            init_noise_ipc_max: 0,
            ood_a: vec![0.5, 0.4, 0.3, 0.2],
            ood_ipc: 64,
            ood_budget: 100,
        }
    }

    pub fn paper() -> Self {
        PinnConfig {
            n_train_bcs: 100,
            n_test_bcs: 100,
            n_interior: 2540,
            n_boundary: 80,
            noise_std: 0.05,
            tail_a: 0.4,
            widths: vec![2, 32, 32, 32, 1],
            epochs: 1000,
            lr: 0.001,
            residual_weight: 1.0,
            risk_tail: 0.2,
            ipc: vec![10, 20, 40, 80],
            budgets: vec![5, 10, 20, 40, 100, 200],
            seeds: 3,
            mutation_scale: 0.1,
            scale_adapt: 1.5,
            outer_eval_bcs: 8,
            init_noise_ipc_max: 10,
            ood_a: vec![0.5, 0.4, 0.3, 0.2],
            ood_ipc: 80,
            ood_budget: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.is_empty() || self.ipc.is_empty() {
            return Err(DistillError::InvalidConfig(
                "pinn.budgets and pinn.ipc must be non-empty".into(),
            ));
        }
        if !(self.risk_tail > 0.0 && self.risk_tail <= 1.0) {
            return Err(DistillError::InvalidConfig(format!(
                "pinn.risk_tail must lie in (0, 1], got {}",
                self.risk_tail
            )));
        }
        if self.seeds == 0 {
            return Err(DistillError::InvalidConfig("pinn.seeds must be >= 1".into()));
        }
        Ok(())
    }

    pub fn train_cfg(&self) -> crate::pinn::PinnTrainConfig {
        crate::pinn::PinnTrainConfig {
            widths: self.widths.clone(),
            epochs: self.epochs,
            lr: self.lr,
            residual_weight: self.residual_weight,
            net_seed: 0,
        }
    }

    /// Full search budget is the largest checkpoint.
    pub fn dfo_cfg(&self) -> crate::dfo::DfoConfig {
        crate::dfo::DfoConfig {
            budget: self.budgets.iter().copied().max().unwrap_or(1),
            mutation_scale: self.mutation_scale,
            scale_adapt: self.scale_adapt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixarConfig {
    pub n_features: usize,
    pub n_components: usize,
    pub n_seqs: usize,
    pub t_len: usize,
    pub ipc: usize,
    pub window: usize,
    pub max_sweeps: usize,
    pub seeds: usize,
}

impl MixarConfig {
    pub fn desk() -> Self {
        MixarConfig {
            n_features: 1,
            n_components: 2,
            n_seqs: 20,
            t_len: 501,
            ipc: 4,
            window: 8,
            max_sweeps: 8,
            seeds: 3,
        }
    }

    pub fn paper() -> Self {
        MixarConfig {
            n_features: 2,
            n_components: 3,
            n_seqs: 50,
            t_len: 401,
            ipc: 8,
            window: 12,
            max_sweeps: 12,
            seeds: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.n_features > 4 {
            return Err(DistillError::InvalidConfig(
                "mixar.n_features must lie in 1..=4".into(),
            ));
        }
        if self.window < 2 {
            return Err(DistillError::InvalidConfig("mixar.window must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinesConfig {
    pub n_train: usize,
    pub n_features: usize,
    pub ipc: usize,
    pub steps: usize,
    pub lr: f64,
    pub seeds: usize,
}

impl BaselinesConfig {
    pub fn desk() -> Self {
        BaselinesConfig {
            n_train: 500,
            n_features: 8,
            ipc: 10,
            steps: 200,
            lr: 0.5,
            seeds: 3,
        }
    }

    pub fn paper() -> Self {
        BaselinesConfig {
            n_train: 2000,
            n_features: 16,
            ipc: 50,
            steps: 500,
            lr: 0.5,
            seeds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub preset: Preset,
    pub root_seed: u64,
    /// Output directory; not part of the serialized manifest so reruns into
    /// different directories stay byte-identical.
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub medical: MedicalConfig,
    pub pinn: PinnConfig,
    pub mixar: MixarConfig,
    pub baselines: BaselinesConfig,
}

impl ExperimentConfig {
    pub fn preset(experiment: Experiment, preset: Preset, root_seed: u64, out_dir: PathBuf) -> Self {
        let (medical, pinn, mixar, baselines) = match preset {
            Preset::Desk => (
                MedicalConfig::desk(),
                PinnConfig::desk(),
                MixarConfig::desk(),
                BaselinesConfig::desk(),
            ),
            Preset::Paper => (
                MedicalConfig::paper(),
                PinnConfig::paper(),
                MixarConfig::paper(),
                BaselinesConfig::paper(),
            ),
        };
        ExperimentConfig {
            experiment,
            preset,
            root_seed,
            out_dir,
            medical,
            pinn,
            mixar,
            baselines,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.medical.validate()?;
        self.pinn.validate()?;
        self.mixar.validate()?;
        Ok(())
    }
}

/// Files produced by a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

/// Deterministic child seeds for distinct component labels; duplicate labels
/// are an error so two components can never share a stream by accident.
pub fn seed_plan(root_seed: u64, labels: &[&str]) -> Result<Vec<(String, u64)>> {
    let mut seen = std::collections::HashSet::new();
    let mut plan = Vec::with_capacity(labels.len());
    for &label in labels {
        if !seen.insert(label) {
            return Err(DistillError::DuplicateLabel(label.to_string()));
        }
        plan.push((label.to_string(), child_seed_str(root_seed, label)));
    }
    Ok(plan)
}

/// Dispatch on the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_manifest(cfg)?;
    let mut out = match cfg.experiment {
        Experiment::Medical => run_medical(cfg)?,
        Experiment::Pinn => run_pinn(cfg)?,
        Experiment::Mixar => run_mixar(cfg)?,
        Experiment::Baselines => run_baselines(cfg)?,
    };
    out.files.push(cfg.out_dir.join("manifest.json"));
    write_log(cfg)?;
    Ok(out)
}

/// The resolved configuration and root seed, next to every result file.
fn write_manifest(cfg: &ExperimentConfig) -> Result<()> {
    let json = serde_json::to_string_pretty(cfg)?;
    std::fs::File::create(cfg.out_dir.join("manifest.json"))?.write_all(json.as_bytes())?;
    Ok(())
}

/// Timestamps live here and only here.
fn write_log(cfg: &ExperimentConfig) -> Result<()> {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let line = format!(
        "finished experiment={:?} preset={:?} root_seed={} unix_time={now}\n",
        cfg.experiment, cfg.preset, cfg.root_seed
    );
    std::fs::File::create(cfg.out_dir.join("run.log"))?.write_all(line.as_bytes())?;
    Ok(())
}

/// Comma-separated CSV with a header row; fields are shortest-roundtrip
/// formatted, so identical values always produce identical bytes.
pub(crate) fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v}")
}
