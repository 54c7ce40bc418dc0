//! Seams between the general distillation layer and the case studies.

use distilled::dataset::{dbn_schema, SyntheticDataset};
use distilled::gdbn::{
    corrupt_partitions, dd_loss_eval, random_gdbn, sample_gdbn, MaskedMatrix, MedicalOpts,
};
use distilled::harness::{run, Experiment, ExperimentConfig, Preset};
use distilled::risk::{empirical_risk, InferenceTask, RiskMeasure};
use distilled::zo::ZoConfig;

/// The medical loss wired through the generic inference-task contract must
/// agree with a direct call on a single batch.
struct MedicalTask {
    opts: MedicalOpts,
}

impl InferenceTask for MedicalTask {
    type Batch = MaskedMatrix;

    fn task_id(&self) -> &str {
        "gdbn-test-likelihood"
    }

    fn evaluate(
        &self,
        d_hat: &SyntheticDataset,
        batch: &MaskedMatrix,
        _seed: u64,
    ) -> distilled::error::Result<f64> {
        dd_loss_eval(d_hat, batch, None, &self.opts)
    }
}

#[test]
fn empirical_risk_of_one_batch_matches_direct_loss_eval() {
    let dbn = random_gdbn(5, 2, 0.3, 3).unwrap();
    let d_hat = SyntheticDataset::new(dbn_schema(5, 2), sample_gdbn(&dbn, 40, 5).unwrap()).unwrap();
    let clean = sample_gdbn(&dbn, 90, 7).unwrap();
    let train = corrupt_partitions(&clean, 3, 0.1, 0.1, 9).unwrap();
    let batch = train.partitions[0].rows.clone();

    let task = MedicalTask {
        opts: MedicalOpts::default(),
    };
    let direct = dd_loss_eval(&d_hat, &batch, None, &task.opts).unwrap();
    let via_risk = empirical_risk(
        &task,
        &d_hat,
        std::slice::from_ref(&batch),
        RiskMeasure::Mean,
        11,
    )
    .unwrap();
    assert_eq!(direct, via_risk);
}

#[test]
fn zo_defaults_match_published_constants() {
    let cfg = ZoConfig::default();
    assert_eq!(cfg.m_perturbations, 10);
    assert_eq!(
        distilled::zo::stepsize(cfg.schedule, 0),
        0.1,
        "diminishing rule starts at 0.1"
    );
}

/// The ten-slice scaling variant of the medical study runs end to end at a
/// miniature size and emits the full result schema.
#[test]
fn ten_slice_medical_variant_runs() {
    let out_dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("ten-slice");
    if out_dir.exists() {
        std::fs::remove_dir_all(&out_dir).unwrap();
    }
    let mut cfg = ExperimentConfig::preset(Experiment::Medical, Preset::Desk, 3, out_dir.clone());
    cfg.medical.n_vars = 4;
    cfg.medical.n_slices = 10;
    cfg.medical.n_train = 80;
    cfg.medical.n_test = 50;
    cfg.medical.n_partitions = 2;
    cfg.medical.ipc = vec![10];
    cfg.medical.iterations = vec![3];
    cfg.medical.seeds = 1;
    cfg.medical.subsample_size = 30;
    run(&cfg).unwrap();

    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let mut methods: Vec<&str> = results
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    methods.sort_unstable();
    assert_eq!(methods, vec!["distilled", "full_train", "subset"]);
    for line in results.lines().skip(1) {
        let ll: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(ll.is_finite());
    }
}
