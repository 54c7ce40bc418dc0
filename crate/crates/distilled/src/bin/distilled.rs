//! Experiment harness CLI.
//!
//! ```text
//! distilled <medical|pinn|mixar|baselines> [--config PATH] [--seed N]
//!           [--preset desk|paper] [--out DIR]
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use distilled::error::DistillError;
use distilled::harness::{apply_config_file, run, Experiment, ExperimentConfig, Preset};

fn usage() -> &'static str {
    "usage: distilled <medical|pinn|mixar|baselines> [--config PATH] [--seed N] \
     [--preset desk|paper] [--out DIR]"
}

fn parse_args(args: &[String]) -> Result<ExperimentConfig, DistillError> {
    let experiment: Experiment = args
        .first()
        .ok_or_else(|| DistillError::InvalidConfig(usage().into()))?
        .parse()?;
    let mut preset = Preset::Desk;
    let mut seed: Option<u64> = None;
    let mut out: Option<PathBuf> = None;
    let mut config_path: Option<PathBuf> = None;
    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .ok_or_else(|| DistillError::InvalidConfig(format!("{flag} needs a value")))
        };
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(value()?)),
            "--seed" => {
                seed = Some(value()?.parse().map_err(|_| {
                    DistillError::InvalidConfig("--seed expects an unsigned integer".into())
                })?)
            }
            "--preset" => preset = value()?.parse()?,
            "--out" => out = Some(PathBuf::from(value()?)),
            other => {
                return Err(DistillError::InvalidConfig(format!(
                    "unknown flag {other:?}\n{}",
                    usage()
                )))
            }
        }
    }
    let out_dir = out.unwrap_or_else(|| {
        PathBuf::from("runs").join(format!(
            "{}-{}",
            args[0],
            match preset {
                Preset::Desk => "desk",
                Preset::Paper => "paper",
            }
        ))
    });
    let mut cfg = ExperimentConfig::preset(experiment, preset, 42, out_dir);
    if let Some(path) = config_path {
        apply_config_file(&mut cfg, &path)?;
    }
    if let Some(s) = seed {
        cfg.root_seed = s;
    }
    Ok(cfg)
}

/// Walk wrapped batch errors to classify the root cause.
fn is_divergence(err: &DistillError) -> bool {
    match err {
        DistillError::Divergence { .. }
        | DistillError::TrainingDiverged { .. }
        | DistillError::NonFinite { .. } => true,
        DistillError::Batch { source, .. } => is_divergence(source),
        _ => false,
    }
}

fn is_config_error(err: &DistillError) -> bool {
    matches!(
        err,
        DistillError::InvalidConfig(_) | DistillError::DuplicateLabel(_)
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = match parse_args(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(output) => {
            for f in output.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else if is_divergence(&e) {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
