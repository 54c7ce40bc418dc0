//! Config-file overlay: one human-editable text file, `key = value` per
//! line, `[section]` headers per module, `#` comments. Lists are
//! comma-separated; schedules are `constant:4e-5`, `inverse_sqrt:0.1` or
//! `step_decay:0.1,0.5,100`.

use std::path::Path;

use super::ExperimentConfig;
use crate::error::{DistillError, Result};
use crate::zo::StepSchedule;

fn bad(section: &str, key: &str, value: &str) -> DistillError {
    DistillError::InvalidConfig(format!("[{section}] {key} = {value:?} is not valid"))
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(section, key, value))
}

fn parse_list<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| bad(section, key, value)))
        .collect()
}

fn parse_schedule(section: &str, key: &str, value: &str) -> Result<StepSchedule> {
    let (kind, args) = value.split_once(':').ok_or_else(|| bad(section, key, value))?;
    match kind.trim() {
        "constant" => Ok(StepSchedule::Constant {
            s: parse_num(section, key, args)?,
        }),
        "inverse_sqrt" => Ok(StepSchedule::InverseSqrt {
            c: parse_num(section, key, args)?,
        }),
        "step_decay" => {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() != 3 {
                return Err(bad(section, key, value));
            }
            Ok(StepSchedule::StepDecay {
                s: parse_num(section, key, parts[0])?,
                factor: parse_num(section, key, parts[1])?,
                every: parse_num(section, key, parts[2])?,
            })
        }
        _ => Err(bad(section, key, value)),
    }
}

/// Apply `key = value` assignments from `text` over an existing config.
pub fn parse_config_text(cfg: &mut ExperimentConfig, text: &str) -> Result<()> {
    let mut section = String::from("run");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            DistillError::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
        })?;
        apply_key(cfg, &section, key.trim(), value.trim())?;
    }
    Ok(())
}

pub fn apply_config_file(cfg: &mut ExperimentConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    parse_config_text(cfg, &text)
}

fn apply_key(cfg: &mut ExperimentConfig, section: &str, key: &str, value: &str) -> Result<()> {
    match section {
        "run" => match key {
            "root_seed" => cfg.root_seed = parse_num(section, key, value)?,
            _ => return Err(bad(section, key, value)),
        },
        "medical" => {
            let m = &mut cfg.medical;
            match key {
                "n_vars" => m.n_vars = parse_num(section, key, value)?,
                "n_slices" => m.n_slices = parse_num(section, key, value)?,
                "n_train" => m.n_train = parse_num(section, key, value)?,
                "n_test" => m.n_test = parse_num(section, key, value)?,
                "n_partitions" => m.n_partitions = parse_num(section, key, value)?,
                "hide_frac" => m.hide_frac = parse_num(section, key, value)?,
                "noise_std" => m.noise_std = parse_num(section, key, value)?,
                "edge_prob" => m.edge_prob = parse_num(section, key, value)?,
                "max_parents" => m.max_parents = parse_num(section, key, value)?,
                "ipc" => m.ipc = parse_list(section, key, value)?,
                "iterations" => m.iterations = parse_list(section, key, value)?,
                "seeds" => m.seeds = parse_num(section, key, value)?,
                "m_perturbations" => m.m_perturbations = parse_num(section, key, value)?,
                "sigma" => m.sigma = parse_num(section, key, value)?,
                "schedule" => m.schedule = parse_schedule(section, key, value)?,
                "subsample_size" => m.subsample_size = parse_num(section, key, value)?,
                "em_iters" => m.em_iters = parse_num(section, key, value)?,
                "em_tol" => m.em_tol = parse_num(section, key, value)?,
                _ => return Err(bad(section, key, value)),
            }
        }
        "pinn" => {
            let p = &mut cfg.pinn;
            match key {
                "n_train_bcs" => p.n_train_bcs = parse_num(section, key, value)?,
                "n_test_bcs" => p.n_test_bcs = parse_num(section, key, value)?,
                "n_interior" => p.n_interior = parse_num(section, key, value)?,
                "n_boundary" => p.n_boundary = parse_num(section, key, value)?,
                "noise_std" => p.noise_std = parse_num(section, key, value)?,
                "tail_a" => p.tail_a = parse_num(section, key, value)?,
                "widths" => p.widths = parse_list(section, key, value)?,
                "epochs" => p.epochs = parse_num(section, key, value)?,
                "lr" => p.lr = parse_num(section, key, value)?,
                "residual_weight" => p.residual_weight = parse_num(section, key, value)?,
                "risk_tail" => p.risk_tail = parse_num(section, key, value)?,
                "ipc" => p.ipc = parse_list(section, key, value)?,
                "budgets" => p.budgets = parse_list(section, key, value)?,
                "seeds" => p.seeds = parse_num(section, key, value)?,
                "mutation_scale" => p.mutation_scale = parse_num(section, key, value)?,
                "scale_adapt" => p.scale_adapt = parse_num(section, key, value)?,
                "outer_eval_bcs" => p.outer_eval_bcs = parse_num(section, key, value)?,
                "init_noise_ipc_max" => p.init_noise_ipc_max = parse_num(section, key, value)?,
                "ood_a" => p.ood_a = parse_list(section, key, value)?,
                "ood_ipc" => p.ood_ipc = parse_num(section, key, value)?,
                "ood_budget" => p.ood_budget = parse_num(section, key, value)?,
                _ => return Err(bad(section, key, value)),
            }
        }
        "mixar" => {
            let x = &mut cfg.mixar;
            match key {
                "n_features" => x.n_features = parse_num(section, key, value)?,
                "n_components" => x.n_components = parse_num(section, key, value)?,
                "n_seqs" => x.n_seqs = parse_num(section, key, value)?,
                "t_len" => x.t_len = parse_num(section, key, value)?,
                "ipc" => x.ipc = parse_num(section, key, value)?,
                "window" => x.window = parse_num(section, key, value)?,
                "max_sweeps" => x.max_sweeps = parse_num(section, key, value)?,
                "seeds" => x.seeds = parse_num(section, key, value)?,
                _ => return Err(bad(section, key, value)),
            }
        }
        "baselines" => {
            let b = &mut cfg.baselines;
            match key {
                "n_train" => b.n_train = parse_num(section, key, value)?,
                "n_features" => b.n_features = parse_num(section, key, value)?,
                "ipc" => b.ipc = parse_num(section, key, value)?,
                "steps" => b.steps = parse_num(section, key, value)?,
                "lr" => b.lr = parse_num(section, key, value)?,
                "seeds" => b.seeds = parse_num(section, key, value)?,
                _ => return Err(bad(section, key, value)),
            }
        }
        _ => {
            return Err(DistillError::InvalidConfig(format!(
                "unknown config section [{section}]"
            )))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Experiment, Preset};

    fn base() -> ExperimentConfig {
        ExperimentConfig::preset(Experiment::Medical, Preset::Desk, 1, "/tmp/x".into())
    }

    #[test]
    fn parses_sections_lists_and_schedules() {
        let mut cfg = base();
        let text = "
# comment
root_seed = 99
[medical]
n_vars = 6
ipc = 5, 15
iterations = 50,60
schedule = constant:4e-5
[pinn]
widths = 2,8,8,1
ood_a = 0.5, 0.25
";
        parse_config_text(&mut cfg, text).unwrap();
        assert_eq!(cfg.root_seed, 99);
        assert_eq!(cfg.medical.n_vars, 6);
        assert_eq!(cfg.medical.ipc, vec![5, 15]);
        assert_eq!(cfg.medical.schedule, StepSchedule::Constant { s: 4e-5 });
        assert_eq!(cfg.pinn.widths, vec![2, 8, 8, 1]);
        assert_eq!(cfg.pinn.ood_a, vec![0.5, 0.25]);
    }

    #[test]
    fn unknown_keys_name_the_field() {
        let mut cfg = base();
        let err = parse_config_text(&mut cfg, "[medical]\nn_bogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("n_bogus"));
    }

    #[test]
    fn malformed_lines_are_rejected_with_line_number() {
        let mut cfg = base();
        let err = parse_config_text(&mut cfg, "[pinn]\nnot a kv line\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}
