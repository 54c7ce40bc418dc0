//! PINN study: budget × ipc sweep of the derivative-free distiller against
//! the clean-subset baseline, plus the tail-separation stability sweep.

use serde::Serialize;
use std::io::Write;

use super::{fmt, write_csv, ExperimentConfig, RunOutput};
use crate::error::Result;
use crate::pinn::{
    boundary_row_count, distill_pinn, generate_pinn_data, ood_test_error, pinn_to_synthetic,
    subset_baseline_points, BoundaryPrior, PinnInit, TailSide,
};
use crate::risk::RiskMeasure;
use crate::rng::{child_seed, child_seed_str};

/// Table-1-shaped summary: budgets × ipc medians plus the subset row.
#[derive(Debug, Serialize)]
struct PivotTable {
    ipc: Vec<usize>,
    budgets: Vec<usize>,
    /// distilled[b][i] = median over seeds of test L2 at (budgets[b], ipc[i]).
    distilled: Vec<Vec<f64>>,
    /// subset[i] = median over seeds of the baseline test L2 at ipc[i].
    subset: Vec<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn run_pinn(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let p = &cfg.pinn;
    let risk = if p.risk_tail >= 1.0 {
        RiskMeasure::Mean
    } else {
        RiskMeasure::cvar(p.risk_tail)?
    };
    let train_cfg = p.train_cfg();
    let dfo_cfg = p.dfo_cfg();

    let mut long_rows: Vec<Vec<String>> = Vec::new();
    // test_l2[(budget_idx, ipc_idx)] per seed, and subset per ipc per seed.
    let mut cell: std::collections::BTreeMap<(usize, usize), Vec<f64>> = Default::default();
    let mut subset_cell: Vec<Vec<f64>> = vec![Vec::new(); p.ipc.len()];

    for seed_idx in 0..p.seeds {
        let label = |what: &str| format!("pinn/{what}/seed{seed_idx}");
        let seed_of = |what: &str| child_seed_str(cfg.root_seed, &label(what));
        let train_bcs = generate_pinn_data(
            BoundaryPrior::new(p.tail_a, TailSide::TrainLower)?,
            p.n_train_bcs,
            p.n_interior,
            p.n_boundary,
            p.noise_std,
            seed_of("train-bcs"),
        )?;
        let test_bcs = generate_pinn_data(
            BoundaryPrior::new(p.tail_a, TailSide::TestUpper)?,
            p.n_test_bcs,
            p.n_interior,
            p.n_boundary,
            0.0,
            seed_of("test-bcs"),
        )?;

        for (ipc_idx, &ipc) in p.ipc.iter().enumerate() {
            let init = if ipc <= p.init_noise_ipc_max {
                PinnInit::GaussianNoise
            } else {
                PinnInit::SubsampleTrain
            };
            let out = distill_pinn(
                &train_bcs,
                &test_bcs,
                ipc,
                &dfo_cfg,
                init,
                risk,
                &train_cfg,
                p.outer_eval_bcs,
                &p.budgets,
                seed_of(&format!("distill/ipc{ipc}")),
            )?;
            for (budget_idx, point) in out.report.checkpoints.iter().enumerate() {
                long_rows.push(vec![
                    point.budget.to_string(),
                    ipc.to_string(),
                    seed_idx.to_string(),
                    "distilled".to_string(),
                    fmt(point.test_l2),
                    fmt(point.best_outer_loss),
                ]);
                cell.entry((budget_idx, ipc_idx)).or_default().push(point.test_l2);
            }

            // Paired baseline: the same draw that initialized the distiller,
            // so the comparison isolates what the search added.
            let b_rows = boundary_row_count(ipc);
            let subset = subset_baseline_points(
                &train_bcs,
                b_rows,
                ipc - b_rows,
                child_seed(seed_of(&format!("distill/ipc{ipc}")), 0),
            )?;
            let subset_l2 = ood_test_error(
                &pinn_to_synthetic(&subset)?,
                b_rows,
                &test_bcs,
                &train_cfg,
            )?;
            long_rows.push(vec![
                "subset".to_string(),
                ipc.to_string(),
                seed_idx.to_string(),
                "subset".to_string(),
                fmt(subset_l2.value),
                String::new(),
            ]);
            subset_cell[ipc_idx].push(subset_l2.value);
        }
    }

    let table_path = cfg.out_dir.join("table.csv");
    write_csv(
        &table_path,
        "budget,ipc,seed,method,test_l2,outer_loss",
        &long_rows,
    )?;

    let pivot = PivotTable {
        ipc: p.ipc.clone(),
        budgets: p.budgets.clone(),
        distilled: (0..p.budgets.len())
            .map(|b| {
                (0..p.ipc.len())
                    .map(|i| median(cell.get_mut(&(b, i)).map(Vec::as_mut_slice).unwrap_or(&mut [])))
                    .collect()
            })
            .collect(),
        subset: subset_cell.iter_mut().map(|v| median(v)).collect(),
    };
    let pivot_path = cfg.out_dir.join("table.json");
    std::fs::File::create(&pivot_path)?
        .write_all(serde_json::to_string_pretty(&pivot)?.as_bytes())?;

    // Tail-separation stability sweep, one distillation per a, reported at
    // budget checkpoints (the stability claim concerns the best budget, as
    // in the main table).
    let ood_checkpoints = [
        p.ood_budget.div_ceil(6),
        p.ood_budget.div_ceil(2),
        p.ood_budget,
    ];
    let mut ood_rows: Vec<Vec<String>> = Vec::new();
    for (ai, &a) in p.ood_a.iter().enumerate() {
        let seed_of = |what: &str| child_seed_str(cfg.root_seed, &format!("pinn/ood{ai}/{what}"));
        let train_bcs = generate_pinn_data(
            BoundaryPrior::new(a, TailSide::TrainLower)?,
            p.n_train_bcs,
            p.n_interior,
            p.n_boundary,
            p.noise_std,
            seed_of("train-bcs"),
        )?;
        let test_bcs = generate_pinn_data(
            BoundaryPrior::new(a, TailSide::TestUpper)?,
            p.n_test_bcs,
            p.n_interior,
            p.n_boundary,
            0.0,
            seed_of("test-bcs"),
        )?;
        let out = distill_pinn(
            &train_bcs,
            &test_bcs,
            p.ood_ipc,
            &crate::dfo::DfoConfig {
                budget: p.ood_budget,
                mutation_scale: p.mutation_scale,
                scale_adapt: p.scale_adapt,
            },
            PinnInit::SubsampleTrain,
            risk,
            &train_cfg,
            p.outer_eval_bcs,
            &ood_checkpoints,
            seed_of("distill"),
        )?;
        for point in &out.report.checkpoints {
            ood_rows.push(vec![
                fmt(a),
                point.budget.to_string(),
                fmt(point.test_l2),
            ]);
        }
    }
    let ood_path = cfg.out_dir.join("ood.csv");
    write_csv(&ood_path, "a,budget,test_l2", &ood_rows)?;

    Ok(RunOutput {
        files: vec![table_path, pivot_path, ood_path],
    })
}
