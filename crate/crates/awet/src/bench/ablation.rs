//! The ablation matrix: the feature-variant cross product plus the
//! demonstration-count sweep, each cell a full multi-seed experiment.

use std::fmt::Write as _;
use std::path::Path;

use crate::bench::{run_experiment, AblationTag, ExperimentSummary, RunConfig};
use crate::error::Result;

/// One row of the per-run matrix table.
#[derive(Debug, Clone)]
pub struct MatrixRow {
    pub variant: String,
    pub n_demos: usize,
    pub seed_index: u32,
    pub cell_seed: u64,
    pub final_success: f64,
    pub final_return: f64,
    pub discards: usize,
}

/// All cells of one ablation study.
#[derive(Debug)]
pub struct AblationOutcome {
    /// One summary per cell, keyed by `(variant, n_demos)` label order.
    pub cells: Vec<ExperimentSummary>,
    /// One row per (cell, seed).
    pub rows: Vec<MatrixRow>,
}

/// Runs the feature variants `{full, no_aa, no_et, no_aa_no_et, no_clip}` at
/// the base demo count, then the demo sweep over `demo_counts` (the base
/// count reuses the `full` cell). Failed cells are recorded in their
/// summaries; the matrix carries on.
pub fn ablation_matrix(base: &RunConfig, demo_counts: &[usize]) -> Result<AblationOutcome> {
    let mut cells = Vec::new();
    let mut rows = Vec::new();

    let mut run_cell = |config: RunConfig| -> Result<()> {
        let summary = run_experiment(&config)?;
        for seed in &summary.seeds {
            rows.push(MatrixRow {
                variant: config.ablation.name().to_string(),
                n_demos: config.n_demos,
                seed_index: seed.seed_index,
                cell_seed: seed.cell_seed,
                final_success: seed.final_success_rate(),
                final_return: seed.final_return(),
                discards: seed.discards,
            });
        }
        cells.push(summary);
        Ok(())
    };

    for tag in AblationTag::MATRIX {
        let mut config = base.clone();
        config.ablation = tag;
        run_cell(config)?;
    }
    for &n in demo_counts {
        if n == base.n_demos {
            continue; // the full cell already covers the base count
        }
        let mut config = base.clone();
        config.ablation = AblationTag::Full;
        config.n_demos = n;
        run_cell(config)?;
    }

    let outcome = AblationOutcome { cells, rows };
    write_matrix_files(&base.out_dir, &outcome)?;
    Ok(outcome)
}

/// Sweeps the behavioral-cloning mixing weight (the same `c_l` serves the
/// offline and online actor objectives), one experiment per value.
pub fn c_l_sweep(base: &RunConfig, values: &[f64]) -> Result<Vec<ExperimentSummary>> {
    let mut out = Vec::with_capacity(values.len());
    for &c_l in values {
        let mut config = base.clone();
        config.awet.c_l = c_l;
        config.out_dir = base.out_dir.join(format!("c_l_{c_l}"));
        out.push(run_experiment(&config)?);
    }
    Ok(out)
}

fn write_matrix_files(out_dir: &Path, outcome: &AblationOutcome) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;

    let mut per_run = String::new();
    writeln!(per_run, "# awet-matrix v1").unwrap();
    writeln!(
        per_run,
        "# columns: variant,n_demos,seed_index,cell_seed,final_success,final_return,discards"
    )
    .unwrap();
    for r in &outcome.rows {
        writeln!(
            per_run,
            "{},{},{},{:016x},{:.6},{:.6},{}",
            r.variant, r.n_demos, r.seed_index, r.cell_seed, r.final_success, r.final_return, r.discards
        )
        .unwrap();
    }
    std::fs::write(out_dir.join("matrix.csv"), per_run)?;

    let mut table = String::new();
    writeln!(table, "# awet-ablation-summary v1 (mean +- population std)").unwrap();
    writeln!(
        table,
        "# columns: variant,n_demos,n_seeds,final_success_mean,final_success_std,final_return_mean,final_return_std"
    )
    .unwrap();
    for cell in &outcome.cells {
        writeln!(
            table,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            cell.config.ablation.name(),
            cell.config.n_demos,
            cell.seeds.len(),
            cell.final_success_mean,
            cell.final_success_std,
            cell.final_return_mean,
            cell.final_return_std
        )
        .unwrap();
    }
    std::fs::write(out_dir.join("ablation_summary.csv"), table)?;
    Ok(())
}
