//! A miniature ablation matrix: every feature variant plus a demo-count
//! sweep, two seeds each, at toy budgets. Writes `matrix.csv` and
//! `ablation_summary.csv` under a temp directory.
//!
//! ```bash
//! cargo run --release --example ablation_small
//! ```

use awet::bench::{ablation_matrix, desk_config};
use awet::envs::TaskKind;

fn main() -> awet::Result<()> {
    let mut base = desk_config(TaskKind::ReachPoint);
    base.out_dir = std::env::temp_dir().join("awet_ablation_small");
    base.n_seeds = 2;
    base.n_demos = 10;
    base.eval_episodes = 30;
    base.awet.hidden_sizes = vec![16, 16];
    base.awet.offline_steps = 300;
    base.awet.online_episodes = 20;
    base.eval_every = 10;

    let outcome = ablation_matrix(&base, &[5, 10])?;
    println!("cells:");
    for cell in &outcome.cells {
        println!(
            "  {:12} demos {:3}: final success {:.2} +- {:.2}",
            cell.config.ablation.name(),
            cell.config.n_demos,
            cell.final_success_mean,
            cell.final_success_std
        );
    }
    println!(
        "{} per-run rows written under {}",
        outcome.rows.len(),
        base.out_dir.display()
    );
    Ok(())
}
