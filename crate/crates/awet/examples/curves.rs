//! Run a small two-seed experiment, then aggregate its per-seed metrics into
//! a mean +- std learning-curve file.
//!
//! ```bash
//! cargo run --release --example curves
//! ```

use awet::bench::{
    aggregate_curves, desk_config, find_metric_files, run_experiment, write_curves,
};
use awet::envs::TaskKind;

fn main() -> awet::Result<()> {
    let mut config = desk_config(TaskKind::ReachPoint);
    config.out_dir = std::env::temp_dir().join("awet_curves_example");
    config.n_seeds = 2;
    config.n_demos = 20;
    config.eval_episodes = 50;
    config.awet.hidden_sizes = vec![16, 16];
    config.awet.offline_steps = 500;
    config.awet.online_episodes = 40;
    config.eval_every = 10;

    let summary = run_experiment(&config)?;
    println!(
        "experiment done: final success {:.2} +- {:.2}",
        summary.final_success_mean, summary.final_success_std
    );

    let files = find_metric_files(&config.variant_dir())?;
    let points = aggregate_curves(&files)?;
    let out = config.out_dir.join("curves.csv");
    write_curves(&out, &points)?;

    println!("curve ({} rows, {} seeds each):", points.len(), points[0].n_seeds);
    for p in &points {
        println!(
            "  episode {:3}: success {:.2} +- {:.2}, return {:+.2} +- {:.2}",
            p.episode, p.success_mean, p.success_std, p.return_mean, p.return_std
        );
    }
    println!("written to {}", out.display());
    Ok(())
}
