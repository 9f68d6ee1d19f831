//! Command-line front end: demonstration generation, training runs, ablation
//! matrices, the paired signed-rank test, and curve aggregation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use awet::bench::{
    ablation_matrix, aggregate_curves, c_l_sweep, desk_config, find_metric_files, load_config,
    run_experiment, wilcoxon_signed_rank, write_curves, AblationTag,
};
use awet::demos::{annotate_mc_returns, generate_demos, save_demos};
use awet::envs::TaskKind;
use awet::error::{Error, Result};

#[derive(Parser)]
#[command(name = "awet", about = "Actor-critic learning from demonstrations", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate successful expert demonstrations and save them to a file.
    DemoGen {
        #[arg(long)]
        task: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Discount used for the Monte-Carlo annotation.
        #[arg(long, default_value_t = 0.98)]
        gamma: f64,
    },
    /// Run a multi-seed experiment from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Feature ablation to apply on top of the config.
        #[arg(long)]
        ablate: Option<String>,
        /// Override the config's seed count.
        #[arg(long)]
        seeds: Option<u32>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full ablation matrix plus demo sweep at desk scale.
    Ablate {
        #[arg(long)]
        task: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seeds: Option<u32>,
        /// Demo counts for the sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![20, 40, 60, 80, 100])]
        demos: Vec<usize>,
        /// Also sweep the BC mixing weight over these values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        cl_sweep: Vec<f64>,
    },
    /// Paired Wilcoxon signed-rank test between two sample files
    /// (one number per line, '#' comments ignored).
    Stats {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Aggregate per-seed metrics files into a mean +- std curve file.
    Curves {
        /// Variant directory containing seed_*/metrics.csv.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DemoGen {
            task,
            n,
            seed,
            out,
            gamma,
        } => {
            let task = TaskKind::parse(&task)?;
            let mut trajs = generate_demos(task, n, seed)?;
            annotate_mc_returns(&mut trajs, gamma)?;
            save_demos(&trajs, gamma, &out)?;
            println!(
                "wrote {} episodes x {} steps to {}",
                trajs.len(),
                trajs.first().map(|t| t.transitions.len()).unwrap_or(0),
                out.display()
            );
            Ok(())
        }
        Command::Train {
            config,
            ablate,
            seeds,
            out,
        } => {
            let mut run_config = load_config(&config)?;
            if let Some(tag) = ablate {
                run_config.ablation = AblationTag::parse(&tag)?;
            }
            if let Some(k) = seeds {
                run_config.n_seeds = k;
                run_config.only_seed = None;
            }
            if let Some(dir) = out {
                run_config.out_dir = dir;
            }
            let summary = run_experiment(&run_config)?;
            println!(
                "{} [{}] final success {:.3} +- {:.3}, return {:.3} +- {:.3} over {} seeds",
                run_config.task.name(),
                run_config.ablation.name(),
                summary.final_success_mean,
                summary.final_success_std,
                summary.final_return_mean,
                summary.final_return_std,
                summary.seeds.len()
            );
            for (k, e) in &summary.failed_seeds {
                eprintln!("seed {k} failed: {e}");
            }
            if summary.seeds.is_empty() {
                return Err(Error::RejectedInput("every seed failed".into()));
            }
            println!("outputs in {}", run_config.variant_dir().display());
            Ok(())
        }
        Command::Ablate {
            task,
            out,
            seeds,
            demos,
            cl_sweep,
        } => {
            let task = TaskKind::parse(&task)?;
            let mut base = desk_config(task);
            base.out_dir = out.clone();
            if let Some(k) = seeds {
                base.n_seeds = k;
            }
            let outcome = ablation_matrix(&base, &demos)?;
            println!("variant,n_demos,final_success_mean,final_success_std");
            for cell in &outcome.cells {
                println!(
                    "{},{},{:.3},{:.3}",
                    cell.config.ablation.name(),
                    cell.config.n_demos,
                    cell.final_success_mean,
                    cell.final_success_std
                );
            }
            if !cl_sweep.is_empty() {
                println!("c_l sweep:");
                for summary in c_l_sweep(&base, &cl_sweep)? {
                    println!(
                        "  c_l = {}: final success {:.3} +- {:.3}",
                        summary.config.awet.c_l,
                        summary.final_success_mean,
                        summary.final_success_std
                    );
                }
            }
            println!("matrix written to {}", out.display());
            Ok(())
        }
        Command::Stats { a, b } => {
            let xs = read_samples(&a)?;
            let ys = read_samples(&b)?;
            let r = wilcoxon_signed_rank(&xs, &ys)?;
            println!("n_effective = {}", r.n_effective);
            println!("w_plus = {}", r.w_plus);
            println!("w_minus = {}", r.w_minus);
            println!("method = {:?}", r.method);
            println!("p_one_sided (a > b) = {:.6}", r.p_one_sided);
            println!("p_two_sided = {:.6}", r.p_two_sided);
            Ok(())
        }
        Command::Curves { input, out } => {
            let files = find_metric_files(&input)?;
            if files.is_empty() {
                return Err(Error::RejectedInput(format!(
                    "no seed_*/metrics.csv under {}",
                    input.display()
                )));
            }
            let points = aggregate_curves(&files)?;
            write_curves(&out, &points)?;
            println!("wrote {} curve rows to {}", points.len(), out.display());
            Ok(())
        }
    }
}

fn read_samples(path: &PathBuf) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse::<f64>().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: no + 1,
            detail: format!("bad number '{line}'"),
        })?);
    }
    Ok(out)
}
