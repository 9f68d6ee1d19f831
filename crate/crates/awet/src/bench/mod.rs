//! Experiment harness: seeded multi-run orchestration, metrics and manifest
//! files, ablation matrices, learning-curve aggregation, and the paired
//! signed-rank test.

mod ablation;
mod config_file;
mod curves;
mod metrics;
mod stats;

pub use ablation::{ablation_matrix, c_l_sweep, AblationOutcome, MatrixRow};
pub use config_file::{load_config, parse_config, render_config, save_config};
pub use curves::{aggregate_curves, find_metric_files, write_curves, CurvePoint};
pub use metrics::{
    mean_std, read_metrics, write_metrics, LossLogWriter, MetricsRecord, RunIdentity,
};
pub use stats::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod, WilcoxonResult};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::demos::{
    annotate_mc_returns, generate_demos, validate_reward_signs, ExpertBuffer, Fnv1a, Trajectory,
};
use crate::dtw::TerminationMonitor;
use crate::envs::{EnvSpec, TaskKind};
use crate::error::{Error, Result};
use crate::trainer::{
    evaluate_policy, offline_train_actor, offline_train_critics, rng_stream, run_baseline_stage,
    run_online_stage, streams, AgentNets, AwetConfig, EvalResult, OnlineOptions,
};

/// Which trainer a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Offline pre-training plus online fine-tuning on expert and agent data.
    Awet,
    /// The plain off-policy baseline, from scratch, no demonstrations.
    PureRl,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Awet => "awet",
            Algorithm::PureRl => "pure_rl",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "awet" => Ok(Algorithm::Awet),
            "pure_rl" => Ok(Algorithm::PureRl),
            other => Err(Error::rejected(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// The named feature-ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AblationTag {
    Full,
    NoAa,
    NoEt,
    NoAaNoEt,
    NoClip,
}

impl AblationTag {
    pub const MATRIX: [AblationTag; 5] = [
        AblationTag::Full,
        AblationTag::NoAa,
        AblationTag::NoEt,
        AblationTag::NoAaNoEt,
        AblationTag::NoClip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationTag::Full => "full",
            AblationTag::NoAa => "no_aa",
            AblationTag::NoEt => "no_et",
            AblationTag::NoAaNoEt => "no_aa_no_et",
            AblationTag::NoClip => "no_clip",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(AblationTag::Full),
            "no_aa" => Ok(AblationTag::NoAa),
            "no_et" => Ok(AblationTag::NoEt),
            "no_aa_no_et" => Ok(AblationTag::NoAaNoEt),
            "no_clip" => Ok(AblationTag::NoClip),
            other => Err(Error::rejected(format!("unknown ablation '{other}'"))),
        }
    }

    /// Applies the variant's switches to a config.
    pub fn apply(self, config: &mut AwetConfig) {
        match self {
            AblationTag::Full => {}
            AblationTag::NoAa => config.use_advantage_weight = false,
            AblationTag::NoEt => config.use_early_termination = false,
            AblationTag::NoAaNoEt => {
                config.use_advantage_weight = false;
                config.use_early_termination = false;
            }
            AblationTag::NoClip => config.use_loss_clip = false,
        }
    }
}

/// One experiment: a task, a trainer config, data and seed choices, and the
/// evaluation schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: TaskKind,
    pub awet: AwetConfig,
    pub n_demos: usize,
    pub n_seeds: u32,
    pub eval_every: usize,
    pub eval_episodes: u32,
    pub out_dir: PathBuf,
    pub ablation: AblationTag,
    pub algorithm: Algorithm,
    pub master_seed: u64,
    /// Seed of the shared demonstration dataset (one dataset per experiment,
    /// shared across run seeds).
    pub demo_seed: u64,
    pub log_losses: bool,
    /// Restricts execution to one seed index; manifests use this so a single
    /// run can be reproduced exactly.
    pub only_seed: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::ReachPoint,
            awet: AwetConfig::default(),
            n_demos: 100,
            n_seeds: 10,
            eval_every: 20,
            eval_episodes: 100,
            out_dir: PathBuf::from("runs"),
            ablation: AblationTag::Full,
            algorithm: Algorithm::Awet,
            master_seed: 1,
            demo_seed: 9000,
            log_losses: false,
            only_seed: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_seeds < 1 {
            return Err(Error::rejected("n_seeds must be >= 1"));
        }
        if self.eval_episodes < 1 {
            return Err(Error::rejected("eval_episodes must be >= 1"));
        }
        self.awet.validate()
    }

    /// The effective trainer config with the ablation switches applied.
    pub fn effective_awet(&self) -> AwetConfig {
        let mut c = self.awet.clone();
        self.ablation.apply(&mut c);
        c
    }

    /// Variant directory under the output root.
    pub fn variant_dir(&self) -> PathBuf {
        let label = match self.algorithm {
            Algorithm::Awet => format!("{}_{}", self.algorithm.name(), self.ablation.name()),
            Algorithm::PureRl => self.algorithm.name().to_string(),
        };
        self.out_dir.join(format!(
            "{}_{}_demos{}",
            self.task.name(),
            label,
            self.n_demos
        ))
    }
}

/// Desk-scale experiment preset for a task: small networks and budgets that
/// train in seconds-to-minutes on one CPU core while keeping the paper-scale
/// defaults (`AwetConfig::default`) untouched for anyone with more hardware.
pub fn desk_config(task: TaskKind) -> RunConfig {
    let mut config = RunConfig {
        task,
        ..RunConfig::default()
    };
    match task {
        TaskKind::ReachPoint | TaskKind::Pendulum | TaskKind::Reacher2 => {
            config.awet.hidden_sizes = vec![32, 32];
            config.awet.offline_steps = 3000;
            config.awet.online_episodes = 300;
            config.awet.c_l = 0.9;
            config.awet.lambda2 = 1e-5;
            config.eval_every = 20;
        }
        TaskKind::Pusher2 => {
            // The pusher needs a longer behavioral-cloning fit and benefits
            // from a BC-heavy actor objective at this scale; batch 64 keeps
            // the longer online run affordable on one core.
            config.awet.hidden_sizes = vec![48, 48];
            config.awet.offline_steps = 12000;
            config.awet.online_episodes = 500;
            config.awet.c_l = 0.97;
            config.awet.lambda1 = 1e-3;
            config.awet.lambda2 = 1e-5;
            config.awet.batch_e = 64;
            config.awet.batch_a = 64;
            config.eval_every = 50;
        }
    }
    config
}

/// Independent per-cell seed, derived by hashing the master seed with the
/// variant identity; logged in manifests so stream separation is auditable.
pub fn cell_seed(master: u64, algorithm: Algorithm, tag: AblationTag, n_demos: usize, seed_index: u32) -> u64 {
    let mut h = Fnv1a::new();
    h.write(&master.to_le_bytes());
    h.write(algorithm.name().as_bytes());
    h.write(tag.name().as_bytes());
    h.write(&(n_demos as u64).to_le_bytes());
    h.write(&seed_index.to_le_bytes());
    h.finish()
}

/// Everything one seed produced.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed_index: u32,
    pub cell_seed: u64,
    /// Deterministic evaluation right after the offline stage (the run's
    /// only evaluation when there are no online episodes).
    pub post_offline: EvalResult,
    /// Last online evaluation, when the schedule produced any.
    pub final_eval: Option<EvalResult>,
    /// Best online success count, for threshold-within-budget questions.
    pub best_eval: Option<EvalResult>,
    pub discards: usize,
    pub wall_secs: f64,
    pub records: Vec<MetricsRecord>,
}

impl SeedResult {
    /// Success rate of the final evaluation, falling back to the
    /// post-offline one for offline-only runs.
    pub fn final_success_rate(&self) -> f64 {
        self.final_eval
            .as_ref()
            .unwrap_or(&self.post_offline)
            .success_rate()
    }

    pub fn final_return(&self) -> f64 {
        self.final_eval
            .as_ref()
            .unwrap_or(&self.post_offline)
            .mean_return
    }
}

/// Aggregate over seeds (population std).
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub config: RunConfig,
    pub dataset_digest: u64,
    pub seeds: Vec<SeedResult>,
    pub failed_seeds: Vec<(u32, String)>,
    pub final_success_mean: f64,
    pub final_success_std: f64,
    pub final_return_mean: f64,
    pub final_return_std: f64,
}

/// Builds the experiment's shared demonstration dataset: generate, optionally
/// normalize rewards, annotate. Returns the buffer and the reward scale that
/// the online stage must mirror.
pub fn prepare_demos(config: &RunConfig) -> Result<(ExpertBuffer, f64)> {
    let mut trajs = generate_demos(config.task, config.n_demos, config.demo_seed)?;
    let mut scale = 1.0;
    if config.awet.normalize_rewards {
        let max_abs = trajs
            .iter()
            .flat_map(|t| t.transitions.iter())
            .map(|t| t.r.abs())
            .fold(0.0f64, f64::max);
        if max_abs > 0.0 {
            scale = 1.0 / max_abs;
            for traj in &mut trajs {
                for t in &mut traj.transitions {
                    t.r *= scale;
                }
            }
        }
    }
    annotate_mc_returns(&mut trajs, config.awet.gamma)?;
    let expert = ExpertBuffer::new(trajs);
    validate_reward_signs(&expert, &[])?;
    Ok((expert, scale))
}

/// Loads an experiment dataset from trajectories prepared elsewhere (the CLI
/// demo-gen path). Rewards are used as stored.
pub fn demos_from_trajectories(trajs: Vec<Trajectory>) -> Result<ExpertBuffer> {
    let expert = ExpertBuffer::new(trajs);
    expert.require_annotation()?;
    validate_reward_signs(&expert, &[])?;
    Ok(expert)
}

/// Runs one seed end to end and writes its `metrics.csv`, `manifest.txt`, and
/// optional `losses.txt` under `<variant_dir>/seed_<k>/`.
pub fn run_one_seed(
    config: &RunConfig,
    expert: &ExpertBuffer,
    reward_scale: f64,
    seed_index: u32,
) -> Result<SeedResult> {
    let start = Instant::now();
    let awet = config.effective_awet();
    let seed = cell_seed(
        config.master_seed,
        config.algorithm,
        config.ablation,
        config.n_demos,
        seed_index,
    );

    let seed_dir = config.variant_dir().join(format!("seed_{seed_index}"));
    std::fs::create_dir_all(&seed_dir)?;

    // Manifest first: a config file restricted to this seed.
    let mut manifest = config.clone();
    manifest.only_seed = Some(seed_index);
    let mut manifest_text = render_config(&manifest);
    manifest_text.push_str(&format!(
        "\n# cell_seed = {seed:016x}\n# dataset_digest = {:016x}\n",
        expert.digest()
    ));
    std::fs::write(seed_dir.join("manifest.txt"), manifest_text)?;

    let spec = EnvSpec::new(config.task);
    let mut nets = AgentNets::init(&spec, &awet, &mut rng_stream(seed, streams::INIT))?;

    if config.algorithm == Algorithm::Awet {
        let mut offline_rng = rng_stream(seed, streams::OFFLINE_SAMPLE);
        offline_train_critics(&mut nets, expert, &awet, &mut offline_rng)?;
        offline_train_actor(&mut nets, expert, &awet, &mut offline_rng)?;
    }

    let post_offline = evaluate_policy(
        config.task,
        &nets,
        config.eval_episodes,
        &mut rng_stream(seed, streams::POST_EVAL),
    )?;

    let options = OnlineOptions {
        eval_every: config.eval_every,
        eval_episodes: config.eval_episodes,
        log_updates: config.log_losses,
        reward_scale,
    };
    let outcome = match config.algorithm {
        Algorithm::Awet => {
            let monitor = if awet.use_early_termination {
                Some(TerminationMonitor::new(
                    expert.feature_corpus()?,
                    spec.max_steps,
                    awet.comparison_mode,
                )?)
            } else {
                None
            };
            run_online_stage(
                &mut nets,
                expert,
                config.task,
                monitor.as_ref(),
                &awet,
                seed,
                &options,
            )?
        }
        Algorithm::PureRl => run_baseline_stage(&mut nets, config.task, &awet, seed, &options)?,
    };

    if config.log_losses {
        let mut log = LossLogWriter::create(&seed_dir.join("losses.txt"))?;
        for r in &outcome.update_log {
            log.append(r)?;
        }
        log.finish()?;
    }

    let records: Vec<MetricsRecord> = outcome
        .evals
        .iter()
        .map(|e| MetricsRecord {
            episode: e.episode,
            eval_return_mean: e.result.mean_return,
            successes: e.result.successes,
            eval_episodes: e.result.episodes,
            discards: e.discards_so_far,
            a_a_mean: e.a_a_mean,
        })
        .collect();
    let identity = RunIdentity {
        task: config.task.name().into(),
        variant: config.ablation.name().into(),
        algorithm: config.algorithm.name().into(),
        seed_index,
        cell_seed: seed,
        n_demos: config.n_demos,
        dataset_digest: expert.digest(),
    };
    write_metrics(&seed_dir.join("metrics.csv"), &identity, &records)?;

    let final_eval = outcome.evals.last().map(|e| e.result);
    let best_eval = outcome
        .evals
        .iter()
        .max_by_key(|e| e.result.successes)
        .map(|e| e.result);
    Ok(SeedResult {
        seed_index,
        cell_seed: seed,
        post_offline,
        final_eval,
        best_eval,
        discards: outcome.discard_count,
        wall_secs: start.elapsed().as_secs_f64(),
        records,
    })
}

/// Runs every seed of an experiment (in parallel), writes the per-variant
/// summary, and reports aggregate statistics. A failing seed is recorded in
/// the summary while the other seeds proceed.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let (expert, reward_scale) = prepare_demos(config)?;
    let variant_dir = config.variant_dir();
    std::fs::create_dir_all(&variant_dir)?;

    let seed_indices: Vec<u32> = match config.only_seed {
        Some(k) => vec![k],
        None => (0..config.n_seeds).collect(),
    };

    let results: Vec<(u32, std::result::Result<SeedResult, String>)> = seed_indices
        .par_iter()
        .map(|&k| {
            let r = run_one_seed(config, &expert, reward_scale, k).map_err(|e| e.to_string());
            (k, r)
        })
        .collect();

    let mut seeds = Vec::new();
    let mut failed = Vec::new();
    for (k, r) in results {
        match r {
            Ok(s) => seeds.push(s),
            Err(e) => failed.push((k, e)),
        }
    }
    seeds.sort_by_key(|s| s.seed_index);

    let finals: Vec<f64> = seeds.iter().map(|s| s.final_success_rate()).collect();
    let rets: Vec<f64> = seeds.iter().map(|s| s.final_return()).collect();
    let (fsm, fss) = mean_std(&finals);
    let (frm, frs) = mean_std(&rets);

    let summary = ExperimentSummary {
        config: config.clone(),
        dataset_digest: expert.digest(),
        seeds,
        failed_seeds: failed,
        final_success_mean: fsm,
        final_success_std: fss,
        final_return_mean: frm,
        final_return_std: frs,
    };
    write_summary(&variant_dir.join("summary.txt"), &summary)?;
    Ok(summary)
}

fn write_summary(path: &Path, s: &ExperimentSummary) -> Result<()> {
    use std::fmt::Write as _;
    let mut text = String::new();
    writeln!(text, "# awet-summary v1").unwrap();
    writeln!(
        text,
        "# task={} algorithm={} variant={} n_demos={} n_seeds={} dataset_digest={:016x}",
        s.config.task.name(),
        s.config.algorithm.name(),
        s.config.ablation.name(),
        s.config.n_demos,
        s.config.n_seeds,
        s.dataset_digest
    )
    .unwrap();
    writeln!(
        text,
        "# per-seed columns: seed_index,cell_seed,post_success,final_success,final_return,discards,wall_secs"
    )
    .unwrap();
    for seed in &s.seeds {
        writeln!(
            text,
            "{},{:016x},{:.6},{:.6},{:.6},{},{:.3}",
            seed.seed_index,
            seed.cell_seed,
            seed.post_offline.success_rate(),
            seed.final_success_rate(),
            seed.final_return(),
            seed.discards,
            seed.wall_secs
        )
        .unwrap();
    }
    for (k, e) in &s.failed_seeds {
        writeln!(text, "# seed {k} FAILED: {e}").unwrap();
    }
    writeln!(
        text,
        "# aggregate (mean +- population std over {} seeds)",
        s.seeds.len()
    )
    .unwrap();
    writeln!(
        text,
        "final_success = {:.6} +- {:.6}",
        s.final_success_mean, s.final_success_std
    )
    .unwrap();
    writeln!(
        text,
        "final_return = {:.6} +- {:.6}",
        s.final_return_mean, s.final_return_std
    )
    .unwrap();
    std::fs::write(path, text)?;
    Ok(())
}
