//! The full two-stage pipeline on the point-reach task, against a plain TD3
//! baseline trained from scratch under the same interaction budget.
//!
//! ```bash
//! cargo run --release --example online_finetune
//! ```

use awet::demos::{annotate_mc_returns, generate_demos, validate_reward_signs, ExpertBuffer};
use awet::dtw::TerminationMonitor;
use awet::envs::{EnvSpec, TaskKind};
use awet::trainer::{
    evaluate_policy, offline_train_actor, offline_train_critics, rng_stream, run_baseline_stage,
    run_online_stage, streams, AgentNets, AwetConfig, OnlineOptions,
};

fn main() -> awet::Result<()> {
    let task = TaskKind::ReachPoint;
    let seed = 3;
    let config = AwetConfig {
        hidden_sizes: vec![32, 32],
        offline_steps: 2000,
        online_episodes: 100,
        ..AwetConfig::default()
    };
    let options = OnlineOptions {
        eval_every: 20,
        eval_episodes: 100,
        log_updates: false,
        reward_scale: 1.0,
    };

    let mut trajs = generate_demos(task, 100, 17)?;
    annotate_mc_returns(&mut trajs, config.gamma)?;
    let expert = ExpertBuffer::new(trajs);
    validate_reward_signs(&expert, &[])?;

    let spec = EnvSpec::new(task);
    let mut nets = AgentNets::init(&spec, &config, &mut rng_stream(seed, streams::INIT))?;
    let mut sample_rng = rng_stream(seed, streams::OFFLINE_SAMPLE);
    offline_train_critics(&mut nets, &expert, &config, &mut sample_rng)?;
    offline_train_actor(&mut nets, &expert, &config, &mut sample_rng)?;
    let post = evaluate_policy(task, &nets, 100, &mut rng_stream(seed, streams::POST_EVAL))?;
    println!("post-offline: {}/100", post.successes);

    let monitor = TerminationMonitor::new(
        expert.feature_corpus()?,
        spec.max_steps,
        config.comparison_mode,
    )?;
    println!("termination threshold S_th = {:.3}", monitor.threshold());

    let outcome = run_online_stage(&mut nets, &expert, task, Some(&monitor), &config, seed, &options)?;
    println!("fine-tuning curve (evals every {} episodes):", options.eval_every);
    for e in &outcome.evals {
        println!(
            "  episode {:3}: {:3}/100 successes, return {:+.2}, mean advantage {:.3}, discards {}",
            e.episode, e.result.successes, e.result.mean_return, e.a_a_mean, e.discards_so_far
        );
    }

    // Plain TD3 from scratch under the same budget, for contrast.
    let mut baseline = AgentNets::init(&spec, &config, &mut rng_stream(seed, streams::INIT))?;
    let base_out = run_baseline_stage(&mut baseline, task, &config, seed, &options)?;
    let best = base_out.evals.iter().map(|e| e.result.successes).max().unwrap_or(0);
    println!("plain TD3 from scratch, best eval within the same budget: {best}/100");
    Ok(())
}
