//! Plain TD3/DDPG trained from scratch, with no demonstrations, advantage
//! weighting, loss clipping, or early termination. Serves as the comparison
//! baseline in the benchmark harness, and as the reference update the
//! feature-disabled trainer must reproduce bit for bit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::demos::{AgentBuffer, Transition};
use crate::envs::{Env, TaskKind};
use crate::error::Result;
use crate::nnet::{adam_step, polyak_update, ParameterSet};
use crate::trainer::losses::{actor_batch, check_finite, mse_grads};
use crate::trainer::online::{collect_episode, td_targets, EvalPoint, OnlineOptions, OnlineOutcome};
use crate::trainer::{
    critic_input, evaluate_policy, rng_stream, streams, AgentNets, AwetConfig,
};

/// One plain update: both critics regress onto the smoothed min-target
/// bootstrap, and on every `policy_delay`-th call the actor ascends the
/// min-critic value of its own actions, followed by polyak target updates.
/// `update_index` is the 1-based global update counter.
pub fn baseline_update_once(
    nets: &mut AgentNets,
    batch_a: &[Transition],
    config: &AwetConfig,
    half_range: &[f64],
    smooth_rng: &mut ChaCha8Rng,
    update_index: usize,
) -> Result<()> {
    let targets = td_targets(nets, batch_a, config, half_range, smooth_rng, 1.0)?;
    let inputs_a: Vec<Vec<f64>> = batch_a.iter().map(|t| critic_input(&t.s, &t.a)).collect();

    for (idx, (critic, adam)) in [
        (&mut nets.critic1, &mut nets.adam_critic1),
        (&mut nets.critic2, &mut nets.adam_critic2),
    ]
    .into_iter()
    .enumerate()
    {
        let mut grads = ParameterSet::zeros(&critic.spec);
        let loss = mse_grads(critic, &inputs_a, &targets, 1.0, &mut grads)?;
        check_finite(loss, "baseline critic", idx)?;
        adam_step(&mut critic.params, &grads, adam)?;
    }

    if update_index % config.effective_policy_delay() == 0 {
        let mut grads = ParameterSet::zeros(&nets.actor.spec);
        let terms = actor_batch(
            &nets.actor,
            &nets.critic1,
            &nets.critic2,
            batch_a,
            -1.0,
            0.0,
            &mut grads,
        )?;
        check_finite(-terms.q_mean, "baseline actor", 0)?;
        adam_step(&mut nets.actor.params, &grads, &mut nets.adam_actor)?;

        polyak_update(&mut nets.target_critic1.params, &nets.critic1.params, config.rho);
        polyak_update(&mut nets.target_critic2.params, &nets.critic2.params, config.rho);
        polyak_update(&mut nets.target_actor.params, &nets.actor.params, config.rho);
    }
    Ok(())
}

/// Trains plain TD3/DDPG from scratch for `config.online_episodes` episodes
/// using the same rollout collection, update cadence, RNG streams, and
/// evaluation schedule as the full trainer.
pub fn run_baseline_stage(
    nets: &mut AgentNets,
    task: TaskKind,
    config: &AwetConfig,
    seed: u64,
    options: &OnlineOptions,
) -> Result<OnlineOutcome> {
    config.validate()?;
    nets.reset_optimizers(config.lr);
    nets.sync_targets();

    let mut env = Env::new(task);
    let half_range = env.spec().action_half_range();
    let mut agent = AgentBuffer::new(config.agent_capacity);

    let mut explore_rng = rng_stream(seed, streams::EXPLORE);
    let mut smooth_rng = rng_stream(seed, streams::SMOOTH);
    let mut sample_a_rng = rng_stream(seed, streams::SAMPLE_AGENT);
    let mut env_rng = rng_stream(seed, streams::ENV);
    let mut eval_rng = rng_stream(seed, streams::EVAL);

    let mut outcome = OnlineOutcome::default();
    let mut global_update = 0usize;

    for episode in 0..config.online_episodes {
        let rollout = collect_episode(
            &mut env,
            nets,
            config,
            None,
            env_rng.random(),
            &mut explore_rng,
            1.0,
        )?;
        outcome.episode_returns.push(rollout.return_sum);
        outcome.episode_gates.push(rollout.gate);
        outcome.episode_gate_distances.push(rollout.gate_distance);
        agent.extend(rollout.transitions);

        if !agent.is_empty() {
            for _ in 0..rollout.steps {
                let batch_a = agent.sample_batch(config.batch_a, &mut sample_a_rng)?;
                global_update += 1;
                baseline_update_once(
                    nets,
                    &batch_a,
                    config,
                    &half_range,
                    &mut smooth_rng,
                    global_update,
                )?;
                outcome.updates_run += 1;
            }
        }

        outcome.episodes_run = episode + 1;
        if options.eval_every > 0 && (episode + 1) % options.eval_every == 0 {
            let result = evaluate_policy(task, nets, options.eval_episodes, &mut eval_rng)?;
            outcome.evals.push(EvalPoint {
                episode: episode + 1,
                result,
                a_a_mean: 0.5,
                discards_so_far: 0,
            });
        }
    }
    outcome.agent_digest = agent.digest();
    outcome.agent_len = agent.len();
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos::{annotate_mc_returns, generate_demos, ExpertBuffer};
    use crate::envs::EnvSpec;
    use crate::trainer::online::{actor_update_online, critic_update_online};

    /// Disabling every feature must reproduce the baseline update bit for
    /// bit: advantage pinned to 1 (so the expert critic term vanishes), clip
    /// off, and all expert actor terms zero-weighted.
    #[test]
    fn feature_disabled_update_equals_baseline() {
        let mut trajs = generate_demos(TaskKind::ReachPoint, 3, 13).unwrap();
        annotate_mc_returns(&mut trajs, 0.98).unwrap();
        let expert = ExpertBuffer::new(trajs);

        let config = AwetConfig {
            hidden_sizes: vec![16, 16],
            batch_e: 8,
            batch_a: 8,
            use_loss_clip: false,
            use_advantage_weight: false,
            use_early_termination: false,
            advantage_override: Some(1.0),
            c_l: 0.0,
            actor_expert_weight: 0.0,
            ..AwetConfig::default()
        };
        let spec = EnvSpec::new(TaskKind::ReachPoint);
        let nets0 = AgentNets::init(&spec, &config, &mut rng_stream(6, streams::INIT)).unwrap();
        let half_range = spec.action_half_range();

        // Same agent batch for both paths; the expert batch only feeds the
        // zero-weighted terms.
        let mut rng = rng_stream(6, streams::SAMPLE_AGENT);
        let batch_a = expert.sample_batch(8, &mut rng).unwrap();
        let batch_e = expert.sample_batch(8, &mut rng).unwrap();

        let mut awet_nets = nets0.clone();
        let mut smooth_a = rng_stream(6, streams::SMOOTH);
        // Two updates so the delayed actor fires once (delay = 2).
        for update in 1..=2 {
            let (_, _) = critic_update_online(
                &mut awet_nets,
                &batch_a,
                &batch_e,
                1.0,
                &config,
                &half_range,
                &mut smooth_a,
                1.0,
            )
            .unwrap();
            if update % config.effective_policy_delay() == 0 {
                actor_update_online(&mut awet_nets, &batch_a, &batch_e, &config).unwrap();
            }
        }

        let mut base_nets = nets0;
        let mut smooth_b = rng_stream(6, streams::SMOOTH);
        for update in 1..=2 {
            baseline_update_once(
                &mut base_nets,
                &batch_a,
                &config,
                &half_range,
                &mut smooth_b,
                update,
            )
            .unwrap();
        }

        assert_eq!(awet_nets.critic1.params, base_nets.critic1.params);
        assert_eq!(awet_nets.critic2.params, base_nets.critic2.params);
        assert_eq!(awet_nets.actor.params, base_nets.actor.params);
        assert_eq!(awet_nets.target_actor.params, base_nets.target_actor.params);
    }
}
