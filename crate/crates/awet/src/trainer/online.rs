//! Online fine-tuning stage: noisy rollouts gated by trajectory similarity,
//! advantage-weighted critic updates mixing agent TD errors with expert
//! Monte-Carlo regression, delayed actor updates over both batches, and
//! polyak target tracking.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::demos::{AgentBuffer, ExpertBuffer, Transition};
use crate::dtw::{FeatureSeq, GateDecision, TerminationMonitor};
use crate::envs::{Env, TaskKind};
use crate::error::{Error, Result};
use crate::nnet::{adam_step, forward, polyak_update, ParameterSet};
use crate::trainer::losses::{actor_batch, check_finite, mse_grads, mse_loss};
use crate::trainer::offline::critic_batch_views;
use crate::trainer::{
    critic_input, evaluate_policy, gaussian, rng_stream, streams, ActorLossTerms, AgentNets,
    AwetConfig, CriticLossTerms, EvalResult, LossReport,
};

/// How the batch-level advantage was computed and what the update used.
#[derive(Debug, Clone, Copy)]
pub struct AdvantageReport {
    pub q_bar_agent: f64,
    pub q_bar_expert: f64,
    /// The ratio as computed; 0.5 with `degenerate` set when the denominator
    /// was exactly zero.
    pub raw: f64,
    /// The weight the critic update used (after the ablation switch, any
    /// override, and clamping into `[0, 1]`).
    pub used: f64,
    pub degenerate: bool,
}

/// Batch-level agent advantage: the ratio of the agent batch's mean
/// min-critic value to the sum of both batches' means. A zero denominator
/// falls back to 0.5. With `batch_argmin_critic` set, the critic with the
/// smaller batch-mean value is used per batch instead of the elementwise min.
pub fn agent_advantage(
    nets: &AgentNets,
    batch_a: &[Transition],
    batch_e: &[Transition],
    config: &AwetConfig,
) -> Result<AdvantageReport> {
    let q_bar_agent = batch_mean_min_q(nets, batch_a, config.batch_argmin_critic)?;
    let q_bar_expert = batch_mean_min_q(nets, batch_e, config.batch_argmin_critic)?;
    let denom = q_bar_agent + q_bar_expert;
    let (raw, degenerate) = if denom == 0.0 {
        (0.5, true)
    } else {
        (q_bar_agent / denom, false)
    };
    if !degenerate && q_bar_agent != 0.0 && q_bar_expert != 0.0 {
        // Same-sign means land strictly inside (0, 1) by construction.
        debug_assert!(
            q_bar_agent.signum() != q_bar_expert.signum() || (0.0 < raw && raw < 1.0),
            "advantage {raw} escaped (0,1) for same-sign means"
        );
    }
    let used = if let Some(v) = config.advantage_override {
        v
    } else if !config.use_advantage_weight {
        0.5
    } else if degenerate {
        0.5
    } else {
        raw.clamp(0.0, 1.0)
    };
    Ok(AdvantageReport {
        q_bar_agent,
        q_bar_expert,
        raw,
        used,
        degenerate,
    })
}

fn batch_mean_min_q(nets: &AgentNets, batch: &[Transition], argmin: bool) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let n = batch.len() as f64;
    if argmin {
        let mut sums = [0.0f64; 2];
        for t in batch {
            let x = critic_input(&t.s, &t.a);
            sums[0] += forward(&nets.critic1.spec, &nets.critic1.params, &x)?[0];
            sums[1] += forward(&nets.critic2.spec, &nets.critic2.params, &x)?[0];
        }
        Ok(sums[0].min(sums[1]) / n)
    } else {
        let mut total = 0.0;
        for t in batch {
            let x = critic_input(&t.s, &t.a);
            let q1 = forward(&nets.critic1.spec, &nets.critic1.params, &x)?[0];
            let q2 = forward(&nets.critic2.spec, &nets.critic2.params, &x)?[0];
            total += q1.min(q2);
        }
        Ok(total / n)
    }
}

/// Bootstrap targets for the agent batch:
/// `y = r + gamma * (1 - d) * min_i Q'_i(s', a'(s'))` with target-policy
/// smoothing noise clipped per dimension, then the action clipped to bounds.
pub(crate) fn td_targets(
    nets: &AgentNets,
    batch: &[Transition],
    config: &AwetConfig,
    half_range: &[f64],
    smooth_rng: &mut ChaCha8Rng,
    reward_scale: f64,
) -> Result<Vec<f64>> {
    let sigma_t = config.effective_sigma_tilde();
    let mut targets = Vec::with_capacity(batch.len());
    for t in batch {
        let mut a_next = forward(&nets.target_actor.spec, &nets.target_actor.params, &t.s_next)?;
        if sigma_t > 0.0 {
            for (ai, hr) in a_next.iter_mut().zip(half_range) {
                let noise = (gaussian(smooth_rng) * sigma_t * hr).clamp(-config.c * hr, config.c * hr);
                *ai = (*ai + noise).clamp(-hr, *hr);
            }
        }
        let x = critic_input(&t.s_next, &a_next);
        let q1 = forward(&nets.target_critic1.spec, &nets.target_critic1.params, &x)?[0];
        let q2 = forward(&nets.target_critic2.spec, &nets.target_critic2.params, &x)?[0];
        let not_done = if t.d { 0.0 } else { 1.0 };
        targets.push(t.r * reward_scale + config.gamma * not_done * q1.min(q2));
    }
    Ok(targets)
}

/// One online update of both critics. Each critic `i` minimizes
/// `a_a * clip(L_BA_i) + (1 - a_a) * L_BE_i`, where `L_BA_i` is the TD loss
/// against the smoothed min-target bootstrap and `L_BE_i` regresses onto the
/// stored Monte-Carlo returns. Loss clipping zeroes the agent-term gradient
/// whenever the raw loss sits at or beyond the clip bound.
#[allow(clippy::too_many_arguments)]
pub fn critic_update_online(
    nets: &mut AgentNets,
    batch_a: &[Transition],
    batch_e: &[Transition],
    a_a: f64,
    config: &AwetConfig,
    half_range: &[f64],
    smooth_rng: &mut ChaCha8Rng,
    reward_scale: f64,
) -> Result<(CriticLossTerms, CriticLossTerms)> {
    debug_assert!((0.0..=1.0).contains(&a_a));
    let targets = td_targets(nets, batch_a, config, half_range, smooth_rng, reward_scale)?;
    let inputs_a: Vec<Vec<f64>> = batch_a.iter().map(|t| critic_input(&t.s, &t.a)).collect();
    let (inputs_e, targets_e) = critic_batch_views(batch_e);

    let mut out = [None, None];
    for (idx, (critic, adam)) in [
        (&mut nets.critic1, &mut nets.adam_critic1),
        (&mut nets.critic2, &mut nets.adam_critic2),
    ]
    .into_iter()
    .enumerate()
    {
        let mut grads = ParameterSet::zeros(&critic.spec);

        let l_ba_raw = mse_loss(critic, &inputs_a, &targets)?;
        let (l_ba_clipped, pass) = if config.use_loss_clip {
            (
                l_ba_raw.clamp(-config.c_clip, config.c_clip),
                l_ba_raw.abs() < config.c_clip,
            )
        } else {
            (l_ba_raw, true)
        };
        if pass && a_a != 0.0 {
            mse_grads(critic, &inputs_a, &targets, a_a, &mut grads)?;
        }

        let expert_weight = 1.0 - a_a;
        let l_be = if expert_weight != 0.0 {
            mse_grads(critic, &inputs_e, &targets_e, expert_weight, &mut grads)?
        } else {
            mse_loss(critic, &inputs_e, &targets_e)?
        };

        let total = a_a * l_ba_clipped + expert_weight * l_be;
        check_finite(total, "online critic", idx)?;
        adam_step(&mut critic.params, &grads, adam)?;
        out[idx] = Some(CriticLossTerms {
            l_ba_raw,
            l_ba_clipped,
            l_be,
            total,
        });
    }
    Ok((out[0].take().unwrap(), out[1].take().unwrap()))
}

/// One online actor update minimizing
/// `-(1 - c_l) * w_e * L_QE + c_l * w_e * L_BC - L_QA`
/// (`w_e` is the expert-term scale, 1 by default), followed by polyak updates
/// of all three targets. Critics are frozen during the update.
pub fn actor_update_online(
    nets: &mut AgentNets,
    batch_a: &[Transition],
    batch_e: &[Transition],
    config: &AwetConfig,
) -> Result<ActorLossTerms> {
    let mut grads = ParameterSet::zeros(&nets.actor.spec);
    let agent_terms = actor_batch(
        &nets.actor,
        &nets.critic1,
        &nets.critic2,
        batch_a,
        -1.0,
        0.0,
        &mut grads,
    )?;
    let w_e = config.actor_expert_weight;
    let expert_terms = actor_batch(
        &nets.actor,
        &nets.critic1,
        &nets.critic2,
        batch_e,
        -(1.0 - config.c_l) * w_e,
        config.c_l * w_e,
        &mut grads,
    )?;
    let total = -(1.0 - config.c_l) * w_e * expert_terms.q_mean + config.c_l * w_e * expert_terms.bc_mean
        - agent_terms.q_mean;
    check_finite(total, "online actor", 0)?;
    adam_step(&mut nets.actor.params, &grads, &mut nets.adam_actor)?;

    polyak_update(&mut nets.target_critic1.params, &nets.critic1.params, config.rho);
    polyak_update(&mut nets.target_critic2.params, &nets.critic2.params, config.rho);
    polyak_update(&mut nets.target_actor.params, &nets.actor.params, config.rho);

    Ok(ActorLossTerms {
        l_qa: agent_terms.q_mean,
        l_qe: expert_terms.q_mean,
        l_bc: expert_terms.bc_mean,
        total,
    })
}

/// One collected rollout: its transitions (empty when discarded), the gate
/// verdict, the undiscounted return over the steps actually taken, and the
/// number of environment steps consumed.
pub(crate) struct EpisodeRollout {
    pub transitions: Vec<Transition>,
    pub gate: GateDecision,
    pub gate_distance: Option<f64>,
    pub return_sum: f64,
    pub steps: usize,
}

/// Rolls one exploration episode. The gate is consulted exactly once, when
/// the step count first reaches the monitor's gate step; a rejected rollout
/// terminates on the spot and its transitions are dropped.
pub(crate) fn collect_episode(
    env: &mut Env,
    nets: &AgentNets,
    config: &AwetConfig,
    monitor: Option<&TerminationMonitor>,
    env_seed: u64,
    explore_rng: &mut ChaCha8Rng,
    reward_scale: f64,
) -> Result<EpisodeRollout> {
    let half_range = env.spec().action_half_range();
    let mut obs = env.reset(env_seed);
    let mut transitions: Vec<Transition> = Vec::with_capacity(env.spec().max_steps);
    let mut return_sum = 0.0;
    let mut gate = GateDecision::Continue;
    let mut gate_distance = None;

    loop {
        let mut action = nets.policy_action(&obs)?;
        for (ai, hr) in action.iter_mut().zip(&half_range) {
            let noise = gaussian(explore_rng) * config.sigma * hr;
            *ai = (*ai + noise).clamp(-hr, *hr);
        }
        let step = env.step(&action)?;
        return_sum += step.reward * reward_scale;
        transitions.push(Transition {
            s: obs,
            a: action,
            r: step.reward * reward_scale,
            s_next: step.next_obs.clone(),
            d: step.done,
            q_mc: None,
        });
        obs = step.next_obs;

        if let Some(m) = monitor {
            if transitions.len() == m.gate_step() {
                let partial = FeatureSeq::new(transitions.iter().map(|t| t.s.clone()).collect())?;
                let outcome = m.gate_rollout(&partial)?;
                gate_distance = Some(outcome.min_distance);
                if outcome.decision == GateDecision::TerminateAndDiscard {
                    gate = GateDecision::TerminateAndDiscard;
                    break;
                }
            }
        }
        if step.done {
            break;
        }
    }

    let steps = transitions.len();
    if gate == GateDecision::TerminateAndDiscard {
        transitions.clear();
        return_sum = 0.0;
    }
    Ok(EpisodeRollout {
        transitions,
        gate,
        gate_distance,
        return_sum,
        steps,
    })
}

/// Evaluation cadence and logging switches for the online stage.
#[derive(Debug, Clone)]
pub struct OnlineOptions {
    /// Evaluate every this many episodes; 0 disables evaluation.
    pub eval_every: usize,
    pub eval_episodes: u32,
    /// Collect one [`LossReport`] per update into the outcome.
    pub log_updates: bool,
    /// Scale applied to every reward seen online (mirrors any normalization
    /// applied to the expert data at load time).
    pub reward_scale: f64,
}

impl Default for OnlineOptions {
    fn default() -> Self {
        Self {
            eval_every: 20,
            eval_episodes: 100,
            log_updates: false,
            reward_scale: 1.0,
        }
    }
}

/// One evaluation point along training.
#[derive(Debug, Clone, Copy)]
pub struct EvalPoint {
    /// Number of online episodes completed when this evaluation ran.
    pub episode: usize,
    pub result: EvalResult,
    /// Running mean of the advantage used across all updates so far.
    pub a_a_mean: f64,
    pub discards_so_far: usize,
}

/// Everything the online stage produced besides the trained networks.
#[derive(Debug, Clone, Default)]
pub struct OnlineOutcome {
    pub episodes_run: usize,
    pub updates_run: usize,
    pub discard_count: usize,
    pub evals: Vec<EvalPoint>,
    /// Per-episode returns for undiscarded episodes (discarded ones record 0
    /// and are excluded from progress statistics).
    pub episode_returns: Vec<f64>,
    pub episode_gates: Vec<GateDecision>,
    /// Minimum corpus DTW distance observed at each episode's gate check
    /// (None when the gate never ran).
    pub episode_gate_distances: Vec<Option<f64>>,
    pub update_log: Vec<LossReport>,
    /// Content digest and size of the agent buffer at stage end, so callers
    /// can audit what training data actually accumulated.
    pub agent_digest: u64,
    pub agent_len: usize,
}

/// Runs the full online fine-tuning stage. Targets are re-synced from the
/// online networks on entry. Per completed episode, one gradient update runs
/// for every environment step the episode consumed (skipped entirely while
/// the agent buffer is empty); the actor updates on every
/// `policy_delay`-th update, together with the polyak target step.
pub fn run_online_stage(
    nets: &mut AgentNets,
    expert: &ExpertBuffer,
    task: TaskKind,
    monitor: Option<&TerminationMonitor>,
    config: &AwetConfig,
    seed: u64,
    options: &OnlineOptions,
) -> Result<OnlineOutcome> {
    config.validate()?;
    expert.require_annotation()?;
    if config.use_early_termination && monitor.is_none() {
        return Err(Error::rejected(
            "early termination enabled but no termination monitor supplied",
        ));
    }
    let monitor = if config.use_early_termination {
        monitor
    } else {
        None
    };

    nets.sync_targets();
    nets.reset_optimizers(config.lr);

    let mut env = Env::new(task);
    let half_range = env.spec().action_half_range();
    let mut agent = AgentBuffer::new(config.agent_capacity);

    let mut explore_rng = rng_stream(seed, streams::EXPLORE);
    let mut smooth_rng = rng_stream(seed, streams::SMOOTH);
    let mut sample_e_rng = rng_stream(seed, streams::SAMPLE_EXPERT);
    let mut sample_a_rng = rng_stream(seed, streams::SAMPLE_AGENT);
    let mut env_rng = rng_stream(seed, streams::ENV);
    let mut eval_rng = rng_stream(seed, streams::EVAL);

    let mut outcome = OnlineOutcome::default();
    let mut a_a_sum = 0.0;
    let mut global_update = 0usize;

    for episode in 0..config.online_episodes {
        let rollout = collect_episode(
            &mut env,
            nets,
            config,
            monitor,
            env_rng.random(),
            &mut explore_rng,
            options.reward_scale,
        )?;
        let discarded = rollout.gate == GateDecision::TerminateAndDiscard;
        if discarded {
            outcome.discard_count += 1;
        } else {
            outcome.episode_returns.push(rollout.return_sum);
        }
        outcome.episode_gates.push(rollout.gate);
        outcome.episode_gate_distances.push(rollout.gate_distance);
        agent.extend(rollout.transitions);

        if !agent.is_empty() {
            for _ in 0..rollout.steps {
                let batch_e = expert.sample_batch(config.batch_e, &mut sample_e_rng)?;
                let batch_a = agent.sample_batch(config.batch_a, &mut sample_a_rng)?;

                let adv = if config.advantage_override.is_some() || !config.use_advantage_weight {
                    let used = config.advantage_override.unwrap_or(0.5);
                    AdvantageReport {
                        q_bar_agent: 0.0,
                        q_bar_expert: 0.0,
                        raw: used,
                        used,
                        degenerate: false,
                    }
                } else {
                    agent_advantage(nets, &batch_a, &batch_e, config)?
                };
                a_a_sum += adv.used;

                let (c1, c2) = critic_update_online(
                    nets,
                    &batch_a,
                    &batch_e,
                    adv.used,
                    config,
                    &half_range,
                    &mut smooth_rng,
                    options.reward_scale,
                )?;
                global_update += 1;
                let actor = if global_update % config.effective_policy_delay() == 0 {
                    Some(actor_update_online(nets, &batch_a, &batch_e, config)?)
                } else {
                    None
                };
                outcome.updates_run += 1;

                if options.log_updates {
                    outcome.update_log.push(LossReport {
                        episode,
                        update: global_update,
                        a_a_raw: adv.raw,
                        a_a: adv.used,
                        critic1: c1,
                        critic2: c2,
                        actor,
                        gate: rollout.gate,
                        episode_return: rollout.return_sum,
                    });
                }
            }
        }

        outcome.episodes_run = episode + 1;
        if options.eval_every > 0 && (episode + 1) % options.eval_every == 0 {
            let result = evaluate_policy(task, nets, options.eval_episodes, &mut eval_rng)?;
            outcome.evals.push(EvalPoint {
                episode: episode + 1,
                result,
                a_a_mean: if outcome.updates_run > 0 {
                    a_a_sum / outcome.updates_run as f64
                } else {
                    0.5
                },
                discards_so_far: outcome.discard_count,
            });
        }
    }

    outcome.agent_digest = agent.digest();
    outcome.agent_len = agent.len();
    Ok(outcome)
}
