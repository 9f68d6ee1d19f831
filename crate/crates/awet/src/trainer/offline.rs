//! Offline stage: supervised critic regression onto Monte-Carlo expert
//! returns, then actor pre-training against the frozen critics with a
//! behavioral-cloning term. Both phases run sequentially on expert batches
//! only; the environment is never touched.

use rand_chacha::ChaCha8Rng;

use crate::demos::{ExpertBuffer, Transition};
use crate::error::Result;
use crate::nnet::{accumulate_l2_grad, adam_step, l2_penalty, Network, ParameterSet};
use crate::trainer::losses::{actor_batch, check_finite, mse_grads, mse_loss};
use crate::trainer::{critic_input, ActorLossTerms, AgentNets, AwetConfig};

/// Critic regression loss on one batch: mean squared error to the stored
/// Monte-Carlo returns plus the L2 weight penalty. Pure; used by the update
/// step and by tests that pin the loss value against hand computation.
pub fn offline_critic_loss(critic: &Network, batch: &[Transition], lambda1: f64) -> Result<f64> {
    let (inputs, targets) = critic_batch_views(batch);
    Ok(mse_loss(critic, &inputs, &targets)? + lambda1 * l2_penalty(&critic.spec, &critic.params))
}

/// Composite offline actor loss on one batch:
/// `-(1 - c_l) * mean min_i Q_i(s, mu(s)) + c_l * mean |mu(s) - a|^2 + lambda2 * L2`.
pub fn offline_actor_loss(nets: &AgentNets, batch: &[Transition], config: &AwetConfig) -> Result<ActorLossTerms> {
    let mut scratch = ParameterSet::zeros(&nets.actor.spec);
    let terms = actor_batch(
        &nets.actor,
        &nets.critic1,
        &nets.critic2,
        batch,
        0.0,
        0.0,
        &mut scratch,
    )?;
    let l2 = l2_penalty(&nets.actor.spec, &nets.actor.params);
    let total = -(1.0 - config.c_l) * terms.q_mean + config.c_l * terms.bc_mean + config.lambda2 * l2;
    Ok(ActorLossTerms {
        l_qa: 0.0,
        l_qe: terms.q_mean,
        l_bc: terms.bc_mean,
        total,
    })
}

/// Runs `config.offline_steps` critic updates. Each step samples one expert
/// batch and updates both critics independently on it, minimizing the
/// Monte-Carlo regression loss with L2 regularization.
pub fn offline_train_critics(
    nets: &mut AgentNets,
    expert: &ExpertBuffer,
    config: &AwetConfig,
    sample_rng: &mut ChaCha8Rng,
) -> Result<()> {
    expert.require_annotation()?;
    for step in 0..config.offline_steps {
        let batch = expert.sample_batch(config.batch_e, sample_rng)?;
        let (inputs, targets) = critic_batch_views(&batch);
        for (idx, (critic, adam)) in [
            (&mut nets.critic1, &mut nets.adam_critic1),
            (&mut nets.critic2, &mut nets.adam_critic2),
        ]
        .into_iter()
        .enumerate()
        {
            let mut grads = ParameterSet::zeros(&critic.spec);
            let loss = mse_grads(critic, &inputs, &targets, 1.0, &mut grads)?;
            check_finite(loss, "offline critic", idx)?;
            accumulate_l2_grad(&critic.spec, &critic.params, config.lambda1, &mut grads);
            adam_step(&mut critic.params, &grads, adam)?;
        }
        let _ = step;
    }
    Ok(())
}

/// Runs `config.offline_steps` actor updates against the frozen critics,
/// minimizing the composite objective of [`offline_actor_loss`].
pub fn offline_train_actor(
    nets: &mut AgentNets,
    expert: &ExpertBuffer,
    config: &AwetConfig,
    sample_rng: &mut ChaCha8Rng,
) -> Result<()> {
    for _ in 0..config.offline_steps {
        let batch = expert.sample_batch(config.batch_e, sample_rng)?;
        offline_actor_step(nets, &batch, config)?;
    }
    Ok(())
}

fn offline_actor_step(
    nets: &mut AgentNets,
    batch: &[Transition],
    config: &AwetConfig,
) -> Result<ActorLossTerms> {
    let mut grads = ParameterSet::zeros(&nets.actor.spec);
    let terms = actor_batch(
        &nets.actor,
        &nets.critic1,
        &nets.critic2,
        batch,
        -(1.0 - config.c_l),
        config.c_l,
        &mut grads,
    )?;
    accumulate_l2_grad(&nets.actor.spec, &nets.actor.params, config.lambda2, &mut grads);
    let l2 = l2_penalty(&nets.actor.spec, &nets.actor.params);
    let total = -(1.0 - config.c_l) * terms.q_mean + config.c_l * terms.bc_mean + config.lambda2 * l2;
    check_finite(total, "offline actor", 0)?;
    adam_step(&mut nets.actor.params, &grads, &mut nets.adam_actor)?;
    Ok(ActorLossTerms {
        l_qa: 0.0,
        l_qe: terms.q_mean,
        l_bc: terms.bc_mean,
        total,
    })
}

pub(crate) fn critic_batch_views(batch: &[Transition]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let inputs: Vec<Vec<f64>> = batch.iter().map(|t| critic_input(&t.s, &t.a)).collect();
    let targets: Vec<f64> = batch.iter().map(|t| t.q_mc.unwrap_or(f64::NAN)).collect();
    (inputs, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos::{annotate_mc_returns, generate_demos, ExpertBuffer};
    use crate::envs::{EnvSpec, TaskKind};
    use crate::error::Error;
    use crate::trainer::{rng_stream, streams};

    fn small_config() -> AwetConfig {
        AwetConfig {
            hidden_sizes: vec![32, 32],
            offline_steps: 400,
            ..AwetConfig::default()
        }
    }

    fn expert_fixture(n: usize) -> ExpertBuffer {
        let mut trajs = generate_demos(TaskKind::ReachPoint, n, 11).unwrap();
        annotate_mc_returns(&mut trajs, 0.98).unwrap();
        ExpertBuffer::new(trajs)
    }

    #[test]
    fn unannotated_buffer_is_rejected() {
        let trajs = generate_demos(TaskKind::ReachPoint, 2, 0).unwrap();
        let expert = ExpertBuffer::new(trajs);
        let config = small_config();
        let spec = EnvSpec::new(TaskKind::ReachPoint);
        let mut nets = AgentNets::init(&spec, &config, &mut rng_stream(0, streams::INIT)).unwrap();
        let err = offline_train_critics(
            &mut nets,
            &expert,
            &config,
            &mut rng_stream(0, streams::OFFLINE_SAMPLE),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingAnnotation { .. }));
    }

    #[test]
    fn perfect_fit_means_zero_loss_and_gradient() {
        // A 1-parameter critic that already outputs the target exactly.
        use crate::nnet::MlpSpec;
        let spec = MlpSpec::identity_out(vec![2, 1]).unwrap();
        let critic = Network::new(
            spec.clone(),
            crate::nnet::ParameterSet::from_flat(&spec, &[0.0, 0.0, 5.0]).unwrap(),
        );
        let batch = vec![Transition {
            s: vec![1.0],
            a: vec![2.0],
            r: 0.0,
            s_next: vec![0.0],
            d: false,
            q_mc: Some(5.0),
        }];
        assert_eq!(offline_critic_loss(&critic, &batch, 0.0).unwrap(), 0.0);
        let (inputs, targets) = critic_batch_views(&batch);
        let mut grads = ParameterSet::zeros(&critic.spec);
        mse_grads(&critic, &inputs, &targets, 1.0, &mut grads).unwrap();
        assert!(grads.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn constant_target_drives_critic_to_fixed_point() {
        // Every transition identical with q_mc = 5: the regression fixed
        // point is a constant output of 5.
        let t = Transition {
            s: vec![0.3, -0.2, 0.5, 0.1, 0.2],
            a: vec![0.4, -0.4],
            r: -1.0,
            s_next: vec![0.3, -0.2, 0.5, 0.1, 0.22],
            d: false,
            q_mc: Some(5.0),
        };
        let traj = crate::demos::Trajectory {
            transitions: vec![t.clone(); 10],
            seed: 0,
            task: TaskKind::ReachPoint,
            source: crate::demos::Source::Expert,
        };
        let expert = ExpertBuffer::new(vec![traj]);
        let mut config = small_config();
        config.lambda1 = 0.0;
        config.offline_steps = 3000;
        config.batch_e = 16;
        let spec = EnvSpec::new(TaskKind::ReachPoint);
        let mut nets = AgentNets::init(&spec, &config, &mut rng_stream(1, streams::INIT)).unwrap();
        offline_train_critics(
            &mut nets,
            &expert,
            &config,
            &mut rng_stream(1, streams::OFFLINE_SAMPLE),
        )
        .unwrap();
        let x = critic_input(&t.s, &t.a);
        let q1 = nets.critic1.forward(&x).unwrap()[0];
        let q2 = nets.critic2.forward(&x).unwrap()[0];
        assert!((q1 - 5.0).abs() <= 0.01, "critic1 at {q1}");
        assert!((q2 - 5.0).abs() <= 0.01, "critic2 at {q2}");
    }

    #[test]
    fn pure_bc_regresses_onto_expert_actions() {
        // c_l = 1, lambda2 = 0 reduces the actor objective to behavioral
        // cloning; on scripted-expert data the fit should become tight.
        let expert = expert_fixture(5);
        let mut config = small_config();
        config.c_l = 1.0;
        config.lambda2 = 0.0;
        config.offline_steps = 4000;
        let spec = EnvSpec::new(TaskKind::ReachPoint);
        let mut nets = AgentNets::init(&spec, &config, &mut rng_stream(2, streams::INIT)).unwrap();
        offline_train_actor(
            &mut nets,
            &expert,
            &config,
            &mut rng_stream(2, streams::OFFLINE_SAMPLE),
        )
        .unwrap();
        let mut bc = 0.0;
        for t in expert.transitions() {
            let mu = nets.actor.forward(&t.s).unwrap();
            bc += mu
                .iter()
                .zip(&t.a)
                .map(|(m, a)| (m - a) * (m - a))
                .sum::<f64>();
        }
        bc /= expert.len() as f64;
        assert!(bc < 1e-3, "BC error {bc}");
    }

    #[test]
    fn c_l_zero_reduces_to_pure_q_objective() {
        let expert = expert_fixture(2);
        let mut config = small_config();
        config.c_l = 0.0;
        config.lambda2 = 0.0;
        let spec = EnvSpec::new(TaskKind::ReachPoint);
        let nets = AgentNets::init(&spec, &config, &mut rng_stream(3, streams::INIT)).unwrap();
        let batch: Vec<Transition> = expert.transitions()[..8].to_vec();
        let terms = offline_actor_loss(&nets, &batch, &config).unwrap();
        assert_eq!(terms.total, -terms.l_qe);
    }

    #[test]
    fn offline_training_is_deterministic() {
        let expert = expert_fixture(3);
        let mut config = small_config();
        config.offline_steps = 20;
        let spec = EnvSpec::new(TaskKind::ReachPoint);
        let mut a = AgentNets::init(&spec, &config, &mut rng_stream(4, streams::INIT)).unwrap();
        let mut b = AgentNets::init(&spec, &config, &mut rng_stream(4, streams::INIT)).unwrap();
        offline_train_critics(&mut a, &expert, &config, &mut rng_stream(4, 8)).unwrap();
        offline_train_critics(&mut b, &expert, &config, &mut rng_stream(4, 8)).unwrap();
        assert_eq!(a.critic1.params, b.critic1.params);
        assert_eq!(a.critic2.params, b.critic2.params);
    }
}
