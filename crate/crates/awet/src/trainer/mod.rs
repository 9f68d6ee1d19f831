//! The two-stage trainer: offline pre-training of twin critics and an actor
//! on expert data, then online fine-tuning that mixes agent and expert
//! batches, weights critic losses by a batch-level agent advantage, and can
//! abort rollouts that drift from the expert corpus.

mod baseline;
mod losses;
mod offline;
mod online;

pub use baseline::{baseline_update_once, run_baseline_stage};
pub use offline::{offline_actor_loss, offline_critic_loss, offline_train_actor, offline_train_critics};
pub use online::{
    actor_update_online, agent_advantage, critic_update_online, run_online_stage,
    AdvantageReport, OnlineOptions, OnlineOutcome,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dtw::{ComparisonMode, GateDecision};
use crate::envs::{Env, EnvSpec, TaskKind};
use crate::error::{Error, Result};
use crate::nnet::{AdamState, MlpSpec, Network};

/// Which off-policy backbone the online stage runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseAlg {
    /// Twin critics, min-backup, target policy smoothing, delayed actor.
    Td3,
    /// Smoothing disabled and the actor updated every step; the twin-critic
    /// ensemble and min-backup are kept so the advantage ratio and the
    /// min-critic objectives stay well defined.
    Ddpg,
}

impl BaseAlg {
    pub fn name(self) -> &'static str {
        match self {
            BaseAlg::Td3 => "td3",
            BaseAlg::Ddpg => "ddpg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "td3" => Ok(BaseAlg::Td3),
            "ddpg" => Ok(BaseAlg::Ddpg),
            other => Err(Error::rejected(format!("unknown base algorithm '{other}'"))),
        }
    }
}

/// Every hyperparameter of both stages plus the ablation switches.
///
/// The noise scales `sigma`, `sigma_tilde`, and the smoothing clip `c` are
/// fractions of the per-dimension action half-range, so one setting carries
/// across tasks with different action bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AwetConfig {
    pub gamma: f64,
    pub lr: f64,
    /// Behavioral-cloning mixing weight in the actor objectives, in `[0, 1]`.
    pub c_l: f64,
    /// Symmetric clip bound applied to the agent-batch critic loss.
    pub c_clip: f64,
    /// L2 weight on the critics in the offline stage.
    pub lambda1: f64,
    /// L2 weight on the actor in the offline stage.
    pub lambda2: f64,
    /// Target retention in polyak updates: `target <- rho*target + (1-rho)*online`.
    pub rho: f64,
    /// Exploration noise std, as a fraction of the action half-range.
    pub sigma: f64,
    /// Target policy smoothing std, as a fraction of the action half-range.
    pub sigma_tilde: f64,
    /// Smoothing noise clip, as a fraction of the action half-range.
    pub c: f64,
    /// Actor updates run every `policy_delay`-th critic update.
    pub policy_delay: usize,
    pub offline_steps: usize,
    pub online_episodes: usize,
    pub batch_e: usize,
    pub batch_a: usize,
    pub base_alg: BaseAlg,
    /// Hidden layer widths shared by the actor and both critics.
    pub hidden_sizes: Vec<usize>,
    /// Agent replay ring-buffer capacity.
    pub agent_capacity: usize,
    /// Off: the advantage is pinned at 0.5.
    pub use_advantage_weight: bool,
    /// Off: rollouts are never gated.
    pub use_early_termination: bool,
    /// Off: the agent-batch critic loss is used unclipped.
    pub use_loss_clip: bool,
    /// How half-length rollouts are compared against expert trajectories.
    pub comparison_mode: ComparisonMode,
    /// On: pick one critic per batch by its mean Q instead of taking the
    /// elementwise min across critics.
    pub batch_argmin_critic: bool,
    /// On: rewards are divided by the expert data's max |r| at load time and
    /// the same factor is applied online.
    pub normalize_rewards: bool,
    /// Forces the advantage to a constant; a baseline-reduction hook.
    pub advantage_override: Option<f64>,
    /// Scales every expert-batch term of the online actor objective;
    /// another baseline-reduction hook.
    pub actor_expert_weight: f64,
}

impl Default for AwetConfig {
    fn default() -> Self {
        Self {
            gamma: 0.98,
            lr: 1e-3,
            c_l: 0.5,
            c_clip: 0.5,
            lambda1: 1e-4,
            lambda2: 1e-4,
            rho: 0.995,
            sigma: 0.1,
            sigma_tilde: 0.2,
            c: 0.5,
            policy_delay: 2,
            offline_steps: 1000,
            online_episodes: 2000,
            batch_e: 100,
            batch_a: 100,
            base_alg: BaseAlg::Td3,
            hidden_sizes: vec![400, 300],
            agent_capacity: 100_000,
            use_advantage_weight: true,
            use_early_termination: true,
            use_loss_clip: true,
            comparison_mode: ComparisonMode::PrefixMatch,
            batch_argmin_critic: false,
            normalize_rewards: false,
            advantage_override: None,
            actor_expert_weight: 1.0,
        }
    }
}

impl AwetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::rejected("gamma must be in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.c_l) {
            return Err(Error::rejected("c_l must be in [0, 1]"));
        }
        if self.c_clip <= 0.0 {
            return Err(Error::rejected("c_clip must be > 0"));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::rejected("lambda weights must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.rho) && self.rho != 1.0 {
            return Err(Error::rejected("rho must be in [0, 1]"));
        }
        if self.policy_delay < 1 {
            return Err(Error::rejected("policy_delay must be >= 1"));
        }
        if self.batch_e == 0 || self.batch_a == 0 {
            return Err(Error::rejected("batch sizes must be positive"));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.iter().any(|&h| h == 0) {
            return Err(Error::rejected("hidden sizes must be positive"));
        }
        if self.agent_capacity == 0 {
            return Err(Error::rejected("agent capacity must be positive"));
        }
        if let Some(a) = self.advantage_override {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::rejected("advantage override must be in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Target smoothing std after the base-algorithm adjustment.
    pub fn effective_sigma_tilde(&self) -> f64 {
        match self.base_alg {
            BaseAlg::Td3 => self.sigma_tilde,
            BaseAlg::Ddpg => 0.0,
        }
    }

    /// Policy delay after the base-algorithm adjustment.
    pub fn effective_policy_delay(&self) -> usize {
        match self.base_alg {
            BaseAlg::Td3 => self.policy_delay,
            BaseAlg::Ddpg => 1,
        }
    }
}

/// Named RNG streams, all derived from one run seed. Keeping the streams
/// separate means disabling one feature never shifts the random numbers
/// another consumes.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const EXPLORE: u64 = 2;
    pub const SMOOTH: u64 = 3;
    pub const SAMPLE_EXPERT: u64 = 4;
    pub const SAMPLE_AGENT: u64 = 5;
    pub const ENV: u64 = 6;
    pub const EVAL: u64 = 7;
    pub const OFFLINE_SAMPLE: u64 = 8;
    pub const POST_EVAL: u64 = 9;
}

/// A seeded generator on the given named stream.
pub fn rng_stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Standard normal via Box-Muller; consumes exactly two uniforms per call.
pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Actor, twin critics, their target copies, and one Adam state per online
/// network. Targets start as exact copies.
#[derive(Debug, Clone)]
pub struct AgentNets {
    pub actor: Network,
    pub critic1: Network,
    pub critic2: Network,
    pub target_actor: Network,
    pub target_critic1: Network,
    pub target_critic2: Network,
    pub adam_actor: AdamState,
    pub adam_critic1: AdamState,
    pub adam_critic2: AdamState,
}

impl AgentNets {
    /// Seeded construction for a task: the actor maps observations to
    /// tanh-scaled actions, each critic maps an observation-action pair to a
    /// scalar value.
    pub fn init(env_spec: &EnvSpec, config: &AwetConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut actor_sizes = vec![env_spec.obs_dim];
        actor_sizes.extend_from_slice(&config.hidden_sizes);
        actor_sizes.push(env_spec.act_dim);
        let actor_spec = MlpSpec::tanh_scaled(actor_sizes, env_spec.action_half_range())?;

        let mut critic_sizes = vec![env_spec.obs_dim + env_spec.act_dim];
        critic_sizes.extend_from_slice(&config.hidden_sizes);
        critic_sizes.push(1);
        let critic_spec = MlpSpec::identity_out(critic_sizes)?;

        let actor = Network::init(actor_spec, rng);
        let critic1 = Network::init(critic_spec.clone(), rng);
        let critic2 = Network::init(critic_spec, rng);
        let adam_actor = AdamState::new(actor.params.len(), config.lr);
        let adam_critic1 = AdamState::new(critic1.params.len(), config.lr);
        let adam_critic2 = AdamState::new(critic2.params.len(), config.lr);
        Ok(Self {
            target_actor: actor.clone(),
            target_critic1: critic1.clone(),
            target_critic2: critic2.clone(),
            actor,
            critic1,
            critic2,
            adam_actor,
            adam_critic1,
            adam_critic2,
        })
    }

    /// Re-copies every target from its online network (the online stage does
    /// this once at entry).
    pub fn sync_targets(&mut self) {
        self.target_actor = self.actor.clone();
        self.target_critic1 = self.critic1.clone();
        self.target_critic2 = self.critic2.clone();
    }

    /// Fresh optimizer state for every online network. The online stage calls
    /// this at entry: second moments tuned to the offline gradient scale would
    /// otherwise turn the first (much larger) online gradients into huge
    /// steps and wreck the pre-trained policy.
    pub fn reset_optimizers(&mut self, lr: f64) {
        self.adam_actor = AdamState::new(self.actor.params.len(), lr);
        self.adam_critic1 = AdamState::new(self.critic1.params.len(), lr);
        self.adam_critic2 = AdamState::new(self.critic2.params.len(), lr);
    }

    /// Deterministic policy action for an observation.
    pub fn policy_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(obs)
    }
}

/// Builds the observation-action input a critic consumes.
pub(crate) fn critic_input(s: &[f64], a: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(s.len() + a.len());
    v.extend_from_slice(s);
    v.extend_from_slice(a);
    v
}

/// Per-critic loss terms of one online update.
#[derive(Debug, Clone, Copy)]
pub struct CriticLossTerms {
    /// Agent-batch TD loss before clipping.
    pub l_ba_raw: f64,
    /// Agent-batch TD loss after clipping (equals `l_ba_raw` with the clip off).
    pub l_ba_clipped: f64,
    /// Expert-batch Monte-Carlo regression loss.
    pub l_be: f64,
    /// `a_a * l_ba_clipped + (1 - a_a) * l_be`.
    pub total: f64,
}

/// Actor loss terms of one update (offline or online).
#[derive(Debug, Clone, Copy)]
pub struct ActorLossTerms {
    /// Mean min-critic value of policy actions on the agent batch.
    pub l_qa: f64,
    /// Mean min-critic value of policy actions on the expert batch.
    pub l_qe: f64,
    /// Mean squared distance between policy and expert actions.
    pub l_bc: f64,
    pub total: f64,
}

/// One structured record per online gradient update, for audit and metrics.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub episode: usize,
    pub update: usize,
    /// Advantage ratio as computed (before any clamp or override).
    pub a_a_raw: f64,
    /// Advantage actually used in the critic mix.
    pub a_a: f64,
    pub critic1: CriticLossTerms,
    pub critic2: CriticLossTerms,
    pub actor: Option<ActorLossTerms>,
    /// Gate verdict of the episode these updates follow.
    pub gate: GateDecision,
    /// Undiscounted return of that episode (0.0 when it was discarded).
    pub episode_return: f64,
}

/// Deterministic policy evaluation over fresh episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub episodes: u32,
    pub successes: u32,
    pub mean_return: f64,
}

impl EvalResult {
    /// Exact rational success rate.
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes as f64
    }
}

/// Rolls `episodes` seeded evaluation episodes with the deterministic policy
/// (no exploration noise) and reports successes and mean return.
pub fn evaluate_policy(
    task: TaskKind,
    nets: &AgentNets,
    episodes: u32,
    rng: &mut ChaCha8Rng,
) -> Result<EvalResult> {
    use rand::Rng;
    let mut env = Env::new(task);
    let mut successes = 0u32;
    let mut total_return = 0.0;
    for _ in 0..episodes {
        let mut obs = env.reset(rng.random());
        loop {
            let action = nets.policy_action(&obs)?;
            let step = env.step(&action)?;
            total_return += step.reward;
            obs = step.next_obs;
            if step.done {
                if step.success {
                    successes += 1;
                }
                break;
            }
        }
    }
    Ok(EvalResult {
        episodes,
        successes,
        mean_return: total_return / episodes as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_validate() {
        AwetConfig::default().validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_ranges() {
        let mut c = AwetConfig::default();
        c.gamma = 1.0;
        assert!(c.validate().is_err());
        let mut c = AwetConfig::default();
        c.policy_delay = 0;
        assert!(c.validate().is_err());
        let mut c = AwetConfig::default();
        c.c_l = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn ddpg_variant_adjusts_smoothing_and_delay() {
        let mut c = AwetConfig::default();
        c.base_alg = BaseAlg::Ddpg;
        assert_eq!(c.effective_sigma_tilde(), 0.0);
        assert_eq!(c.effective_policy_delay(), 1);
        c.base_alg = BaseAlg::Td3;
        assert_eq!(c.effective_sigma_tilde(), 0.2);
        assert_eq!(c.effective_policy_delay(), 2);
    }

    #[test]
    fn nets_init_shapes_and_target_copies() {
        let spec = EnvSpec::new(TaskKind::ReachPoint);
        let mut config = AwetConfig::default();
        config.hidden_sizes = vec![16, 8];
        let nets = AgentNets::init(&spec, &config, &mut rng_stream(0, streams::INIT)).unwrap();
        assert_eq!(nets.actor.spec.input_dim(), 5);
        assert_eq!(nets.actor.spec.output_dim(), 2);
        assert_eq!(nets.critic1.spec.input_dim(), 7);
        assert_eq!(nets.critic1.spec.output_dim(), 1);
        assert_eq!(nets.actor.params, nets.target_actor.params);
        assert_eq!(nets.critic1.params, nets.target_critic1.params);
        // The two critics must start different.
        assert_ne!(nets.critic1.params, nets.critic2.params);
    }

    #[test]
    fn rng_streams_are_independent() {
        use rand::Rng;
        let mut a = rng_stream(7, streams::EXPLORE);
        let mut b = rng_stream(7, streams::SMOOTH);
        let xs: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_ne!(xs, ys);
        // Same stream id reproduces.
        let mut a2 = rng_stream(7, streams::EXPLORE);
        let xs2: Vec<u64> = (0..4).map(|_| a2.random()).collect();
        assert_eq!(xs, xs2);
    }

    #[test]
    fn gaussian_moments_are_sane() {
        let mut rng = rng_stream(3, 99);
        let n = 20_000;
        let samples: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
