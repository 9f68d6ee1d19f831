//! Deterministic, analytically-defined continuous-control tasks with dense
//! non-positive rewards, fixed-horizon episodes, success predicates, and
//! scripted expert controllers.
//!
//! Every task exposes its physical constants as documented `pub const` items
//! so tests and tooling can reference the exact dynamics. Episodes run for
//! exactly `max_steps` steps (`done` fires only on the last step); rewards
//! are `<= 0` for every reachable state-action pair, which the online
//! advantage weighting relies on.

pub mod pendulum;
pub mod pusher;
pub mod reach_point;
pub mod reacher;

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The available tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    /// 1-DoF pendulum swing-up to upright.
    Pendulum,
    /// 2-link planar reacher; drive the fingertip onto a goal point.
    Reacher2,
    /// Point-mass pusher; shove an object onto a goal point.
    Pusher2,
    /// 2-D point mass; drive the effector onto a goal point.
    ReachPoint,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Pendulum,
        TaskKind::Reacher2,
        TaskKind::Pusher2,
        TaskKind::ReachPoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Pendulum => "pendulum",
            TaskKind::Reacher2 => "reacher2",
            TaskKind::Pusher2 => "pusher2",
            TaskKind::ReachPoint => "reach_point",
        }
    }

    pub fn parse(name: &str) -> Result<TaskKind> {
        match name {
            "pendulum" => Ok(TaskKind::Pendulum),
            "reacher2" => Ok(TaskKind::Reacher2),
            "pusher2" => Ok(TaskKind::Pusher2),
            "reach_point" => Ok(TaskKind::ReachPoint),
            other => Err(Error::rejected(format!(
                "unknown task '{other}' (expected pendulum, reacher2, pusher2, reach_point)"
            ))),
        }
    }
}

/// Static description of a task: dimensions, action bounds, horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub task: TaskKind,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_steps: usize,
}

impl EnvSpec {
    /// Spec for `task` with the default 50-step horizon.
    pub fn new(task: TaskKind) -> Self {
        Self::with_max_steps(task, DEFAULT_MAX_STEPS).unwrap()
    }

    pub fn with_max_steps(task: TaskKind, max_steps: usize) -> Result<Self> {
        if max_steps < 2 {
            return Err(Error::rejected("max_steps must be >= 2"));
        }
        // One extra observation slot carries the normalized episode time;
        // with a fixed horizon, values-to-go depend on the remaining steps,
        // so value targets are only well-posed when the policy and critics
        // can see the clock.
        let (obs_dim, act_dim, bound) = match task {
            TaskKind::Pendulum => (3 + 1, 1, pendulum::MAX_TORQUE),
            TaskKind::Reacher2 => (8 + 1, 2, reacher::MAX_TORQUE),
            TaskKind::Pusher2 => (10 + 1, 2, pusher::MAX_SPEED),
            TaskKind::ReachPoint => (4 + 1, 2, reach_point::MAX_SPEED),
        };
        Ok(Self {
            task,
            obs_dim,
            act_dim,
            action_low: vec![-bound; act_dim],
            action_high: vec![bound; act_dim],
            max_steps,
        })
    }

    /// Per-dimension action half-ranges, `(high - low) / 2`.
    pub fn action_half_range(&self) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(lo, hi)| (hi - lo) / 2.0)
            .collect()
    }

    pub fn clip_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(a, (lo, hi))| a.clamp(*lo, *hi))
            .collect()
    }
}

/// Default episode length.
pub const DEFAULT_MAX_STEPS: usize = 50;

/// Task-specific physical state.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskState {
    Pendulum(pendulum::State),
    Reacher2(reacher::State),
    Pusher2(pusher::State),
    ReachPoint(reach_point::State),
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_obs: Vec<f64>,
    pub reward: f64,
    /// True exactly when the step counter reaches `max_steps`.
    pub done: bool,
    /// True when the task's distance predicate holds at this step.
    pub success: bool,
}

/// A live environment instance: spec, current task state, step counter.
/// `reset` and `step` are deterministic functions of `(seed, state, action)`;
/// instances share nothing and can be moved between threads.
#[derive(Debug, Clone)]
pub struct Env {
    spec: EnvSpec,
    state: TaskState,
    steps: usize,
}

impl Env {
    pub fn new(task: TaskKind) -> Self {
        Self::with_spec(EnvSpec::new(task))
    }

    pub fn with_spec(spec: EnvSpec) -> Self {
        // Placeholder state until the first reset.
        let state = initial_state(spec.task, &mut ChaCha8Rng::seed_from_u64(0));
        Self {
            spec,
            state,
            steps: 0,
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn state(&self) -> &TaskState {
        &self.state
    }

    /// Overwrites the physical state and rewinds the step counter.
    /// Intended for diagnostics and tests.
    pub fn set_state(&mut self, state: TaskState) {
        self.state = state;
        self.steps = 0;
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Seeded reset; returns the initial observation.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = initial_state(self.spec.task, &mut rng);
        self.steps = 0;
        self.observe()
    }

    /// Task observation plus the normalized episode time `steps / max_steps`
    /// as the final element.
    pub fn observe(&self) -> Vec<f64> {
        let mut obs = match &self.state {
            TaskState::Pendulum(s) => pendulum::observe(s),
            TaskState::Reacher2(s) => reacher::observe(s),
            TaskState::Pusher2(s) => pusher::observe(s),
            TaskState::ReachPoint(s) => reach_point::observe(s),
        };
        obs.push(self.steps as f64 / self.spec.max_steps as f64);
        obs
    }

    /// Clips the action to the spec bounds, advances the dynamics one step,
    /// and reports reward, done, and the success predicate.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if action.len() != self.spec.act_dim {
            return Err(Error::rejected(format!(
                "action length {} != act_dim {}",
                action.len(),
                self.spec.act_dim
            )));
        }
        if self.steps >= self.spec.max_steps {
            return Err(Error::rejected("episode is already done"));
        }
        let u = self.spec.clip_action(action);
        let (next, reward) = match &self.state {
            TaskState::Pendulum(s) => {
                let (s2, r) = pendulum::step(s, u[0]);
                (TaskState::Pendulum(s2), r)
            }
            TaskState::Reacher2(s) => {
                let (s2, r) = reacher::step(s, &u);
                (TaskState::Reacher2(s2), r)
            }
            TaskState::Pusher2(s) => {
                let (s2, r) = pusher::step(s, &u);
                (TaskState::Pusher2(s2), r)
            }
            TaskState::ReachPoint(s) => {
                let (s2, r) = reach_point::step(s, &u);
                (TaskState::ReachPoint(s2), r)
            }
        };
        self.state = next;
        self.steps += 1;
        let next_obs = self.observe();
        debug_assert!(reward <= 0.0, "reward {reward} must be non-positive");
        Ok(StepResult {
            success: success_from_obs(self.spec.task, &next_obs),
            next_obs,
            reward,
            done: self.steps == self.spec.max_steps,
        })
    }

    /// Scripted controller for the current state; always within bounds.
    pub fn expert_action(&self) -> Vec<f64> {
        let raw = match &self.state {
            TaskState::Pendulum(s) => vec![pendulum::expert_action(s)],
            TaskState::Reacher2(s) => reacher::expert_action(s),
            TaskState::Pusher2(s) => pusher::expert_action(s),
            TaskState::ReachPoint(s) => reach_point::expert_action(s),
        };
        self.spec.clip_action(&raw)
    }
}

fn initial_state(task: TaskKind, rng: &mut ChaCha8Rng) -> TaskState {
    match task {
        TaskKind::Pendulum => TaskState::Pendulum(pendulum::reset(rng)),
        TaskKind::Reacher2 => TaskState::Reacher2(reacher::reset(rng)),
        TaskKind::Pusher2 => TaskState::Pusher2(pusher::reset(rng)),
        TaskKind::ReachPoint => TaskState::ReachPoint(reach_point::reset(rng)),
    }
}

/// Evaluates the task's success predicate on an observation vector. All
/// observations carry enough information to recover the predicate inputs.
/// Comparisons use `<=`, so a distance exactly at the threshold counts.
pub fn success_from_obs(task: TaskKind, obs: &[f64]) -> bool {
    match task {
        TaskKind::Pendulum => pendulum::success_from_obs(obs),
        TaskKind::Reacher2 => reacher::success_from_obs(obs),
        TaskKind::Pusher2 => pusher::success_from_obs(obs),
        TaskKind::ReachPoint => reach_point::success_from_obs(obs),
    }
}

pub(crate) fn vec2_dist(a: &[f64], b: &[f64]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_initial_observation() {
        for task in TaskKind::ALL {
            let mut env = Env::new(task);
            let a = env.reset(123);
            let b = env.reset(123);
            assert_eq!(a, b, "{} reset not deterministic", task.name());
        }
    }

    #[test]
    fn done_fires_exactly_at_max_steps() {
        for task in TaskKind::ALL {
            let mut env = Env::with_spec(EnvSpec::with_max_steps(task, 5).unwrap());
            env.reset(7);
            for i in 1..=5 {
                let r = env.step(&vec![0.0; env.spec().act_dim]).unwrap();
                assert_eq!(r.done, i == 5);
            }
            assert!(env.step(&vec![0.0; env.spec().act_dim]).is_err());
        }
    }

    #[test]
    fn rewards_are_non_positive_under_random_actions() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for task in TaskKind::ALL {
            let mut env = Env::new(task);
            for ep in 0..20 {
                env.reset(ep);
                loop {
                    let action: Vec<f64> = (0..env.spec().act_dim)
                        .map(|_| rng.random_range(-10.0..10.0))
                        .collect();
                    let r = env.step(&action).unwrap();
                    assert!(r.reward <= 0.0, "{}: reward {}", task.name(), r.reward);
                    if r.done {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn expert_actions_stay_in_bounds() {
        let mut rng_seed = 0u64;
        for task in TaskKind::ALL {
            let mut env = Env::new(task);
            for _ in 0..5 {
                env.reset(rng_seed);
                rng_seed += 1;
                loop {
                    let a = env.expert_action();
                    for (v, (lo, hi)) in a.iter().zip(
                        env.spec()
                            .action_low
                            .iter()
                            .zip(env.spec().action_high.iter()),
                    ) {
                        assert!(*v >= *lo && *v <= *hi);
                    }
                    if env.step(&a).unwrap().done {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn expert_success_rate_at_least_95_percent() {
        for task in TaskKind::ALL {
            let mut env = Env::new(task);
            let mut successes = 0;
            for ep in 0..100 {
                env.reset(1000 + ep);
                let last_success = loop {
                    let a = env.expert_action();
                    let r = env.step(&a).unwrap();
                    if r.done {
                        break r.success;
                    }
                };
                if last_success {
                    successes += 1;
                }
            }
            assert!(
                successes >= 95,
                "{}: expert succeeded only {successes}/100",
                task.name()
            );
        }
    }

    #[test]
    fn action_dimension_mismatch_rejected() {
        let mut env = Env::new(TaskKind::ReachPoint);
        env.reset(0);
        assert!(env.step(&[0.0]).is_err());
    }

    #[test]
    fn max_steps_lower_bound_enforced() {
        assert!(EnvSpec::with_max_steps(TaskKind::Pendulum, 1).is_err());
        assert!(EnvSpec::with_max_steps(TaskKind::Pendulum, 2).is_ok());
    }
}
