//! 2-D point reach: drive the effector onto a goal point with velocity
//! commands.
//!
//! ```text
//! p'     = p + DT * u                     (u clipped to +-MAX_SPEED)
//! reward = -(|p' - g| + CTRL_COST * |u|^2)
//! ```

use crate::envs::vec2_dist;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const DT: f64 = 0.05;
pub const MAX_SPEED: f64 = 1.0;
/// Goals are sampled uniformly from `[-GOAL_BOX, GOAL_BOX]^2`.
pub const GOAL_BOX: f64 = 0.8;
/// Initial effector positions are sampled uniformly from `[-START_BOX, START_BOX]^2`.
pub const START_BOX: f64 = 0.2;
pub const SUCCESS_DIST: f64 = 0.05;
pub const CTRL_COST: f64 = 0.01;
/// Proportional gain of the scripted controller.
pub const EXPERT_GAIN: f64 = 4.0;

/// Effector position and goal position.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub pos: [f64; 2],
    pub goal: [f64; 2],
}

pub fn reset(rng: &mut ChaCha8Rng) -> State {
    let pos = [
        rng.random_range(-START_BOX..START_BOX),
        rng.random_range(-START_BOX..START_BOX),
    ];
    let goal = [
        rng.random_range(-GOAL_BOX..GOAL_BOX),
        rng.random_range(-GOAL_BOX..GOAL_BOX),
    ];
    State { pos, goal }
}

/// Observation `[px, py, gx, gy]`.
pub fn observe(s: &State) -> Vec<f64> {
    vec![s.pos[0], s.pos[1], s.goal[0], s.goal[1]]
}

pub fn step(s: &State, u: &[f64]) -> (State, f64) {
    let pos = [s.pos[0] + DT * u[0], s.pos[1] + DT * u[1]];
    let dist = vec2_dist(&pos, &s.goal);
    let ctrl = u[0] * u[0] + u[1] * u[1];
    let reward = -(dist + CTRL_COST * ctrl);
    (
        State {
            pos,
            goal: s.goal,
        },
        reward,
    )
}

pub fn success_from_obs(obs: &[f64]) -> bool {
    vec2_dist(&obs[0..2], &obs[2..4]) <= SUCCESS_DIST
}

/// Bounded proportional step toward the goal; exactly zero on the goal.
pub fn expert_action(s: &State) -> Vec<f64> {
    vec![
        (EXPERT_GAIN * (s.goal[0] - s.pos[0])).clamp(-MAX_SPEED, MAX_SPEED),
        (EXPERT_GAIN * (s.goal[1] - s.pos[1])).clamp(-MAX_SPEED, MAX_SPEED),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn on_goal_zero_action_reward_zero_success() {
        let s = State {
            pos: [0.3, -0.2],
            goal: [0.3, -0.2],
        };
        let (next, reward) = step(&s, &[0.0, 0.0]);
        assert_eq!(reward, 0.0);
        assert!(success_from_obs(&observe(&next)));
        assert_eq!(expert_action(&s), vec![0.0, 0.0]);
    }

    #[test]
    fn goal_sampling_covers_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..1000 {
            let s = reset(&mut rng);
            min_x = min_x.min(s.goal[0]);
            max_x = max_x.max(s.goal[0]);
            min_y = min_y.min(s.goal[1]);
            max_y = max_y.max(s.goal[1]);
        }
        let tol = 0.05 * 2.0 * GOAL_BOX;
        assert!(min_x <= -GOAL_BOX + tol && max_x >= GOAL_BOX - tol);
        assert!(min_y <= -GOAL_BOX + tol && max_y >= GOAL_BOX - tol);
    }

    #[test]
    fn boundary_distance_counts_as_success() {
        let obs = [0.0, 0.0, SUCCESS_DIST, 0.0];
        assert!(success_from_obs(&obs));
        let obs = [0.0, 0.0, SUCCESS_DIST + 1e-9, 0.0];
        assert!(!success_from_obs(&obs));
    }
}
