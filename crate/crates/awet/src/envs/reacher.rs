//! 2-link planar reacher: torque-controlled joints with viscous damping and
//! no gravity, fingertip position from forward kinematics.
//!
//! ```text
//! q_dot' = clamp(q_dot + DT * (u - DAMPING * q_dot), +-MAX_QVEL)
//! q'     = q + DT * q_dot'
//! tip(q) = L1 * [cos q1, sin q1] + L2 * [cos(q1+q2), sin(q1+q2)]
//! reward = -(|tip(q') - g| + CTRL_COST * |u|^2)
//! ```

use crate::envs::vec2_dist;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const L1: f64 = 0.5;
pub const L2: f64 = 0.5;
pub const DT: f64 = 0.05;
pub const DAMPING: f64 = 2.0;
pub const MAX_TORQUE: f64 = 8.0;
pub const MAX_QVEL: f64 = 6.0;
/// Goals are sampled on an annulus with these radii, well inside the arm's reach.
pub const GOAL_RADIUS_MIN: f64 = 0.25;
pub const GOAL_RADIUS_MAX: f64 = 0.85;
pub const SUCCESS_DIST: f64 = 0.05;
pub const CTRL_COST: f64 = 0.001;
/// Gains of the joint-space PD controller.
pub const EXPERT_KP: f64 = 40.0;
pub const EXPERT_KD: f64 = 7.0;

/// Joint angles, joint velocities, and the goal point.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: [f64; 2],
    pub q_dot: [f64; 2],
    pub goal: [f64; 2],
}

pub fn tip(q: &[f64; 2]) -> [f64; 2] {
    [
        L1 * q[0].cos() + L2 * (q[0] + q[1]).cos(),
        L1 * q[0].sin() + L2 * (q[0] + q[1]).sin(),
    ]
}

pub fn reset(rng: &mut ChaCha8Rng) -> State {
    let q = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
    let radius = rng.random_range(GOAL_RADIUS_MIN..GOAL_RADIUS_MAX);
    let angle = rng.random_range(-PI..PI);
    State {
        q,
        q_dot: [0.0, 0.0],
        goal: [radius * angle.cos(), radius * angle.sin()],
    }
}

/// Observation `[cos q1, sin q1, cos q2, sin q2, q1_dot, q2_dot, gx, gy]`.
pub fn observe(s: &State) -> Vec<f64> {
    vec![
        s.q[0].cos(),
        s.q[0].sin(),
        s.q[1].cos(),
        s.q[1].sin(),
        s.q_dot[0],
        s.q_dot[1],
        s.goal[0],
        s.goal[1],
    ]
}

pub fn step(s: &State, u: &[f64]) -> (State, f64) {
    let mut q_dot = [0.0; 2];
    let mut q = [0.0; 2];
    for i in 0..2 {
        q_dot[i] = (s.q_dot[i] + DT * (u[i] - DAMPING * s.q_dot[i])).clamp(-MAX_QVEL, MAX_QVEL);
        q[i] = s.q[i] + DT * q_dot[i];
    }
    let dist = vec2_dist(&tip(&q), &s.goal);
    let ctrl = u[0] * u[0] + u[1] * u[1];
    let reward = -(dist + CTRL_COST * ctrl);
    (
        State {
            q,
            q_dot,
            goal: s.goal,
        },
        reward,
    )
}

pub fn success_from_obs(obs: &[f64]) -> bool {
    let q = [obs[1].atan2(obs[0]), obs[3].atan2(obs[2])];
    vec2_dist(&tip(&q), &obs[6..8]) <= SUCCESS_DIST
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Closed-form inverse kinematics for the goal: the elbow angle follows from
/// the law of cosines, the shoulder from the goal bearing. The elbow sign is
/// chosen to match the current configuration.
fn ik_targets(s: &State) -> [f64; 2] {
    let r = (s.goal[0] * s.goal[0] + s.goal[1] * s.goal[1])
        .sqrt()
        .clamp(0.02, L1 + L2 - 0.002);
    let cos_q2 = ((r * r - L1 * L1 - L2 * L2) / (2.0 * L1 * L2)).clamp(-1.0, 1.0);
    let mag = cos_q2.acos();
    let q2 = if wrap(s.q[1]) >= 0.0 { mag } else { -mag };
    let q1 = s.goal[1].atan2(s.goal[0]) - (L2 * q2.sin()).atan2(L1 + L2 * q2.cos());
    [q1, q2]
}

/// Joint-space PD toward the inverse-kinematics solution:
/// `u = Kp * wrap(q* - q) - Kd * q_dot`.
pub fn expert_action(s: &State) -> Vec<f64> {
    let target = ik_targets(s);
    vec![
        (EXPERT_KP * wrap(target[0] - s.q[0]) - EXPERT_KD * s.q_dot[0])
            .clamp(-MAX_TORQUE, MAX_TORQUE),
        (EXPERT_KP * wrap(target[1] - s.q[1]) - EXPERT_KD * s.q_dot[1])
            .clamp(-MAX_TORQUE, MAX_TORQUE),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn one_step_matches_hand_integration() {
        let s = State {
            q: [0.4, -1.1],
            q_dot: [0.3, 0.9],
            goal: [0.5, 0.2],
        };
        let u = [1.0, -2.0];
        let mut want_qd = [0.0; 2];
        let mut want_q = [0.0; 2];
        for i in 0..2 {
            want_qd[i] = (s.q_dot[i] + 0.05 * (u[i] - 2.0 * s.q_dot[i])).clamp(-6.0, 6.0);
            want_q[i] = s.q[i] + 0.05 * want_qd[i];
        }
        let want_tip = [
            0.5 * want_q[0].cos() + 0.5 * (want_q[0] + want_q[1]).cos(),
            0.5 * want_q[0].sin() + 0.5 * (want_q[0] + want_q[1]).sin(),
        ];
        let want_dist =
            ((want_tip[0] - 0.5).powi(2) + (want_tip[1] - 0.2).powi(2)).sqrt();
        let want_reward = -(want_dist + 0.001 * (u[0] * u[0] + u[1] * u[1]));

        let (next, reward) = step(&s, &u);
        assert!((next.q[0] - want_q[0]).abs() <= 1e-10);
        assert!((next.q[1] - want_q[1]).abs() <= 1e-10);
        assert!((next.q_dot[0] - want_qd[0]).abs() <= 1e-10);
        assert!((next.q_dot[1] - want_qd[1]).abs() <= 1e-10);
        assert!((reward - want_reward).abs() <= 1e-10);
    }

    #[test]
    fn success_recoverable_from_observation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = reset(&mut rng);
            let by_state = vec2_dist(&tip(&s.q), &s.goal) <= SUCCESS_DIST;
            assert_eq!(success_from_obs(&observe(&s)), by_state);
        }
    }
}
