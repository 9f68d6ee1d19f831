//! 1-DoF pendulum swing-up.
//!
//! The angle is measured from upright and wrapped to `[-pi, pi]`; gravity
//! accelerates the pendulum away from upright. Explicit Euler update with the
//! velocity integrated first:
//!
//! ```text
//! theta_dot' = clamp(theta_dot + (1.5 * G / LENGTH * sin(theta)
//!                     + 3.0 / (MASS * LENGTH^2) * u) * DT, +-MAX_SPEED)
//! theta'     = wrap(theta + theta_dot' * DT)
//! reward     = -(theta'^2 + 0.1 * theta_dot'^2 + 0.001 * u^2)
//! ```

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_TORQUE: f64 = 5.0;
pub const MAX_SPEED: f64 = 8.0;
/// Success needs the final angle within this many radians of upright...
pub const SUCCESS_ANGLE: f64 = 0.15;
/// ...and the final angular speed at most this, in rad/s.
pub const SUCCESS_SPEED: f64 = 1.0;

/// Angle from upright (rad, wrapped to `[-pi, pi]`) and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub theta: f64,
    pub theta_dot: f64,
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Initial angle uniform in `[-pi, pi]`, velocity uniform in `[-1, 1]`.
pub fn reset(rng: &mut ChaCha8Rng) -> State {
    State {
        theta: rng.random_range(-PI..PI),
        theta_dot: rng.random_range(-1.0..1.0),
    }
}

/// Observation `[cos(theta), sin(theta), theta_dot]`.
pub fn observe(s: &State) -> Vec<f64> {
    vec![s.theta.cos(), s.theta.sin(), s.theta_dot]
}

pub fn step(s: &State, torque: f64) -> (State, f64) {
    let accel = 1.5 * GRAVITY / LENGTH * s.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * torque;
    let theta_dot = (s.theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
    let theta = wrap_angle(s.theta + theta_dot * DT);
    let reward = -(theta * theta + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque);
    (State { theta, theta_dot }, reward)
}

pub fn success_from_obs(obs: &[f64]) -> bool {
    let theta = obs[1].atan2(obs[0]);
    theta.abs() <= SUCCESS_ANGLE && obs[2].abs() <= SUCCESS_SPEED
}

/// Total mechanical energy with the pivot as reference; upright rest has
/// `MASS * GRAVITY * LENGTH`.
fn energy(s: &State) -> f64 {
    0.5 * MASS * LENGTH * LENGTH * s.theta_dot * s.theta_dot
        + MASS * GRAVITY * LENGTH * s.theta.cos()
}

/// Scripted swing-up: pump energy slightly past the upright level while far
/// from the top (the margin keeps the pendulum from stalling just short),
/// then hand over to a PD catch. When energy-poor and nearly stationary the
/// controller first kicks along gravity to build swing speed instead of
/// crawling up against it; from a dead hang this still produces a full-torque
/// kick.
pub fn expert_action(s: &State) -> f64 {
    let near_top = s.theta.abs() < 1.1 && s.theta_dot.abs() < 5.0;
    if near_top {
        return (-25.0 * s.theta - 6.0 * s.theta_dot).clamp(-MAX_TORQUE, MAX_TORQUE);
    }
    let deficit = MASS * GRAVITY * LENGTH + 0.5 - energy(s);
    if deficit > 4.0 && s.theta_dot.abs() < 0.6 {
        let down = if s.theta.sin() >= 0.0 { 1.0 } else { -1.0 };
        return MAX_TORQUE * down;
    }
    let direction = if s.theta_dot >= 0.0 { 1.0 } else { -1.0 };
    (3.0 * deficit * direction).clamp(-MAX_TORQUE, MAX_TORQUE)
}
