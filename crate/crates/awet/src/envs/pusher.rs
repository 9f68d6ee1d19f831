//! Point-mass pusher: a velocity-controlled effector shoves a disk-shaped
//! object onto a goal point. Contact is stylized: whenever the effector ends
//! a step inside the contact radius, the object is repositioned to sit on the
//! contact circle along the effector-to-object direction, which pushes it
//! ahead of the moving effector.
//!
//! ```text
//! p' = p + DT * u
//! o' = if |p' - o| < CONTACT_RADIUS:
//!          p' + CONTACT_RADIUS * normalize(o - p')
//!      else o
//! reward = -(|o' - g| + APPROACH_COST * max(0, |p' - o'| - CONTACT_RADIUS)
//!            + CTRL_COST * |u|^2)
//! ```

use crate::envs::vec2_dist;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const DT: f64 = 0.05;
pub const MAX_SPEED: f64 = 1.0;
pub const CONTACT_RADIUS: f64 = 0.15;
/// Objects start on an annulus around the origin with these radii.
pub const OBJECT_RADIUS_MIN: f64 = 0.3;
pub const OBJECT_RADIUS_MAX: f64 = 0.45;
/// Goals sit at this offset range from the object's initial position...
pub const GOAL_OFFSET_MIN: f64 = 0.25;
pub const GOAL_OFFSET_MAX: f64 = 0.4;
/// ...within this half-angle (radians) of the outward bearing from the
/// origin, so pushes head away from where the effector starts.
pub const GOAL_CONE_HALF_ANGLE: f64 = 1.0;
/// Initial effector positions are sampled uniformly from `[-START_BOX, START_BOX]^2`.
pub const START_BOX: f64 = 0.1;
pub const SUCCESS_DIST: f64 = 0.05;
pub const APPROACH_COST: f64 = 0.1;
pub const CTRL_COST: f64 = 0.001;
pub const EXPERT_GAIN: f64 = 5.0;
/// The scripted controller caps its commands at this fraction of the speed
/// limit; interior targets keep the tanh-headed policies from chasing the
/// asymptote when they clone the expert.
pub const EXPERT_SPEED_CAP: f64 = 0.85;

/// Effector position, object position, goal position.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub effector: [f64; 2],
    pub object: [f64; 2],
    pub goal: [f64; 2],
}

pub fn reset(rng: &mut ChaCha8Rng) -> State {
    let effector = [
        rng.random_range(-START_BOX..START_BOX),
        rng.random_range(-START_BOX..START_BOX),
    ];
    let or = rng.random_range(OBJECT_RADIUS_MIN..OBJECT_RADIUS_MAX);
    let oa = rng.random_range(-PI..PI);
    let object = [or * oa.cos(), or * oa.sin()];
    let gr = rng.random_range(GOAL_OFFSET_MIN..GOAL_OFFSET_MAX);
    let ga = oa + rng.random_range(-GOAL_CONE_HALF_ANGLE..GOAL_CONE_HALF_ANGLE);
    let goal = [object[0] + gr * ga.cos(), object[1] + gr * ga.sin()];
    State {
        effector,
        object,
        goal,
    }
}

/// Observation `[px, py, ox, oy, gx, gy, ox-px, oy-py, gx-ox, gy-oy]`.
/// The relative vectors are redundant with the absolute positions but make
/// the (mostly relative-geometry) control law far easier to regress.
pub fn observe(s: &State) -> Vec<f64> {
    vec![
        s.effector[0],
        s.effector[1],
        s.object[0],
        s.object[1],
        s.goal[0],
        s.goal[1],
        s.object[0] - s.effector[0],
        s.object[1] - s.effector[1],
        s.goal[0] - s.object[0],
        s.goal[1] - s.object[1],
    ]
}

pub fn step(s: &State, u: &[f64]) -> (State, f64) {
    let effector = [s.effector[0] + DT * u[0], s.effector[1] + DT * u[1]];
    let gap = vec2_dist(&effector, &s.object);
    let object = if gap < CONTACT_RADIUS {
        let to_obj = [s.object[0] - effector[0], s.object[1] - effector[1]];
        let n = if gap > 1e-12 {
            [to_obj[0] / gap, to_obj[1] / gap]
        } else {
            // Effector landed exactly on the object's center: push along the
            // motion direction, or +x if there was none.
            let speed = (u[0] * u[0] + u[1] * u[1]).sqrt();
            if speed > 1e-12 {
                [u[0] / speed, u[1] / speed]
            } else {
                [1.0, 0.0]
            }
        };
        [
            effector[0] + CONTACT_RADIUS * n[0],
            effector[1] + CONTACT_RADIUS * n[1],
        ]
    } else {
        s.object
    };
    let goal_dist = vec2_dist(&object, &s.goal);
    let approach = (vec2_dist(&effector, &object) - CONTACT_RADIUS).max(0.0);
    let ctrl = u[0] * u[0] + u[1] * u[1];
    let reward = -(goal_dist + APPROACH_COST * approach + CTRL_COST * ctrl);
    (
        State {
            effector,
            object,
            goal: s.goal,
        },
        reward,
    )
}

pub fn success_from_obs(obs: &[f64]) -> bool {
    vec2_dist(&obs[2..4], &obs[4..6]) <= SUCCESS_DIST
}

fn lerp2(a: &[f64; 2], b: &[f64; 2], w: f64) -> [f64; 2] {
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

fn ramp(x: f64, lo: f64, hi: f64) -> f64 {
    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Scripted pusher: walk around to the far side of the object, then drive
/// through it toward the goal, backing off the contact once the object sits
/// on the goal. The phases are blended by continuous alignment ramps rather
/// than switched, which keeps the action field a (nearly everywhere)
/// continuous function of the state, and therefore learnable by regression.
pub fn expert_action(s: &State) -> Vec<f64> {
    let obj_to_goal = vec2_dist(&s.object, &s.goal);
    let gap = vec2_dist(&s.effector, &s.object).max(1e-9);
    let rel = [s.effector[0] - s.object[0], s.effector[1] - s.object[1]];

    // Parked: ease off the contact radially; holds station without touching.
    let backoff = [
        s.object[0] + (CONTACT_RADIUS + 0.01) * rel[0] / gap,
        s.object[1] + (CONTACT_RADIUS + 0.01) * rel[1] / gap,
    ];
    if obj_to_goal <= 1e-9 {
        return p_control(s, &backoff);
    }

    let d = [
        (s.goal[0] - s.object[0]) / obj_to_goal,
        (s.goal[1] - s.object[1]) / obj_to_goal,
    ];
    let behind = [
        s.object[0] - (CONTACT_RADIUS + 0.02) * d[0],
        s.object[1] - (CONTACT_RADIUS + 0.02) * d[1],
    ];

    // Push target: where the effector sits when the object is parked just
    // past the goal center.
    let push_t = [
        s.goal[0] - (CONTACT_RADIUS - 0.01) * d[0],
        s.goal[1] - (CONTACT_RADIUS - 0.01) * d[1],
    ];

    // Approach target: the staging point, approached around a safety circle
    // whose radius eases down to the staging radius as the bearing lines up.
    let phi_p = rel[1].atan2(rel[0]);
    let phi_b = (behind[1] - s.object[1]).atan2(behind[0] - s.object[0]);
    let mut delta = phi_b - phi_p;
    while delta > std::f64::consts::PI {
        delta -= 2.0 * std::f64::consts::PI;
    }
    while delta < -std::f64::consts::PI {
        delta += 2.0 * std::f64::consts::PI;
    }
    let approach_t = {
        let radius = CONTACT_RADIUS + 0.02 + 0.04 * ramp(delta.abs(), 0.0, 0.35);
        let phi = phi_p + delta.signum() * delta.abs().min(1.2);
        [
            s.object[0] + radius * phi.cos(),
            s.object[1] + radius * phi.sin(),
        ]
    };

    // Alignment ramp: 1 when squarely behind the object on the push line.
    let along = rel[0] * d[0] + rel[1] * d[1];
    let lateral = [rel[0] - along * d[0], rel[1] - along * d[1]];
    let lateral_norm = (lateral[0] * lateral[0] + lateral[1] * lateral[1]).sqrt();
    let aligned = ramp(-along, 0.5 * CONTACT_RADIUS, 0.9 * CONTACT_RADIUS)
        * ramp(-lateral_norm, -0.5 * CONTACT_RADIUS, -0.25 * CONTACT_RADIUS);

    // Parking ramp: fade from pushing to the back-off hold near the goal.
    let parked = ramp(-obj_to_goal, -0.045, -0.03);

    let drive = lerp2(&approach_t, &push_t, aligned);
    let target = lerp2(&drive, &backoff, parked);
    p_control(s, &target)
}

fn p_control(s: &State, target: &[f64; 2]) -> Vec<f64> {
    let cap = EXPERT_SPEED_CAP * MAX_SPEED;
    vec![
        (EXPERT_GAIN * (target[0] - s.effector[0])).clamp(-cap, cap),
        (EXPERT_GAIN * (target[1] - s.effector[1])).clamp(-cap, cap),
    ]
}
