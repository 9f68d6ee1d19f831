//! Adam optimizer state and update rule.

use crate::error::{Error, Result};
use crate::nnet::ParameterSet;

/// First/second moment estimates plus step counter for one parameter set.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Fresh state with zero moments and the usual moment defaults
    /// (beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8).
    pub fn new(param_len: usize, alpha: f64) -> Self {
        Self {
            m: vec![0.0; param_len],
            v: vec![0.0; param_len],
            t: 0,
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update, in place. The step counter is incremented
/// before the bias correction, so the first call uses `t = 1`.
pub fn adam_step(
    params: &mut ParameterSet,
    grads: &ParameterSet,
    state: &mut AdamState,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::rejected(format!(
            "adam shape mismatch: params {}, grads {}, state {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let b1t = 1.0 - state.beta1.powi(state.t as i32);
    let b2t = 1.0 - state.beta2.powi(state.t as i32);
    let p = params.as_mut_slice();
    let g = grads.as_slice();
    // Moments of parameters with persistently zero gradients decay
    // geometrically toward the subnormal range, where x86 arithmetic stalls;
    // flush them to zero long before that. The floor sits far below any
    // magnitude that could influence an update through the epsilon term.
    const MOMENT_FLOOR: f64 = 1e-200;
    for i in 0..p.len() {
        let m = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
        let v = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
        state.m[i] = if m.abs() < MOMENT_FLOOR { 0.0 } else { m };
        state.v[i] = if v < MOMENT_FLOOR { 0.0 } else { v };
        let m_hat = state.m[i] / b1t;
        let v_hat = state.v[i] / b2t;
        p[i] -= state.alpha * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::MlpSpec;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let spec = MlpSpec::identity_out(vec![2, 3, 1]).unwrap();
        let mut params = ParameterSet::zeros(&spec);
        params.as_mut_slice().iter_mut().for_each(|p| *p = 0.7);
        let before = params.clone();
        let grads = ParameterSet::zeros(&spec);
        let mut state = AdamState::new(params.len(), 1e-3);
        adam_step(&mut params, &grads, &mut state).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_matches_hand_recurrence() {
        // g = 1, alpha = 1e-3, defaults: m_hat = v_hat = 1, so the update is
        // -alpha / (1 + eps).
        let spec = MlpSpec::identity_out(vec![1, 1]).unwrap();
        let mut params = ParameterSet::zeros(&spec);
        let mut grads = ParameterSet::zeros(&spec);
        grads.as_mut_slice().fill(1.0);
        let mut state = AdamState::new(2, 1e-3);
        adam_step(&mut params, &grads, &mut state).unwrap();
        let expected = -1e-3 / (1.0 + 1e-8);
        for &p in params.as_slice() {
            assert!((p - expected).abs() <= 1e-15);
        }
    }

    #[test]
    fn trace_matches_independent_scalar_implementation() {
        // Scalar Adam written out longhand, kept apart from the vector code.
        let (alpha, b1, b2, eps) = (1e-3, 0.9, 0.999, 1e-8);
        let grads_seq = [0.3, 0.3];
        let mut theta = 0.5f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for (k, g) in grads_seq.iter().enumerate() {
            let t = (k + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            theta -= alpha * m_hat / (v_hat.sqrt() + eps);
        }

        let spec = MlpSpec::identity_out(vec![1, 1]).unwrap();
        let mut params = ParameterSet::from_flat(&spec, &[0.5, 0.5]).unwrap();
        let grads = ParameterSet::from_flat(&spec, &[0.3, 0.3]).unwrap();
        let mut state = AdamState::new(2, alpha);
        adam_step(&mut params, &grads, &mut state).unwrap();
        adam_step(&mut params, &grads, &mut state).unwrap();
        for &p in params.as_slice() {
            assert!((p - theta).abs() <= 1e-15, "got {p}, want {theta}");
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let spec = MlpSpec::identity_out(vec![1, 1]).unwrap();
        let mut params = ParameterSet::zeros(&spec);
        let grads = ParameterSet::zeros(&spec);
        let mut state = AdamState::new(5, 1e-3);
        assert!(adam_step(&mut params, &grads, &mut state).is_err());
    }
}
