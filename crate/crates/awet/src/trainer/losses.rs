//! Batch loss primitives shared by the offline, online, and baseline update
//! paths. Keeping one accumulation order here is what makes the
//! "features off equals plain baseline, bit for bit" reduction meaningful.

use crate::demos::Transition;
use crate::error::{Error, Result};
use crate::nnet::{backward, backward_input, forward, forward_taped, Network, ParameterSet};
use crate::trainer::critic_input;

/// Mean squared error of a scalar-output network over a batch, forward only.
pub(crate) fn mse_loss(net: &Network, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    debug_assert_eq!(inputs.len(), targets.len());
    let n = inputs.len() as f64;
    let mut loss = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let y = forward(&net.spec, &net.params, x)?[0];
        let e = y - t;
        loss += e * e / n;
    }
    Ok(loss)
}

/// Accumulates `weight * d(MSE)/d(params)` into `grads` and returns the
/// (unweighted) loss value. Samples are processed in batch order.
pub(crate) fn mse_grads(
    net: &Network,
    inputs: &[Vec<f64>],
    targets: &[f64],
    weight: f64,
    grads: &mut ParameterSet,
) -> Result<f64> {
    debug_assert_eq!(inputs.len(), targets.len());
    let n = inputs.len() as f64;
    let mut loss = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let (y, tape) = forward_taped(&net.spec, &net.params, x)?;
        let e = y[0] - t;
        loss += e * e / n;
        backward(&net.spec, &net.params, &tape, &[weight * 2.0 * e / n], grads)?;
    }
    Ok(loss)
}

/// Mean min-critic value and mean BC error of the current policy on a batch,
/// with gradients w.r.t. the actor accumulated as
/// `q_weight * d(mean min_i Q_i(s, mu(s))) + bc_weight * d(mean |mu(s) - a|^2)`.
///
/// Critics are frozen: gradients flow through them into the action input
/// only. When both weights are zero the backward passes are skipped entirely
/// and only the term values are computed.
pub(crate) struct ActorBatchTerms {
    pub q_mean: f64,
    pub bc_mean: f64,
}

pub(crate) fn actor_batch(
    actor: &Network,
    critic1: &Network,
    critic2: &Network,
    batch: &[Transition],
    q_weight: f64,
    bc_weight: f64,
    grads: &mut ParameterSet,
) -> Result<ActorBatchTerms> {
    let n = batch.len() as f64;
    let mut q_mean = 0.0;
    let mut bc_mean = 0.0;
    let skip_grads = q_weight == 0.0 && bc_weight == 0.0;

    for t in batch {
        let (mu, actor_tape) = forward_taped(&actor.spec, &actor.params, &t.s)?;
        let x = critic_input(&t.s, &mu);
        let (q1, tape1) = forward_taped(&critic1.spec, &critic1.params, &x)?;
        let (q2, tape2) = forward_taped(&critic2.spec, &critic2.params, &x)?;
        let use_first = q1[0] <= q2[0];
        let q_min = if use_first { q1[0] } else { q2[0] };
        q_mean += q_min / n;

        let bc = mu
            .iter()
            .zip(&t.a)
            .map(|(m, a)| (m - a) * (m - a))
            .sum::<f64>();
        bc_mean += bc / n;

        if skip_grads {
            continue;
        }

        // d(total)/d(mu): BC part plus the min-critic path through the
        // frozen critic's action inputs.
        let mut d_mu: Vec<f64> = mu
            .iter()
            .zip(&t.a)
            .map(|(m, a)| bc_weight * 2.0 * (m - a) / n)
            .collect();
        if q_weight != 0.0 {
            let d_q = [q_weight / n];
            let d_x = if use_first {
                backward_input(&critic1.spec, &critic1.params, &tape1, &d_q)?
            } else {
                backward_input(&critic2.spec, &critic2.params, &tape2, &d_q)?
            };
            for (dm, dx) in d_mu.iter_mut().zip(&d_x[t.s.len()..]) {
                *dm += dx;
            }
        }
        backward(&actor.spec, &actor.params, &actor_tape, &d_mu, grads)?;
    }

    Ok(ActorBatchTerms { q_mean, bc_mean })
}

/// Errors out when a loss has gone non-finite, flagging which network.
pub(crate) fn check_finite(loss: f64, what: &str, index: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericOverflow {
            layer: index,
            detail: format!("{what} loss is {loss}"),
        })
    }
}
