//! Minimal dense-network engine: feedforward MLPs with ReLU hidden layers,
//! reverse-mode gradients through a recorded tape, Adam updates, and L2
//! penalties. Everything is `f64` and single-threaded; networks are plain
//! data and can be moved between threads freely.

mod adam;
mod checkpoint;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_network, save_network};

use crate::error::{Error, Result};
use rand::Rng;

/// Hidden-layer activation. Only ReLU is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenActivation {
    Relu,
}

/// Output-layer activation.
///
/// `Tanh` squashes each output and multiplies by a per-output scale, so
/// output `i` always lies strictly inside `(-scale[i], +scale[i])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Tanh,
    Identity,
}

/// Architecture of a dense network: layer sizes, activations, output scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    layer_sizes: Vec<usize>,
    hidden_activation: HiddenActivation,
    output_activation: OutputActivation,
    output_scale: Vec<f64>,
}

impl MlpSpec {
    /// Builds a spec, validating the structural invariants: at least two
    /// layers, all sizes >= 1, one positive scale entry per output.
    pub fn new(
        layer_sizes: Vec<usize>,
        hidden_activation: HiddenActivation,
        output_activation: OutputActivation,
        output_scale: Vec<f64>,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::rejected("spec needs at least 2 layers"));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::rejected("all layer sizes must be >= 1"));
        }
        let out = *layer_sizes.last().unwrap();
        if output_scale.len() != out {
            return Err(Error::rejected(format!(
                "output_scale length {} != output dim {}",
                output_scale.len(),
                out
            )));
        }
        if output_scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::rejected("output_scale entries must be > 0"));
        }
        Ok(Self {
            layer_sizes,
            hidden_activation,
            output_activation,
            output_scale,
        })
    }

    /// Tanh-scaled actor head: `sizes` plus per-output action half-ranges.
    pub fn tanh_scaled(layer_sizes: Vec<usize>, output_scale: Vec<f64>) -> Result<Self> {
        Self::new(
            layer_sizes,
            HiddenActivation::Relu,
            OutputActivation::Tanh,
            output_scale,
        )
    }

    /// Unbounded scalar-or-vector head (critics).
    pub fn identity_out(layer_sizes: Vec<usize>) -> Result<Self> {
        let out = *layer_sizes.last().unwrap_or(&0);
        Self::new(
            layer_sizes,
            HiddenActivation::Relu,
            OutputActivation::Identity,
            vec![1.0; out],
        )
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output_activation
    }

    pub fn output_scale(&self) -> &[f64] {
        &self.output_scale
    }

    /// Number of affine layers.
    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Total flat parameter count (weights then biases, layer by layer).
    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Flat offset of layer `layer`'s weight block; its biases follow the
    /// weights immediately.
    fn weight_offset(&self, layer: usize) -> usize {
        let mut off = 0;
        for l in 0..layer {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            off += fan_in * fan_out + fan_out;
        }
        off
    }
}

/// Flat parameter storage for one network. The layout is fixed by the spec:
/// for each affine layer, the row-major `(out, in)` weight matrix followed by
/// the `out` biases. Also used for gradients, which share the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    values: Vec<f64>,
}

impl ParameterSet {
    pub fn zeros(spec: &MlpSpec) -> Self {
        Self {
            values: vec![0.0; spec.param_count()],
        }
    }

    /// Seeded init: every weight and bias of a layer drawn from
    /// `U(-1/sqrt(fan_in), +1/sqrt(fan_in))`.
    pub fn init_uniform<R: Rng>(spec: &MlpSpec, rng: &mut R) -> Self {
        let mut values = vec![0.0; spec.param_count()];
        let mut off = 0;
        for l in 0..spec.n_layers() {
            let fan_in = spec.layer_sizes[l];
            let fan_out = spec.layer_sizes[l + 1];
            let bound = 1.0 / (fan_in as f64).sqrt();
            let n = fan_in * fan_out + fan_out;
            for v in &mut values[off..off + n] {
                *v = rng.random_range(-bound..bound);
            }
            off += n;
        }
        Self { values }
    }

    /// Reconstructs a parameter set from its flat form.
    pub fn from_flat(spec: &MlpSpec, flat: &[f64]) -> Result<Self> {
        if flat.len() != spec.param_count() {
            return Err(Error::rejected(format!(
                "flat length {} != expected {}",
                flat.len(),
                spec.param_count()
            )));
        }
        Ok(Self {
            values: flat.to_vec(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn fill(&mut self, value: f64) {
        self.values.fill(value);
    }

    /// Euclidean norm of the flat vector.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Forward activations recorded for one input: `activations[0]` is the input,
/// `activations[l + 1]` the post-activation output of affine layer `l`. This
/// is exactly what the backward pass needs to form vector-Jacobian products.
#[derive(Debug, Clone)]
pub struct GradientTape {
    activations: Vec<Vec<f64>>,
}

impl GradientTape {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

/// Dot product with four independent accumulators: the naive fold serializes
/// on floating-point add latency, which dominates the whole engine.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() - a.len() % 4;
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a[..split].chunks_exact(4).zip(b[..split].chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut tail = 0.0;
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Runs the network on one input vector.
pub fn forward(spec: &MlpSpec, params: &ParameterSet, input: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_taped(spec, params, input)?.0)
}

/// Runs the network and records the tape needed for [`backward`].
pub fn forward_taped(
    spec: &MlpSpec,
    params: &ParameterSet,
    input: &[f64],
) -> Result<(Vec<f64>, GradientTape)> {
    if input.len() != spec.input_dim() {
        return Err(Error::rejected(format!(
            "input length {} != input dim {}",
            input.len(),
            spec.input_dim()
        )));
    }
    debug_assert_eq!(params.len(), spec.param_count());

    let mut activations = Vec::with_capacity(spec.n_layers() + 1);
    activations.push(input.to_vec());

    let vals = params.as_slice();
    for l in 0..spec.n_layers() {
        let fan_in = spec.layer_sizes[l];
        let fan_out = spec.layer_sizes[l + 1];
        let w_off = spec.weight_offset(l);
        let b_off = w_off + fan_in * fan_out;
        let x = activations.last().unwrap();

        let mut out = vec![0.0; fan_out];
        for o in 0..fan_out {
            let row = &vals[w_off + o * fan_in..w_off + (o + 1) * fan_in];
            out[o] = vals[b_off + o] + dot(row, x);
        }

        let last = l + 1 == spec.n_layers();
        if last {
            match spec.output_activation {
                OutputActivation::Tanh => {
                    for (o, v) in out.iter_mut().enumerate() {
                        *v = spec.output_scale[o] * v.tanh();
                    }
                }
                OutputActivation::Identity => {}
            }
        } else {
            for v in &mut out {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }

        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow {
                layer: l,
                detail: "non-finite activation".into(),
            });
        }
        activations.push(out);
    }

    let output = activations.last().unwrap().clone();
    Ok((output, GradientTape { activations }))
}

/// Propagates `d_output` (dLoss/dOutput) back through the taped forward pass,
/// accumulating dLoss/dParams into `grads` and returning dLoss/dInput.
///
/// `grads` must share the spec's layout; contributions are added, so one
/// gradient buffer can accumulate a whole batch.
pub fn backward(
    spec: &MlpSpec,
    params: &ParameterSet,
    tape: &GradientTape,
    d_output: &[f64],
    grads: &mut ParameterSet,
) -> Result<Vec<f64>> {
    if grads.len() != spec.param_count() {
        return Err(Error::rejected("gradient buffer has wrong length"));
    }
    backward_impl(spec, params, tape, d_output, Some(grads))
}

/// Like [`backward`] but only computes dLoss/dInput, leaving parameters
/// untouched. Used where a network is frozen but gradients must flow through
/// it (the actor objectives differentiate through fixed critics).
pub fn backward_input(
    spec: &MlpSpec,
    params: &ParameterSet,
    tape: &GradientTape,
    d_output: &[f64],
) -> Result<Vec<f64>> {
    backward_impl(spec, params, tape, d_output, None)
}

fn backward_impl(
    spec: &MlpSpec,
    params: &ParameterSet,
    tape: &GradientTape,
    d_output: &[f64],
    mut grads: Option<&mut ParameterSet>,
) -> Result<Vec<f64>> {
    if d_output.len() != spec.output_dim() {
        return Err(Error::rejected(format!(
            "d_output length {} != output dim {}",
            d_output.len(),
            spec.output_dim()
        )));
    }

    let vals = params.as_slice();

    // dLoss/dz for the current layer, starting at the output.
    let out_act = tape.activations.last().unwrap();
    let mut delta: Vec<f64> = match spec.output_activation {
        OutputActivation::Tanh => d_output
            .iter()
            .zip(out_act.iter())
            .zip(spec.output_scale.iter())
            .map(|((d, y), s)| d * (s - y * y / s))
            .collect(),
        OutputActivation::Identity => d_output.to_vec(),
    };

    for l in (0..spec.n_layers()).rev() {
        let fan_in = spec.layer_sizes[l];
        let fan_out = spec.layer_sizes[l + 1];
        let w_off = spec.weight_offset(l);
        let b_off = w_off + fan_in * fan_out;
        let x = &tape.activations[l];

        let mut d_input = vec![0.0; fan_in];
        for o in 0..fan_out {
            let dz = delta[o];
            if let Some(gbuf) = grads.as_deref_mut() {
                let gvals = gbuf.as_mut_slice();
                if dz != 0.0 {
                    let g_row = &mut gvals[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                    for (gi, xi) in g_row.iter_mut().zip(x.iter()) {
                        *gi += dz * xi;
                    }
                }
                gvals[b_off + o] += dz;
            }
            let w_row = &vals[w_off + o * fan_in..w_off + (o + 1) * fan_in];
            for (di, wi) in d_input.iter_mut().zip(w_row.iter()) {
                *di += dz * wi;
            }
        }

        if l > 0 {
            // ReLU derivative from the recorded post-activation: 1 where the
            // unit fired, 0 elsewhere (including exactly at zero).
            let h = &tape.activations[l];
            for (d, hv) in d_input.iter_mut().zip(h.iter()) {
                if *hv <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        delta = d_input;
    }

    Ok(delta)
}

/// Sum of squared weights, biases excluded.
pub fn l2_penalty(spec: &MlpSpec, params: &ParameterSet) -> f64 {
    let vals = params.as_slice();
    let mut total = 0.0;
    for l in 0..spec.n_layers() {
        let fan_in = spec.layer_sizes[l];
        let fan_out = spec.layer_sizes[l + 1];
        let w_off = spec.weight_offset(l);
        for v in &vals[w_off..w_off + fan_in * fan_out] {
            total += v * v;
        }
    }
    total
}

/// Adds the gradient of `lambda * l2_penalty` (that is, `2 * lambda * w` on
/// every weight entry, nothing on biases) into `grads`.
pub fn accumulate_l2_grad(
    spec: &MlpSpec,
    params: &ParameterSet,
    lambda: f64,
    grads: &mut ParameterSet,
) {
    if lambda == 0.0 {
        return;
    }
    let vals = params.as_slice();
    let gvals = grads.as_mut_slice();
    for l in 0..spec.n_layers() {
        let fan_in = spec.layer_sizes[l];
        let fan_out = spec.layer_sizes[l + 1];
        let w_off = spec.weight_offset(l);
        for i in w_off..w_off + fan_in * fan_out {
            gvals[i] += 2.0 * lambda * vals[i];
        }
    }
}

/// Soft target tracking: `target <- rho * target + (1 - rho) * online`.
pub fn polyak_update(target: &mut ParameterSet, online: &ParameterSet, rho: f64) {
    debug_assert_eq!(target.len(), online.len());
    for (t, o) in target
        .as_mut_slice()
        .iter_mut()
        .zip(online.as_slice().iter())
    {
        *t = rho * *t + (1.0 - rho) * *o;
    }
}

/// A spec/parameter pair; the unit the trainers move around.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: MlpSpec,
    pub params: ParameterSet,
}

impl Network {
    pub fn new(spec: MlpSpec, params: ParameterSet) -> Self {
        debug_assert_eq!(params.len(), spec.param_count());
        Self { spec, params }
    }

    pub fn init<R: Rng>(spec: MlpSpec, rng: &mut R) -> Self {
        let params = ParameterSet::init_uniform(&spec, rng);
        Self { spec, params }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        forward(&self.spec, &self.params, input)
    }

    pub fn forward_taped(&self, input: &[f64]) -> Result<(Vec<f64>, GradientTape)> {
        forward_taped(&self.spec, &self.params, input)
    }
}
