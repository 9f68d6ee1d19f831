//! Actor-critic learning from demonstrations, in plain Rust.
//!
//! The crate trains deterministic continuous-control policies in two stages:
//! an offline stage that fits twin critics to Monte-Carlo returns of expert
//! trajectories and pre-trains the actor with a behavioral-cloning-regularized
//! objective, then an online fine-tuning stage that mixes agent and expert
//! batches, weights the critic losses by a batch-level agent advantage, and
//! aborts exploration rollouts that drift too far (in dynamic-time-warping
//! distance) from the expert corpus.
//!
//! Everything is self-contained: a small `f64` MLP engine with reverse-mode
//! gradients ([`nnet`]), four analytically-defined control tasks with scripted
//! experts ([`envs`]), demonstration datasets and replay buffers ([`demos`]),
//! trajectory similarity and the early-termination gate ([`dtw`]), the
//! two-stage trainer itself ([`trainer`]), and a benchmark harness with
//! ablation runs and a paired signed-rank test ([`bench`]).
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability, or the `awet` binary for the file-driven workflow.

pub mod bench;
pub mod demos;
pub mod dtw;
pub mod envs;
pub mod error;
pub mod nnet;
pub mod trainer;

pub use error::{Error, Result};
