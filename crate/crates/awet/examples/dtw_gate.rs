//! Trajectory similarity and the early-termination gate: pairwise DTW
//! threshold over an expert corpus, then gate decisions for an expert-like
//! prefix and a drifting rollout.
//!
//! ```bash
//! cargo run --release --example dtw_gate
//! ```

use awet::demos::{annotate_mc_returns, generate_demos, ExpertBuffer};
use awet::dtw::{
    compute_threshold_report, dtw_distance, ComparisonMode, FeatureSeq, TerminationMonitor,
};
use awet::envs::TaskKind;

fn main() -> awet::Result<()> {
    let task = TaskKind::ReachPoint;
    let mut trajs = generate_demos(task, 10, 5)?;
    annotate_mc_returns(&mut trajs, 0.98)?;
    let expert = ExpertBuffer::new(trajs);
    let corpus = expert.feature_corpus()?;

    let d01 = dtw_distance(&corpus[0], &corpus[1])?;
    println!("DTW(traj0, traj1) = {d01:.4}");
    println!("DTW(traj0, traj0) = {:.4}", dtw_distance(&corpus[0], &corpus[0])?);

    let report = compute_threshold_report(&corpus)?;
    println!(
        "threshold over {} trajectories: S_th = {:.4} from {} pairwise distances",
        corpus.len(),
        report.threshold,
        report.pairs_evaluated
    );

    let monitor = TerminationMonitor::new(corpus.clone(), 50, ComparisonMode::PrefixMatch)?;
    println!("gate fires once per episode at step {}", monitor.gate_step());

    // A rollout that follows an expert trajectory stays.
    let half: Vec<Vec<f64>> = corpus[0].frames()[..monitor.gate_step()].to_vec();
    let near = monitor.gate_rollout(&FeatureSeq::new(half)?)?;
    println!(
        "expert-prefix rollout: min distance {:.4} -> {:?}",
        near.min_distance, near.decision
    );

    // A rollout stuck far away is cut.
    let stuck = FeatureSeq::new(vec![vec![25.0; corpus[0].dim()]; monitor.gate_step()])?;
    let far = monitor.gate_rollout(&stuck)?;
    println!(
        "far-away rollout:      min distance {:.4} -> {:?}",
        far.min_distance, far.decision
    );
    Ok(())
}
