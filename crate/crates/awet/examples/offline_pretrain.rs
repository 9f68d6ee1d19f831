//! Offline stage only: fit twin critics to Monte-Carlo expert returns, then
//! pre-train the actor against the frozen critics with a behavioral-cloning
//! term, evaluate, and round-trip the actor through a checkpoint file.
//!
//! ```bash
//! cargo run --release --example offline_pretrain
//! ```

use awet::demos::{annotate_mc_returns, generate_demos, ExpertBuffer};
use awet::envs::{EnvSpec, TaskKind};
use awet::nnet::{load_network, save_network};
use awet::trainer::{
    evaluate_policy, offline_train_actor, offline_train_critics, rng_stream, streams, AgentNets,
    AwetConfig,
};

fn main() -> awet::Result<()> {
    let task = TaskKind::ReachPoint;
    let seed = 1;
    let config = AwetConfig {
        hidden_sizes: vec![32, 32],
        offline_steps: 2000,
        ..AwetConfig::default()
    };

    let mut trajs = generate_demos(task, 50, 11)?;
    annotate_mc_returns(&mut trajs, config.gamma)?;
    let expert = ExpertBuffer::new(trajs);

    let spec = EnvSpec::new(task);
    let mut nets = AgentNets::init(&spec, &config, &mut rng_stream(seed, streams::INIT))?;

    let mut sample_rng = rng_stream(seed, streams::OFFLINE_SAMPLE);
    offline_train_critics(&mut nets, &expert, &config, &mut sample_rng)?;
    offline_train_actor(&mut nets, &expert, &config, &mut sample_rng)?;

    // The critics should now track the Monte-Carlo annotations.
    let t = &expert.transitions()[0];
    let mut input = t.s.clone();
    input.extend_from_slice(&t.a);
    let q = nets.critic1.forward(&input)?[0];
    println!("critic1 on a training pair: {q:.3} (target {:.3})", t.q_mc.unwrap());

    let eval = evaluate_policy(task, &nets, 100, &mut rng_stream(seed, streams::POST_EVAL))?;
    println!(
        "post-offline evaluation: {}/{} successes, mean return {:.3}",
        eval.successes, eval.episodes, eval.mean_return
    );

    let path = std::env::temp_dir().join("awet_offline_actor.bin");
    save_network(&nets.actor, &path)?;
    let restored = load_network(&path)?;
    assert_eq!(restored.params.as_slice(), nets.actor.params.as_slice());
    println!("actor checkpoint round-trip OK ({})", path.display());
    Ok(())
}
