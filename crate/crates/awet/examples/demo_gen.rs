//! Generate expert demonstrations, annotate them with Monte-Carlo returns,
//! and save/reload the dataset file.
//!
//! ```bash
//! cargo run --release --example demo_gen
//! ```

use awet::demos::{annotate_mc_returns, generate_demos, load_demos, save_demos, ExpertBuffer};
use awet::envs::TaskKind;

fn main() -> awet::Result<()> {
    let task = TaskKind::ReachPoint;
    let gamma = 0.98;

    let mut trajs = generate_demos(task, 20, 7)?;
    annotate_mc_returns(&mut trajs, gamma)?;
    println!(
        "generated {} successful episodes of {} steps on {}",
        trajs.len(),
        trajs[0].transitions.len(),
        task.name()
    );

    let returns: Vec<f64> = trajs.iter().map(|t| t.episode_return()).collect();
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    println!("mean episode return: {mean:.3}");
    println!(
        "first transition q_mc: {:.4}",
        trajs[0].transitions[0].q_mc.unwrap()
    );

    let path = std::env::temp_dir().join("awet_demo_gen_example.txt");
    save_demos(&trajs, gamma, &path)?;
    let (reloaded, loaded_gamma) = load_demos(&path)?;
    let expert = ExpertBuffer::new(reloaded);
    println!(
        "saved and reloaded {} transitions (gamma {loaded_gamma}), digest {:016x}",
        expert.len(),
        expert.digest()
    );
    Ok(())
}
