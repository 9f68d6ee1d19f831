use awet::bench::*;
use awet::envs::TaskKind;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let mut base = desk_config(TaskKind::Pusher2);
    base.out_dir = std::env::temp_dir().join("awet_c10_trial");
    base.n_seeds = 10;
    base.master_seed = 100;
    base.demo_seed = 1000;
    for (tag, demos) in [
        (AblationTag::Full, 100usize),
        (AblationTag::NoAa, 100),
        (AblationTag::NoEt, 100),
        (AblationTag::NoAaNoEt, 100),
        (AblationTag::Full, 20),
    ] {
        let mut c = base.clone();
        c.ablation = tag;
        c.n_demos = demos;
        let s = run_experiment(&c).unwrap();
        let finals: Vec<u32> = s.seeds.iter().map(|x| x.final_eval.map(|e| e.successes).unwrap_or(0)).collect();
        eprintln!("{} demos {}: mean {:.3} +- {:.3} finals {:?} discards {:?} [{:.0}s]",
            tag.name(), demos, s.final_success_mean, s.final_success_std, finals,
            s.seeds.iter().map(|x| x.discards).collect::<Vec<_>>(), t0.elapsed().as_secs_f64());
    }
}
