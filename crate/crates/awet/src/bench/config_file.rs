//! Human-readable `key = value` run configuration files, also used verbatim
//! as per-seed run manifests so any metrics file can be regenerated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bench::{AblationTag, Algorithm, RunConfig};
use crate::dtw::ComparisonMode;
use crate::envs::TaskKind;
use crate::error::{Error, Result};
use crate::trainer::BaseAlg;

/// Renders a config as a `[run]` section followed by an `[awet]` section.
/// Keys mirror the struct fields; float formatting is shortest-round-trip, so
/// parse(render(c)) == c.
pub fn render_config(config: &RunConfig) -> String {
    let mut s = String::new();
    let a = &config.awet;
    writeln!(s, "[run]").unwrap();
    writeln!(s, "task = {}", config.task.name()).unwrap();
    writeln!(s, "algorithm = {}", config.algorithm.name()).unwrap();
    writeln!(s, "ablation = {}", config.ablation.name()).unwrap();
    writeln!(s, "n_demos = {}", config.n_demos).unwrap();
    writeln!(s, "n_seeds = {}", config.n_seeds).unwrap();
    writeln!(s, "eval_every = {}", config.eval_every).unwrap();
    writeln!(s, "eval_episodes = {}", config.eval_episodes).unwrap();
    writeln!(s, "out_dir = {}", config.out_dir.display()).unwrap();
    writeln!(s, "master_seed = {}", config.master_seed).unwrap();
    writeln!(s, "demo_seed = {}", config.demo_seed).unwrap();
    writeln!(s, "log_losses = {}", config.log_losses).unwrap();
    if let Some(k) = config.only_seed {
        writeln!(s, "only_seed = {k}").unwrap();
    }
    writeln!(s, "\n[awet]").unwrap();
    writeln!(s, "gamma = {}", a.gamma).unwrap();
    writeln!(s, "lr = {}", a.lr).unwrap();
    writeln!(s, "c_l = {}", a.c_l).unwrap();
    writeln!(s, "c_clip = {}", a.c_clip).unwrap();
    writeln!(s, "lambda1 = {}", a.lambda1).unwrap();
    writeln!(s, "lambda2 = {}", a.lambda2).unwrap();
    writeln!(s, "rho = {}", a.rho).unwrap();
    writeln!(s, "sigma = {}", a.sigma).unwrap();
    writeln!(s, "sigma_tilde = {}", a.sigma_tilde).unwrap();
    writeln!(s, "c = {}", a.c).unwrap();
    writeln!(s, "policy_delay = {}", a.policy_delay).unwrap();
    writeln!(s, "offline_steps = {}", a.offline_steps).unwrap();
    writeln!(s, "online_episodes = {}", a.online_episodes).unwrap();
    writeln!(s, "batch_e = {}", a.batch_e).unwrap();
    writeln!(s, "batch_a = {}", a.batch_a).unwrap();
    writeln!(s, "base_alg = {}", a.base_alg.name()).unwrap();
    let hidden: Vec<String> = a.hidden_sizes.iter().map(|h| h.to_string()).collect();
    writeln!(s, "hidden_sizes = {}", hidden.join(",")).unwrap();
    writeln!(s, "agent_capacity = {}", a.agent_capacity).unwrap();
    writeln!(s, "use_advantage_weight = {}", a.use_advantage_weight).unwrap();
    writeln!(s, "use_early_termination = {}", a.use_early_termination).unwrap();
    writeln!(s, "use_loss_clip = {}", a.use_loss_clip).unwrap();
    let mode = match a.comparison_mode {
        ComparisonMode::PrefixMatch => "prefix_match",
        ComparisonMode::FullExpert => "full_expert",
    };
    writeln!(s, "comparison_mode = {mode}").unwrap();
    writeln!(s, "batch_argmin_critic = {}", a.batch_argmin_critic).unwrap();
    writeln!(s, "normalize_rewards = {}", a.normalize_rewards).unwrap();
    s
}

pub fn save_config(config: &RunConfig, path: &Path) -> Result<()> {
    std::fs::write(path, render_config(config))?;
    Ok(())
}

/// Parses a config file. Unknown keys are errors (typos should not silently
/// fall back to defaults); omitted keys keep their defaults.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?, &path.display().to_string())
}

pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    let mut section = String::new();

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].to_string();
            if section != "run" && section != "awet" {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("unknown section '[{section}]'"),
                ));
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(origin, line_no, format!("expected 'key = value', got '{line}'"))
        })?;
        let key = key.trim();
        let value = value.trim();
        let fail = |detail: String| Error::parse(origin, line_no, detail);
        let parse_f64 =
            |v: &str| -> Result<f64> { v.parse().map_err(|_| fail(format!("bad number '{v}'"))) };
        let parse_usize =
            |v: &str| -> Result<usize> { v.parse().map_err(|_| fail(format!("bad integer '{v}'"))) };
        let parse_bool =
            |v: &str| -> Result<bool> { v.parse().map_err(|_| fail(format!("bad bool '{v}'"))) };

        match (section.as_str(), key) {
            ("run", "task") => config.task = TaskKind::parse(value)?,
            ("run", "algorithm") => config.algorithm = Algorithm::parse(value)?,
            ("run", "ablation") => config.ablation = AblationTag::parse(value)?,
            ("run", "n_demos") => config.n_demos = parse_usize(value)?,
            ("run", "n_seeds") => {
                config.n_seeds = value
                    .parse()
                    .map_err(|_| fail(format!("bad integer '{value}'")))?
            }
            ("run", "eval_every") => config.eval_every = parse_usize(value)?,
            ("run", "eval_episodes") => {
                config.eval_episodes = value
                    .parse()
                    .map_err(|_| fail(format!("bad integer '{value}'")))?
            }
            ("run", "out_dir") => config.out_dir = PathBuf::from(value),
            ("run", "master_seed") => {
                config.master_seed = value
                    .parse()
                    .map_err(|_| fail(format!("bad integer '{value}'")))?
            }
            ("run", "demo_seed") => {
                config.demo_seed = value
                    .parse()
                    .map_err(|_| fail(format!("bad integer '{value}'")))?
            }
            ("run", "log_losses") => config.log_losses = parse_bool(value)?,
            ("run", "only_seed") => {
                config.only_seed = Some(
                    value
                        .parse()
                        .map_err(|_| fail(format!("bad integer '{value}'")))?,
                )
            }
            ("awet", "gamma") => config.awet.gamma = parse_f64(value)?,
            ("awet", "lr") => config.awet.lr = parse_f64(value)?,
            ("awet", "c_l") => config.awet.c_l = parse_f64(value)?,
            ("awet", "c_clip") => config.awet.c_clip = parse_f64(value)?,
            ("awet", "lambda1") => config.awet.lambda1 = parse_f64(value)?,
            ("awet", "lambda2") => config.awet.lambda2 = parse_f64(value)?,
            ("awet", "rho") => config.awet.rho = parse_f64(value)?,
            ("awet", "sigma") => config.awet.sigma = parse_f64(value)?,
            ("awet", "sigma_tilde") => config.awet.sigma_tilde = parse_f64(value)?,
            ("awet", "c") => config.awet.c = parse_f64(value)?,
            ("awet", "policy_delay") => config.awet.policy_delay = parse_usize(value)?,
            ("awet", "offline_steps") => config.awet.offline_steps = parse_usize(value)?,
            ("awet", "online_episodes") => config.awet.online_episodes = parse_usize(value)?,
            ("awet", "batch_e") => config.awet.batch_e = parse_usize(value)?,
            ("awet", "batch_a") => config.awet.batch_a = parse_usize(value)?,
            ("awet", "base_alg") => config.awet.base_alg = BaseAlg::parse(value)?,
            ("awet", "hidden_sizes") => {
                config.awet.hidden_sizes = value
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| fail(format!("bad size list '{value}'")))?
            }
            ("awet", "agent_capacity") => config.awet.agent_capacity = parse_usize(value)?,
            ("awet", "use_advantage_weight") => {
                config.awet.use_advantage_weight = parse_bool(value)?
            }
            ("awet", "use_early_termination") => {
                config.awet.use_early_termination = parse_bool(value)?
            }
            ("awet", "use_loss_clip") => config.awet.use_loss_clip = parse_bool(value)?,
            ("awet", "comparison_mode") => {
                config.awet.comparison_mode = match value {
                    "prefix_match" => ComparisonMode::PrefixMatch,
                    "full_expert" => ComparisonMode::FullExpert,
                    other => return Err(fail(format!("unknown comparison mode '{other}'"))),
                }
            }
            ("awet", "batch_argmin_critic") => {
                config.awet.batch_argmin_critic = parse_bool(value)?
            }
            ("awet", "normalize_rewards") => config.awet.normalize_rewards = parse_bool(value)?,
            ("", k) => return Err(fail(format!("key '{k}' before any section"))),
            (s, k) => return Err(fail(format!("unknown key '{k}' in section '[{s}]'"))),
        }
    }
    config.awet.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut config = RunConfig::default();
        config.task = TaskKind::Pusher2;
        config.n_demos = 40;
        config.awet.hidden_sizes = vec![64, 64];
        config.awet.c_l = 0.9;
        config.awet.base_alg = BaseAlg::Ddpg;
        config.ablation = AblationTag::NoEt;
        config.only_seed = Some(3);
        let text = render_config(&config);
        let parsed = parse_config(&text, "test").unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[run]\nbogus = 1\n";
        assert!(parse_config(text, "test").is_err());
    }

    #[test]
    fn bad_values_are_rejected_with_line_numbers() {
        let text = "[awet]\ngamma = banana\n";
        match parse_config(text, "test") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
