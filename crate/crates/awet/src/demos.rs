//! Demonstration generation, the on-disk dataset format, replay buffers, and
//! Monte-Carlo return annotation for expert trajectories.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dtw::FeatureSeq;
use crate::envs::{Env, TaskKind};
use crate::error::{Error, Result};

/// One `(s, a, r, s', d)` tuple; expert transitions additionally carry their
/// Monte-Carlo return once annotated.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub d: bool,
    pub q_mc: Option<f64>,
}

/// Who produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Expert,
    Agent,
}

/// An ordered episode of transitions plus generation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub seed: u64,
    pub task: TaskKind,
    pub source: Source,
}

impl Trajectory {
    /// Final-step success predicate, recovered from the last observation.
    pub fn is_success(&self) -> bool {
        self.transitions
            .last()
            .map(|t| crate::envs::success_from_obs(self.task, &t.s_next))
            .unwrap_or(false)
    }

    /// Undiscounted return.
    pub fn episode_return(&self) -> f64 {
        self.transitions.iter().map(|t| t.r).sum()
    }

    /// Observation sequence (the `s` of each transition) as DTW features.
    pub fn feature_seq(&self) -> Result<FeatureSeq> {
        FeatureSeq::new(self.transitions.iter().map(|t| t.s.clone()).collect())
    }
}

/// Rolls the scripted expert until `n_episodes` successful trajectories are
/// collected. Unsuccessful episodes are re-rolled with fresh seeds and
/// excluded; more than `10 * n_episodes` attempts is an error.
pub fn generate_demos(task: TaskKind, n_episodes: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let mut out = Vec::with_capacity(n_episodes);
    let mut seed_stream = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0usize;
    let max_attempts = n_episodes.saturating_mul(10);
    while out.len() < n_episodes {
        if attempts >= max_attempts {
            return Err(Error::GenerationFailure {
                wanted: n_episodes,
                got: out.len(),
                attempts,
            });
        }
        attempts += 1;
        let ep_seed: u64 = seed_stream.random();
        let traj = rollout_expert(task, ep_seed)?;
        if traj.is_success() {
            out.push(traj);
        }
    }
    Ok(out)
}

fn rollout_expert(task: TaskKind, ep_seed: u64) -> Result<Trajectory> {
    let mut env = Env::new(task);
    let mut obs = env.reset(ep_seed);
    let mut transitions = Vec::with_capacity(env.spec().max_steps);
    loop {
        let a = env.expert_action();
        let step = env.step(&a)?;
        transitions.push(Transition {
            s: obs,
            a,
            r: step.reward,
            s_next: step.next_obs.clone(),
            d: step.done,
            q_mc: None,
        });
        obs = step.next_obs;
        if step.done {
            break;
        }
    }
    Ok(Trajectory {
        transitions,
        seed: ep_seed,
        task,
        source: Source::Expert,
    })
}

/// Fills in `q_mc` for every transition: the discounted sum of the remaining
/// rewards along the episode, by backward recursion `q_t = r_t + gamma * q_{t+1}`
/// (the reward stored on transition `t` is the one received after acting).
pub fn annotate_mc_returns(trajectories: &mut [Trajectory], gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::rejected(format!("gamma {gamma} outside [0, 1)")));
    }
    for traj in trajectories {
        let mut acc = 0.0;
        for t in traj.transitions.iter_mut().rev() {
            acc = t.r + gamma * acc;
            t.q_mc = Some(acc);
        }
    }
    Ok(())
}

/// Confirms all rewards across the expert buffer and any agent transitions
/// share one sign (zeros are compatible with either). Mixed signs abort
/// training since the advantage ratio assumes same-sign value scales.
pub fn validate_reward_signs(expert: &ExpertBuffer, agent: &[Transition]) -> Result<()> {
    let mut sign = 0.0f64;
    let mut offenders: Vec<(String, usize, f64)> = Vec::new();
    let mut scan = |source: &str, idx: usize, r: f64| {
        if r == 0.0 {
            return;
        }
        if sign == 0.0 {
            sign = r.signum();
        } else if r.signum() != sign {
            offenders.push((source.to_string(), idx, r));
        }
    };
    for (i, t) in expert.transitions().iter().enumerate() {
        scan("expert", i, t.r);
    }
    for (i, t) in agent.iter().enumerate() {
        scan("agent", i, t.r);
    }
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(Error::SignViolation {
            summary: format!(
                "{} transition(s) disagree with the dominant sign {}",
                offenders.len(),
                if sign > 0.0 { "+" } else { "-" }
            ),
            offenders,
        })
    }
}

/// Immutable expert replay store. Keeps the trajectory structure (the
/// termination gate needs per-trajectory feature sequences) alongside a flat
/// transition view for sampling.
#[derive(Debug, Clone)]
pub struct ExpertBuffer {
    trajectories: Vec<Trajectory>,
    flat: Vec<Transition>,
}

impl ExpertBuffer {
    pub fn new(trajectories: Vec<Trajectory>) -> Self {
        let flat = trajectories
            .iter()
            .flat_map(|t| t.transitions.iter().cloned())
            .collect();
        Self { trajectories, flat }
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.flat
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// Errors with the first unannotated transition, if any.
    pub fn require_annotation(&self) -> Result<()> {
        match self.flat.iter().position(|t| t.q_mc.is_none()) {
            None => Ok(()),
            Some(index) => Err(Error::MissingAnnotation { index }),
        }
    }

    /// One DTW feature sequence per trajectory.
    pub fn feature_corpus(&self) -> Result<Vec<FeatureSeq>> {
        self.trajectories.iter().map(|t| t.feature_seq()).collect()
    }

    /// Uniform sample with replacement from the flat transition store.
    pub fn sample_batch(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Transition>> {
        sample_with_replacement(&self.flat, batch_size, rng)
    }

    /// Content digest, for immutability checks and run manifests.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        for traj in &self.trajectories {
            h.write(traj.task.name().as_bytes());
            for t in &traj.transitions {
                hash_transition(&mut h, t);
            }
        }
        h.finish()
    }
}

/// Bounded FIFO ring buffer for agent transitions; the oldest entries are
/// evicted once `capacity` is reached.
#[derive(Debug, Clone)]
pub struct AgentBuffer {
    store: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl AgentBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "agent buffer capacity must be positive");
        Self {
            store: Vec::with_capacity(capacity),
            capacity,
            next: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.store.len() < self.capacity {
            self.store.push(t);
        } else {
            self.store[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn extend<I: IntoIterator<Item = Transition>>(&mut self, items: I) {
        for t in items {
            self.push(t);
        }
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    /// Transitions from oldest to newest.
    pub fn iter_ordered(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.store.len() == self.capacity {
            self.next
        } else {
            0
        };
        self.store[split..].iter().chain(self.store[..split].iter())
    }

    pub fn sample_batch(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Transition>> {
        sample_with_replacement(&self.store, batch_size, rng)
    }

    pub fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        for t in self.iter_ordered() {
            hash_transition(&mut h, t);
        }
        h.finish()
    }
}

fn sample_with_replacement(
    store: &[Transition],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Transition>> {
    if store.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    Ok((0..batch_size)
        .map(|_| store[rng.random_range(0..store.len())].clone())
        .collect())
}

// --- dataset files ---------------------------------------------------------

/// Writes trajectories in the line-delimited text format:
///
/// ```text
/// #awet-demos v1 task=<name> obs=<n> act=<m> gamma=<g> episodes=<M> steps=<T>
/// <ep_index> <step> s[0..n) a[0..m) r s'[0..n) d q_mc
/// ```
///
/// Floats carry 17 significant digits, so a save/load round trip is
/// bit-exact. All trajectories must be annotated and uniform in shape.
pub fn save_demos(trajectories: &[Trajectory], gamma: f64, path: &Path) -> Result<()> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::rejected("cannot save an empty dataset"))?;
    let task = first.task;
    let steps = first.transitions.len();
    let obs = first.transitions[0].s.len();
    let act = first.transitions[0].a.len();

    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "#awet-demos v1 task={} obs={} act={} gamma={} episodes={} steps={}",
        task.name(),
        obs,
        act,
        fmt_f64(gamma),
        trajectories.len(),
        steps
    )?;
    for (ep, traj) in trajectories.iter().enumerate() {
        if traj.task != task || traj.transitions.len() != steps {
            return Err(Error::rejected("trajectories are not uniform in shape"));
        }
        for (i, t) in traj.transitions.iter().enumerate() {
            let q = t.q_mc.ok_or(Error::MissingAnnotation { index: i })?;
            let mut line = String::with_capacity(32 * (2 * obs + act + 5));
            line.push_str(&format!("{ep} {i}"));
            for v in &t.s {
                line.push(' ');
                line.push_str(&fmt_f64(*v));
            }
            for v in &t.a {
                line.push(' ');
                line.push_str(&fmt_f64(*v));
            }
            line.push(' ');
            line.push_str(&fmt_f64(t.r));
            for v in &t.s_next {
                line.push(' ');
                line.push_str(&fmt_f64(*v));
            }
            line.push_str(if t.d { " 1" } else { " 0" });
            line.push(' ');
            line.push_str(&fmt_f64(q));
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a dataset written by [`save_demos`]. Returns the trajectories and
/// the gamma recorded in the header.
pub fn load_demos(path: &Path) -> Result<(Vec<Trajectory>, f64)> {
    let p = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&p, 1, "missing header"))??;
    if !header.starts_with("#awet-demos v1 ") {
        return Err(Error::parse(&p, 1, "not an awet demo file"));
    }
    let mut task = None;
    let mut obs = None;
    let mut act = None;
    let mut gamma = None;
    let mut episodes = None;
    let mut steps = None;
    for field in header.trim_start_matches("#awet-demos v1 ").split(' ') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(&p, 1, format!("bad header field '{field}'")))?;
        match key {
            "task" => task = Some(TaskKind::parse(value)?),
            "obs" => obs = value.parse::<usize>().ok(),
            "act" => act = value.parse::<usize>().ok(),
            "gamma" => gamma = value.parse::<f64>().ok(),
            "episodes" => episodes = value.parse::<usize>().ok(),
            "steps" => steps = value.parse::<usize>().ok(),
            other => return Err(Error::parse(&p, 1, format!("unknown header key '{other}'"))),
        }
    }
    let (task, obs, act, gamma, episodes, steps) = match (task, obs, act, gamma, episodes, steps) {
        (Some(t), Some(o), Some(a), Some(g), Some(e), Some(s)) => (t, o, a, g, e, s),
        _ => return Err(Error::parse(&p, 1, "incomplete header")),
    };

    let want_tokens = 2 * obs + act + 5;
    let mut trajectories: Vec<Trajectory> = Vec::with_capacity(episodes);
    for (line_no, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let line_no = line_no + 2;
        let tokens: Vec<&str> = line.split(' ').collect();
        if tokens.len() != want_tokens {
            return Err(Error::parse(
                &p,
                line_no,
                format!("expected {want_tokens} fields, got {}", tokens.len()),
            ));
        }
        let parse_f = |tok: &str, what: &str| -> Result<f64> {
            tok.parse::<f64>()
                .map_err(|_| Error::parse(&p, line_no, format!("bad {what} value '{tok}'")))
        };
        let ep: usize = tokens[0]
            .parse()
            .map_err(|_| Error::parse(&p, line_no, "bad episode index"))?;
        let step: usize = tokens[1]
            .parse()
            .map_err(|_| Error::parse(&p, line_no, "bad step index"))?;
        let mut cursor = 2;
        let mut take = |n: usize| {
            let slice = &tokens[cursor..cursor + n];
            cursor += n;
            slice
        };
        let s: Vec<f64> = take(obs)
            .iter()
            .map(|t| parse_f(t, "state"))
            .collect::<Result<_>>()?;
        let a: Vec<f64> = take(act)
            .iter()
            .map(|t| parse_f(t, "action"))
            .collect::<Result<_>>()?;
        let r = parse_f(take(1)[0], "reward")?;
        let s_next: Vec<f64> = take(obs)
            .iter()
            .map(|t| parse_f(t, "next state"))
            .collect::<Result<_>>()?;
        let d = match take(1)[0] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(&p, line_no, format!("bad done flag '{other}'"))),
        };
        let q_mc = parse_f(take(1)[0], "q_mc")?;

        if ep == trajectories.len() && step == 0 {
            trajectories.push(Trajectory {
                transitions: Vec::with_capacity(steps),
                seed: 0,
                task,
                source: Source::Expert,
            });
        }
        let traj = trajectories
            .get_mut(ep)
            .ok_or_else(|| Error::parse(&p, line_no, "episode index out of order"))?;
        if step != traj.transitions.len() {
            return Err(Error::parse(&p, line_no, "step index out of order"));
        }
        traj.transitions.push(Transition {
            s,
            a,
            r,
            s_next,
            d,
            q_mc: Some(q_mc),
        });
    }

    if trajectories.len() != episodes {
        return Err(Error::parse(
            &p,
            0,
            format!("expected {episodes} episodes, got {}", trajectories.len()),
        ));
    }
    for traj in &trajectories {
        if traj.transitions.len() != steps {
            return Err(Error::parse(&p, 0, "episode with wrong step count"));
        }
    }
    Ok((trajectories, gamma))
}

// --- hashing ----------------------------------------------------------------

/// FNV-1a 64-bit, enough for content digests of datasets and buffers.
pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub(crate) fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    pub(crate) fn write_f64(&mut self, v: f64) {
        self.write(&v.to_le_bytes());
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

fn hash_transition(h: &mut Fnv1a, t: &Transition) {
    for v in &t.s {
        h.write_f64(*v);
    }
    for v in &t.a {
        h.write_f64(*v);
    }
    h.write_f64(t.r);
    for v in &t.s_next {
        h.write_f64(*v);
    }
    h.write(&[t.d as u8]);
    match t.q_mc {
        Some(q) => {
            h.write(&[1]);
            h.write_f64(q);
        }
        None => h.write(&[0]),
    }
}
