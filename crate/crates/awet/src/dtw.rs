//! Dynamic-time-warping trajectory similarity, the automatic termination
//! threshold, and the half-episode gate that discards rollouts which drift
//! too far from the expert corpus.

use crate::error::{Error, Result};

/// One real vector per timestep, extracted from a trajectory or a partial
/// rollout. Non-empty, uniform dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeq {
    frames: Vec<Vec<f64>>,
}

impl FeatureSeq {
    pub fn new(frames: Vec<Vec<f64>>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::rejected("feature sequence must be non-empty"));
        }
        let dim = frames[0].len();
        if dim == 0 || frames.iter().any(|f| f.len() != dim) {
            return Err(Error::rejected("feature sequence has ragged dimensions"));
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frames[0].len()
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    /// Prefix of at most `len` frames.
    pub fn truncated(&self, len: usize) -> FeatureSeq {
        FeatureSeq {
            frames: self.frames[..len.min(self.frames.len())].to_vec(),
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Classic DTW: minimum accumulated Euclidean frame cost over all monotone
/// alignments of `x` and `y` (moves right, down, diagonal, unit weight each).
pub fn dtw_distance(x: &FeatureSeq, y: &FeatureSeq) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::rejected(format!(
            "feature dimensions differ: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    let (n, m) = (x.len(), y.len());
    // Rolling single row of the (n x m) accumulated-cost table.
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for i in 0..n {
        for j in 0..m {
            let cost = euclidean(&x.frames[i], &y.frames[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 {
                    prev[j - 1]
                } else {
                    f64::INFINITY
                };
                up.min(left).min(diag)
            };
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Threshold statistics: the mean over distinct unordered pairs, plus how
/// many distances were actually evaluated.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdReport {
    pub threshold: f64,
    pub pairs_evaluated: usize,
}

/// Mean DTW distance over the `(M^2 - M) / 2` distinct trajectory pairs.
/// Self-distances are zero and the measure is symmetric, so only `i < j`
/// pairs are computed.
pub fn compute_threshold(corpus: &[FeatureSeq]) -> Result<f64> {
    Ok(compute_threshold_report(corpus)?.threshold)
}

/// Like [`compute_threshold`] but also reports the pair count, so tests can
/// confirm exactly `(M^2 - M) / 2` evaluations happen.
pub fn compute_threshold_report(corpus: &[FeatureSeq]) -> Result<ThresholdReport> {
    let m = corpus.len();
    if m < 2 {
        return Err(Error::InsufficientCorpus { got: m });
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..m {
        for j in i + 1..m {
            total += dtw_distance(&corpus[i], &corpus[j])?;
            pairs += 1;
        }
    }
    Ok(ThresholdReport {
        threshold: total / pairs as f64,
        pairs_evaluated: pairs,
    })
}

/// How a half-length rollout is compared against full-length expert
/// trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonMode {
    /// Compare against each expert trajectory in full, as the update loop's
    /// check literally reads. Inflates distances for short rollouts.
    FullExpert,
    /// Truncate each expert trajectory to the rollout's length first, so the
    /// comparison is prefix-against-prefix. Default.
    PrefixMatch,
}

/// Gate verdict for one rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateDecision {
    Continue,
    TerminateAndDiscard,
}

/// Gate outcome plus the observed minimum corpus distance, for metrics.
#[derive(Debug, Clone, Copy)]
pub struct GateOutcome {
    pub decision: GateDecision,
    pub min_distance: f64,
}

/// Holds the expert feature corpus and the precomputed threshold; immutable
/// after construction.
#[derive(Debug, Clone)]
pub struct TerminationMonitor {
    corpus: Vec<FeatureSeq>,
    s_th: f64,
    gate_step: usize,
    mode: ComparisonMode,
}

impl TerminationMonitor {
    /// Builds a monitor from one feature sequence per expert trajectory.
    /// `max_steps` fixes the gate step at `ceil(max_steps / 2)`.
    pub fn new(corpus: Vec<FeatureSeq>, max_steps: usize, mode: ComparisonMode) -> Result<Self> {
        let s_th = compute_threshold(&corpus)?;
        Ok(Self {
            corpus,
            s_th,
            gate_step: max_steps.div_ceil(2),
            mode,
        })
    }

    /// Monitor with an explicitly chosen threshold (tests, diagnostics).
    pub fn with_threshold(
        corpus: Vec<FeatureSeq>,
        s_th: f64,
        max_steps: usize,
        mode: ComparisonMode,
    ) -> Result<Self> {
        if corpus.len() < 2 {
            return Err(Error::InsufficientCorpus { got: corpus.len() });
        }
        if s_th < 0.0 {
            return Err(Error::rejected("threshold must be >= 0"));
        }
        Ok(Self {
            corpus,
            s_th,
            gate_step: max_steps.div_ceil(2),
            mode,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.s_th
    }

    /// Step index (1-based count of completed steps) at which the gate fires.
    pub fn gate_step(&self) -> usize {
        self.gate_step
    }

    pub fn mode(&self) -> ComparisonMode {
        self.mode
    }

    pub fn corpus_len(&self) -> usize {
        self.corpus.len()
    }

    /// Checks a partial rollout against the corpus: terminate iff the minimum
    /// DTW distance strictly exceeds the threshold. Ties continue.
    ///
    /// In prefix-match mode the threshold is prorated by the compared prefix
    /// length: the threshold is a mean over full-length alignments, and a
    /// half-length comparison accumulates roughly half the cost, so comparing
    /// it against the full-length mean would let almost anything through.
    pub fn gate_rollout(&self, partial: &FeatureSeq) -> Result<GateOutcome> {
        let mut min_d = f64::INFINITY;
        let mut threshold = self.s_th;
        for expert in &self.corpus {
            let d = match self.mode {
                ComparisonMode::FullExpert => dtw_distance(partial, expert)?,
                ComparisonMode::PrefixMatch => {
                    dtw_distance(partial, &expert.truncated(partial.len()))?
                }
            };
            if d < min_d {
                min_d = d;
            }
        }
        if self.mode == ComparisonMode::PrefixMatch {
            let full_len = self
                .corpus
                .iter()
                .map(|e| e.len())
                .max()
                .unwrap_or(partial.len());
            if partial.len() < full_len {
                threshold *= partial.len() as f64 / full_len as f64;
            }
        }
        let decision = if min_d > threshold {
            GateDecision::TerminateAndDiscard
        } else {
            GateDecision::Continue
        };
        Ok(GateOutcome {
            decision,
            min_distance: min_d,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(scalars: &[f64]) -> FeatureSeq {
        FeatureSeq::new(scalars.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    fn random_seq(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> FeatureSeq {
        FeatureSeq::new(
            (0..len)
                .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    /// Exhaustive minimum over all monotone alignment paths: start at (0,0),
    /// end at (n-1, m-1), moves (+1,0), (0,+1), (+1,+1), every visited cell
    /// pays its local cost.
    fn brute_force_dtw(x: &FeatureSeq, y: &FeatureSeq) -> f64 {
        fn go(x: &FeatureSeq, y: &FeatureSeq, i: usize, j: usize, acc: f64, best: &mut f64) {
            let acc = acc + euclidean(&x.frames()[i], &y.frames()[j]);
            if i + 1 == x.len() && j + 1 == y.len() {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            if i + 1 < x.len() {
                go(x, y, i + 1, j, acc, best);
            }
            if j + 1 < y.len() {
                go(x, y, i, j + 1, acc, best);
            }
            if i + 1 < x.len() && j + 1 < y.len() {
                go(x, y, i + 1, j + 1, acc, best);
            }
        }
        let mut best = f64::INFINITY;
        go(x, y, 0, 0, 0.0, &mut best);
        best
    }

    #[test]
    fn self_distance_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let len = rng.random_range(1..10);
            let x = random_seq(&mut rng, len, 3);
            assert_eq!(dtw_distance(&x, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn scalar_example_hand_table() {
        // [0,1,2] vs [0,2] under absolute-difference cost: optimal alignment
        // pairs 1 with 2 and costs exactly 1.
        let d = dtw_distance(&seq(&[0.0, 1.0, 2.0]), &seq(&[0.0, 2.0])).unwrap();
        assert!((d - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn dp_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let (lx, ly) = (rng.random_range(1..=6), rng.random_range(1..=6));
            let x = random_seq(&mut rng, lx, 2);
            let y = random_seq(&mut rng, ly, 2);
            let dp = dtw_distance(&x, &y).unwrap();
            let bf = brute_force_dtw(&x, &y);
            assert!((dp - bf).abs() <= 1e-10, "dp {dp} vs brute force {bf}");
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = random_seq(&mut ChaCha8Rng::seed_from_u64(0), 3, 2);
        let y = random_seq(&mut ChaCha8Rng::seed_from_u64(1), 3, 3);
        assert!(dtw_distance(&x, &y).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_nonnegative(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lx, ly) = (rng.random_range(1..8), rng.random_range(1..8));
            let x = random_seq(&mut rng, lx, 2);
            let y = random_seq(&mut rng, ly, 2);
            let xy = dtw_distance(&x, &y).unwrap();
            let yx = dtw_distance(&y, &x).unwrap();
            prop_assert!(xy >= 0.0);
            prop_assert!((xy - yx).abs() <= 1e-12);
        }
    }

    #[test]
    fn threshold_two_trajectories_is_their_distance() {
        let a = seq(&[0.0, 1.0]);
        let b = seq(&[2.0, 3.0]);
        let expect = dtw_distance(&a, &b).unwrap();
        assert_eq!(compute_threshold(&[a, b]).unwrap(), expect);
    }

    #[test]
    fn threshold_three_known_distances() {
        // Singleton scalar sequences: pairwise distances |0-1|=1, |1-3|=2,
        // |0-3|=3, mean 2.
        let corpus = vec![seq(&[0.0]), seq(&[1.0]), seq(&[3.0])];
        let report = compute_threshold_report(&corpus).unwrap();
        assert_eq!(report.pairs_evaluated, 3);
        assert!((report.threshold - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn threshold_m5_matches_direct_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let corpus: Vec<FeatureSeq> = (0..5).map(|_| random_seq(&mut rng, 6, 2)).collect();
        let report = compute_threshold_report(&corpus).unwrap();
        assert_eq!(report.pairs_evaluated, 10);

        let mut total = 0.0;
        let mut count = 0;
        for i in 0..5 {
            for j in 0..5 {
                if i < j {
                    total += dtw_distance(&corpus[i], &corpus[j]).unwrap();
                    count += 1;
                }
            }
        }
        assert_eq!(count, 10);
        assert!((report.threshold - total / 10.0).abs() <= 1e-12);
    }

    #[test]
    fn threshold_needs_two() {
        let err = compute_threshold(&[seq(&[0.0])]).unwrap_err();
        assert!(matches!(err, Error::InsufficientCorpus { got: 1 }));
    }

    #[test]
    fn gate_prefix_identical_continues() {
        let e1 = seq(&[0.0, 1.0, 2.0, 3.0]);
        let e2 = seq(&[10.0, 11.0, 12.0, 13.0]);
        let monitor =
            TerminationMonitor::new(vec![e1, e2], 4, ComparisonMode::PrefixMatch).unwrap();
        let partial = seq(&[0.0, 1.0]);
        let out = monitor.gate_rollout(&partial).unwrap();
        assert_eq!(out.min_distance, 0.0);
        assert_eq!(out.decision, GateDecision::Continue);
    }

    #[test]
    fn gate_tie_continues() {
        // Corpus distance to the partial exactly equals the threshold; the
        // comparison is strict, so ties continue.
        let e1 = seq(&[0.0]);
        let e2 = seq(&[2.0]);
        // s_th = |0-2| = 2; partial [4] has min distance min(4, 2) = 2.
        let monitor =
            TerminationMonitor::new(vec![e1, e2], 2, ComparisonMode::PrefixMatch).unwrap();
        assert_eq!(monitor.threshold(), 2.0);
        let out = monitor.gate_rollout(&seq(&[4.0])).unwrap();
        assert_eq!(out.min_distance, 2.0);
        assert_eq!(out.decision, GateDecision::Continue);
    }

    #[test]
    fn gate_far_rollout_discards() {
        let e1 = seq(&[0.0, 0.0]);
        let e2 = seq(&[1.0, 1.0]);
        let monitor =
            TerminationMonitor::new(vec![e1.clone(), e2.clone()], 4, ComparisonMode::PrefixMatch)
                .unwrap();
        let partial = seq(&[50.0, 50.0]);
        // Hand-computed: dtw to e1 prefix = 100, to e2 prefix = 98; min 98 > s_th.
        let out = monitor.gate_rollout(&partial).unwrap();
        assert!((out.min_distance - 98.0).abs() <= 1e-12);
        assert_eq!(out.decision, GateDecision::TerminateAndDiscard);
    }

    #[test]
    fn full_expert_mode_compares_whole_trajectories() {
        let e1 = seq(&[0.0, 1.0, 2.0, 3.0]);
        let e2 = seq(&[0.0, 1.0, 2.0, 4.0]);
        let monitor =
            TerminationMonitor::new(vec![e1.clone(), e2], 4, ComparisonMode::FullExpert).unwrap();
        let partial = seq(&[0.0, 1.0]);
        let expect = dtw_distance(&partial, &e1).unwrap();
        let out = monitor.gate_rollout(&partial).unwrap();
        assert!((out.min_distance - expect).abs() <= 1e-12);
    }

    #[test]
    fn gate_step_is_half_rounded_up() {
        let corpus = vec![seq(&[0.0]), seq(&[1.0])];
        let m = TerminationMonitor::new(corpus.clone(), 50, ComparisonMode::PrefixMatch).unwrap();
        assert_eq!(m.gate_step(), 25);
        let m = TerminationMonitor::new(corpus, 5, ComparisonMode::PrefixMatch).unwrap();
        assert_eq!(m.gate_step(), 3);
    }
}
