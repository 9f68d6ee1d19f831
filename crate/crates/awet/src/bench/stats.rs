//! Paired Wilcoxon signed-rank test with an exact small-sample mode and a
//! tie-corrected normal approximation for larger samples.

use crate::error::{Error, Result};

/// Which p-value computation was (or should be) used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    /// Exact distribution of the positive-rank sum over all `2^n` sign
    /// assignments; used automatically for `n <= 20`.
    Exact,
    /// Normal approximation with tie-corrected variance and a 0.5 continuity
    /// correction.
    NormalApprox,
}

#[derive(Debug, Clone, Copy)]
pub struct WilcoxonResult {
    /// Pairs remaining after zero differences are dropped.
    pub n_effective: usize,
    /// Sum of ranks of positive differences (the test statistic).
    pub w_plus: f64,
    pub w_minus: f64,
    /// P(W+ >= observed) under H0: the one-sided "a > b" alternative.
    pub p_one_sided: f64,
    /// Doubled smaller tail, capped at 1.
    pub p_two_sided: f64,
    pub method: WilcoxonMethod,
}

/// Paired test of `a` against `b`. Zero differences are dropped before
/// ranking; ties in `|difference|` receive mid-ranks. Exact enumeration is
/// used up to `n = 20`, the normal approximation beyond.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let n_raw = paired_diffs(a, b)?.len();
    let method = if n_raw <= 20 {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::NormalApprox
    };
    wilcoxon_signed_rank_with(a, b, method)
}

/// Like [`wilcoxon_signed_rank`] but with the method forced, so the two code
/// paths can be cross-validated against each other.
pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    method: WilcoxonMethod,
) -> Result<WilcoxonResult> {
    let diffs = paired_diffs(a, b)?;
    let n = diffs.len();

    // Mid-ranks of |d|.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mid;
        }
        i = j + 1;
    }

    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total = n as f64 * (n as f64 + 1.0) / 2.0;
    let w_minus = total - w_plus;

    let (p_one, p_two) = match method {
        WilcoxonMethod::Exact => exact_p(&ranks, w_plus),
        WilcoxonMethod::NormalApprox => approx_p(&ranks, w_plus),
    };

    Ok(WilcoxonResult {
        n_effective: n,
        w_plus,
        w_minus,
        p_one_sided: p_one,
        p_two_sided: p_two,
        method,
    })
}

fn paired_diffs(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::rejected(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::UndefinedTest);
    }
    Ok(diffs)
}

/// Exact tail probabilities of the positive-rank sum. Mid-ranks are multiples
/// of 1/2, so doubling them gives integers and the distribution over all
/// `2^n` sign assignments is a polynomial convolution, evaluated exactly.
fn exact_p(ranks: &[f64], w_plus: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max_sum + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in &doubled {
        reach += r;
        for s in (r..=reach).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total: f64 = counts.iter().sum(); // 2^n
    let w2 = (2.0 * w_plus).round() as usize;
    let upper: f64 = counts[w2..].iter().sum::<f64>() / total;
    let lower: f64 = counts[..=w2].iter().sum::<f64>() / total;
    (upper, (2.0 * upper.min(lower)).min(1.0))
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
fn approx_p(ranks: &[f64], w_plus: f64) -> (f64, f64) {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;

    // Tie correction: group equal ranks and subtract sum(t^3 - t)/48.
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();

    let z_upper = (w_plus - 0.5 - mean) / sd;
    let p_upper = 1.0 - normal_cdf(z_upper);
    let z_lower = (w_plus + 0.5 - mean) / sd;
    let p_lower = normal_cdf(z_lower);
    (p_upper, (2.0 * p_upper.min(p_lower)).min(1.0))
}

/// Standard normal CDF via an Abramowitz-Stegun style erf approximation
/// (absolute error below 1.5e-7, far tighter than the comparisons need).
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}
