//! The Plackett-Luce model over permutations of `n` classes.
//!
//! A [`WeightVector`] `ω` on the probability simplex assigns each ranking `π`
//! (most preferred first) the probability
//!
//! ```text
//! P(π | ω) = ∏_{i=1}^{n-1}  ω_{π(i)} / Σ_{j=i}^{n} ω_{π(j)}
//! ```
//!
//! i.e. classes are drawn one at a time, without replacement, each with
//! probability proportional to its weight among the classes still remaining.
//! The final position is forced and contributes a factor of one.
//!
//! Learned predictors work with unconstrained [`ScoreVector`]s and map them to
//! the simplex with [`softmax`]; [`score_loss`] and [`loss_gradient_scores`]
//! evaluate the negative log-likelihood and its gradient directly in score
//! space.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Index of a class, `0..n`.
pub type ClassIndex = usize;

/// Tolerance on `Σ ω_i = 1` accepted by [`WeightVector::new`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A full ranking of `n` classes, position 0 being the most preferred.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranking {
    order: Vec<ClassIndex>,
}

impl Ranking {
    /// Builds a ranking, checking that `order` is a permutation of `0..order.len()`.
    pub fn new(order: Vec<ClassIndex>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::InvalidRanking("ranking is empty".into()));
        }
        let mut seen = vec![false; n];
        for &c in &order {
            if c >= n {
                return Err(Error::InvalidRanking(format!(
                    "class {c} out of range for {n} classes"
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidRanking(format!("class {c} appears twice")));
            }
        }
        Ok(Ranking { order })
    }

    /// `(0, 1, …, n-1)`.
    pub fn identity(n: usize) -> Self {
        Ranking {
            order: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn as_slice(&self) -> &[ClassIndex] {
        &self.order
    }

    pub fn into_vec(self) -> Vec<ClassIndex> {
        self.order
    }

    /// The class ranked at `position` (0 = top).
    pub fn at(&self, position: usize) -> ClassIndex {
        self.order[position]
    }

    /// `positions()[c]` is the position of class `c`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &c) in self.order.iter().enumerate() {
            pos[c] = p;
        }
        pos
    }

    /// The reversed ranking.
    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        Ranking { order }
    }

    fn expect_len(&self, n: usize) -> Result<()> {
        if self.order.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: self.order.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<ClassIndex>> for Ranking {
    type Error = Error;

    fn try_from(order: Vec<ClassIndex>) -> Result<Self> {
        Ranking::new(order)
    }
}

/// All `n!` rankings of `n` classes in lexicographic order.
pub fn all_rankings(n: usize) -> Vec<Ranking> {
    let mut current: Vec<ClassIndex> = (0..n).collect();
    let mut out = vec![Ranking {
        order: current.clone(),
    }];
    while next_permutation(&mut current) {
        out.push(Ranking {
            order: current.clone(),
        });
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A point in the interior of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    /// Accepts weights that are all finite and strictly positive and sum to one
    /// within [`SIMPLEX_TOLERANCE`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "weight {i} is {w}; weights must be finite and strictly positive"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(WeightVector { weights })
    }

    /// Divides positive weights by their sum.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        for (i, &w) in raw.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "weight {i} is {w}; weights must be finite and strictly positive"
                )));
            }
        }
        let sum: f64 = raw.iter().sum();
        if !sum.is_finite() {
            return Err(Error::InvalidWeights("weights overflow when summed".into()));
        }
        WeightVector::new(raw.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "a weight vector needs at least one class");
        WeightVector {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &WeightVector) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<ClassIndex> for WeightVector {
    type Output = f64;

    fn index(&self, i: ClassIndex) -> &f64 {
        &self.weights[i]
    }
}

/// Unconstrained class scores (logits).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidWeights("no scores".into()));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteScore(i));
        }
        Ok(ScoreVector { scores })
    }

    pub fn zeros(n: usize) -> Self {
        ScoreVector {
            scores: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }
}

fn check_weights(weights: &WeightVector, ranking: &Ranking) -> Result<()> {
    ranking.expect_len(weights.len())
}

/// Probability of `ranking` under the Plackett-Luce model with `weights`.
///
/// For a single class the product is empty and the probability is one.
pub fn permutation_probability(weights: &WeightVector, ranking: &Ranking) -> Result<f64> {
    check_weights(weights, ranking)?;
    let w = weights.as_slice();
    let order = ranking.as_slice();
    let mut remaining: f64 = order.iter().map(|&c| w[c]).sum();
    let mut p = 1.0;
    for &c in &order[..order.len() - 1] {
        p *= w[c] / remaining;
        remaining -= w[c];
    }
    Ok(p)
}

/// Log-probability of one ranking, evaluated term by term in the log domain.
pub(crate) fn ranking_log_probability(w: &[f64], order: &[ClassIndex]) -> f64 {
    let mut total = CompensatedSum::default();
    add_ranking_log_probability(w, order, &mut total);
    total.value()
}

pub(crate) fn add_ranking_log_probability(
    w: &[f64],
    order: &[ClassIndex],
    total: &mut CompensatedSum,
) {
    // Suffix sums are accumulated from the tail so that small trailing
    // weights are not lost to cancellation.
    let n = order.len();
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        suffix += w[order[i]];
        if i + 1 < n {
            total.add(w[order[i]].ln());
            total.add(-suffix.ln());
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sum over `rankings` of the log of [`permutation_probability`].
///
/// An empty set of rankings has log-likelihood zero.
pub fn log_likelihood(weights: &WeightVector, rankings: &[Ranking]) -> Result<f64> {
    let w = weights.as_slice();
    let mut total = CompensatedSum::default();
    for r in rankings {
        check_weights(weights, r)?;
        add_ranking_log_probability(w, r.as_slice(), &mut total);
    }
    Ok(total.value())
}

/// Negative log-likelihood, the listwise ranking loss.
pub fn pl_loss(weights: &WeightVector, rankings: &[Ranking]) -> Result<f64> {
    Ok(-log_likelihood(weights, rankings)?)
}

/// Overflow-safe softmax. Every output is at least `f64::MIN_POSITIVE` before
/// renormalization, so the result is always a valid [`WeightVector`].
pub fn softmax(scores: &ScoreVector) -> WeightVector {
    WeightVector {
        weights: softmax_slice(scores.as_slice()),
    }
}

pub(crate) fn softmax_slice(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores
        .iter()
        .map(|s| (s - max).exp().max(f64::MIN_POSITIVE))
        .collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Class indices sorted by weight, largest first; equal weights keep
/// ascending class order.
pub fn rank_from_weights(weights: &WeightVector) -> Ranking {
    rank_from_values(weights.as_slice())
}

pub(crate) fn rank_from_values(values: &[f64]) -> Ranking {
    let mut order: Vec<ClassIndex> = (0..values.len()).collect();
    // Stable sort keeps ascending index order among ties.
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    Ranking { order }
}

/// `pl_loss(softmax(scores), [ranking])` computed with log-sum-exp in score space.
pub fn score_loss(scores: &ScoreVector, ranking: &Ranking) -> Result<f64> {
    ranking.expect_len(scores.len())?;
    Ok(score_loss_unchecked(scores.as_slice(), ranking.as_slice()))
}

pub(crate) fn score_loss_unchecked(theta: &[f64], order: &[ClassIndex]) -> f64 {
    let n = order.len();
    let mut loss = 0.0;
    for i in 0..n.saturating_sub(1) {
        loss -= theta[order[i]] - log_sum_exp(order[i..].iter().map(|&c| theta[c]));
    }
    loss
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Gradient of [`score_loss`] with respect to each score.
///
/// Each choice event `i` contributes the softmax of the remaining candidates
/// minus the indicator of the chosen class, so the components always sum to
/// zero.
pub fn loss_gradient_scores(scores: &ScoreVector, ranking: &Ranking) -> Result<Vec<f64>> {
    ranking.expect_len(scores.len())?;
    let mut grad = vec![0.0; scores.len()];
    accumulate_score_gradient(scores.as_slice(), ranking.as_slice(), 1.0, &mut grad);
    Ok(grad)
}

/// Adds `scale · ∂loss/∂θ` into `grad`; returns the loss.
pub(crate) fn accumulate_score_gradient(
    theta: &[f64],
    order: &[ClassIndex],
    scale: f64,
    grad: &mut [f64],
) -> f64 {
    let n = order.len();
    let mut loss = 0.0;
    let mut probs = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let candidates = &order[i..];
        let max = candidates
            .iter()
            .map(|&c| theta[c])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (k, &c) in candidates.iter().enumerate() {
            probs[k] = (theta[c] - max).exp();
            sum += probs[k];
        }
        loss -= theta[order[i]] - (max + sum.ln());
        for (k, &c) in candidates.iter().enumerate() {
            grad[c] += scale * probs[k] / sum;
        }
        grad[order[i]] -= scale;
    }
    loss
}
