//! Comparing rankings and summarizing predicted distributions.
//!
//! [`average_overlap`] is the headline accuracy: at every depth `i` it takes
//! the fraction of classes shared by the two top-`i` prefixes and averages
//! those fractions over all depths. Agreement near the top counts towards
//! every deeper prefix, so the measure is top-weighted, unlike
//! [`kendall_tau`], which treats every pair of classes alike.

use std::collections::BTreeMap;
use std::fmt::Display;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pl::{all_rankings, Ranking, WeightVector};

/// Largest `n` accepted by [`expected_random_overlap`].
pub const MAX_ENUMERATED_CLASSES: usize = 8;

fn same_len(a: &Ranking, b: &Ranking) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.len())
}

/// Mean over depths `i = 1..=n` of `|top_i(a) ∩ top_i(b)| / i`.
pub fn average_overlap(predicted: &Ranking, reference: &Ranking) -> Result<f64> {
    let n = same_len(predicted, reference)?;
    let mut in_a = vec![false; n];
    let mut in_b = vec![false; n];
    let mut shared = 0usize;
    let mut total = 0.0;
    for depth in 0..n {
        let x = predicted.at(depth);
        let y = reference.at(depth);
        in_a[x] = true;
        if in_b[x] {
            shared += 1;
        }
        // `in_a` already holds x, so x == y is counted exactly once here.
        in_b[y] = true;
        if in_a[y] {
            shared += 1;
        }
        total += shared as f64 / (depth + 1) as f64;
    }
    Ok(total / n as f64)
}

/// Kendall's tau-a between two full rankings.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<f64> {
    let n = same_len(a, b)?;
    if n < 2 {
        return Err(Error::InvalidRanking(
            "Kendall's tau needs at least two classes".into(),
        ));
    }
    let pa = a.positions();
    let pb = b.positions();
    let mut score = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let da = pa[i] < pa[j];
            let db = pb[i] < pb[j];
            score += if da == db { 1 } else { -1 };
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn distribution_entropy(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum::<f64>()
}

/// Mean [`average_overlap`] between a fixed ranking and every permutation of
/// `n` classes, by enumeration. Equals `(n + 1) / (2n)`.
pub fn expected_random_overlap(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::config("n", "must be at least 1"));
    }
    if n > MAX_ENUMERATED_CLASSES {
        return Err(Error::TooManyClasses {
            what: "expected_random_overlap",
            n,
            max: MAX_ENUMERATED_CLASSES,
        });
    }
    let fixed = Ranking::identity(n);
    let perms = all_rankings(n);
    let mut total = 0.0;
    for p in &perms {
        total += average_overlap(&fixed, p)?;
    }
    Ok(total / perms.len() as f64)
}

/// How reference rankings are weighted when an instance has several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingMode {
    /// Every (instance, reference) pair counts once.
    #[default]
    Pair,
    /// Each instance's references are averaged first, then instances are averaged.
    Instance,
}

impl std::str::FromStr for AveragingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair" => Ok(AveragingMode::Pair),
            "instance" => Ok(AveragingMode::Instance),
            other => Err(Error::config("mode", format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub mode: AveragingMode,
    pub mean_overlap_accuracy: f64,
    pub n_instances: usize,
    pub n_pairs: usize,
    pub mean_kendall_tau: Option<f64>,
    pub mean_entropy: Option<f64>,
    /// One accuracy per pair (pair mode) or per instance (instance mode), in
    /// key order.
    #[serde(skip)]
    pub accuracies: Vec<f64>,
}

impl EvaluationReport {
    /// Records the mean entropy of the predicted distributions.
    pub fn with_entropy<'a>(mut self, weights: impl IntoIterator<Item = &'a WeightVector>) -> Self {
        let values: Vec<f64> = weights
            .into_iter()
            .map(|w| distribution_entropy(w.as_slice()))
            .collect();
        self.mean_entropy = (!values.is_empty()).then(|| mean(&values));
        self
    }

    /// Pretty-printed JSON with the fixed field names.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Scores predictions against every reference ranking of the same instance.
///
/// Instances are visited in key order, so the result does not depend on how
/// the maps were built.
pub fn evaluate<K: Ord + Display>(
    predictions: &BTreeMap<K, Ranking>,
    references: &BTreeMap<K, Vec<Ranking>>,
    mode: AveragingMode,
) -> Result<EvaluationReport> {
    let mut accuracies = Vec::new();
    let mut taus = Vec::new();
    let mut n_pairs = 0;
    let mut tau_defined = true;
    for (key, predicted) in predictions {
        let refs = references
            .get(key)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| Error::MissingReferences(key.to_string()))?;
        tau_defined &= predicted.len() >= 2;
        let mut acc = Vec::with_capacity(refs.len());
        let mut tau = Vec::with_capacity(refs.len());
        for r in refs {
            acc.push(average_overlap(predicted, r)?);
            if tau_defined {
                tau.push(kendall_tau(predicted, r)?);
            }
        }
        n_pairs += refs.len();
        match mode {
            AveragingMode::Pair => {
                accuracies.extend(acc);
                taus.extend(tau);
            }
            AveragingMode::Instance => {
                accuracies.push(mean(&acc));
                if tau_defined {
                    taus.push(mean(&tau));
                }
            }
        }
    }
    if accuracies.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(EvaluationReport {
        mode,
        mean_overlap_accuracy: mean(&accuracies),
        n_instances: predictions.len(),
        n_pairs,
        mean_kendall_tau: tau_defined.then(|| mean(&taus)),
        mean_entropy: None,
        accuracies,
    })
}
