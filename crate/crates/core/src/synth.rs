//! Synthetic multi-annotator ranking data.
//!
//! The generator mimics a labelling campaign: a set of objects, each viewed
//! from several orientations, is shown to a panel of labellers who each rank
//! the classes. Underneath sits a true linear score map, so the per-instance
//! ground-truth distribution is known and recovery can be tested.
//!
//! Draws happen in this fixed order from one ChaCha8 stream seeded with
//! `seed`:
//!
//! 1. the true map: `W*` row by row (`N(0, 1) · score_scale / √input_dim`),
//!    then `b*` (`N(0, 1) · bias_spread`);
//! 2. per labeller: temperature `τ ~ U[lo, hi]`, then the offset vector
//!    `δ ~ N(0, 1)^n · labeller_bias_scale`;
//! 3. per object: archetype `a ~ N(0, 1)^d`, then complexity `c ~ U[0, 2)`;
//!    per orientation of that object: perturbation `N(0, 1)^d ·
//!    orientation_spread`, noise `N(0, 1)^d · feature_noise`, and per labeller
//!    a coverage draw `u ~ U[0, 1)` followed, if `u < labeller_coverage`, by
//!    one ranking sampled from `softmax(θ*/τ + c·δ)`.
//!
//! The complexity factor scales how much labellers' personal offsets matter
//! for a given object, so some objects get near-unanimous labels and others
//! dispersed ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::sample_ranking;
use crate::pl::{softmax_slice, Ranking, WeightVector};
use crate::seeded_rng;

/// Fraction of (view, labeller) pairs that receive a ranking by default: 4466 of 413 × 11.
pub const DEFAULT_COVERAGE: f64 = 4466.0 / (413.0 * 11.0);

/// One ranking label for one view of one object, with its features.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledInstance {
    pub object_id: String,
    pub orientation_id: String,
    pub labeller_id: String,
    pub features: Vec<f64>,
    pub ranking: Ranking,
}

impl LabelledInstance {
    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            object_id: self.object_id.clone(),
            orientation_id: self.orientation_id.clone(),
        }
    }
}

/// Identifies one view: an object in one orientation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceKey {
    pub object_id: String,
    pub orientation_id: String,
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.object_id, self.orientation_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_classes: usize,
    pub input_dim: usize,
    pub n_objects: usize,
    pub orientations_per_object: usize,
    pub n_labellers: usize,
    /// Probability that a labeller labels a given view.
    pub labeller_coverage: f64,
    pub labeller_temperature_range: [f64; 2],
    pub labeller_bias_scale: f64,
    pub feature_noise: f64,
    /// Spread of orientation perturbations around an object's archetype.
    pub orientation_spread: f64,
    /// Overall magnitude of the true scores.
    pub score_scale: f64,
    /// Spread of the true per-class bias `b*`.
    pub bias_spread: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_classes: 5,
            input_dim: 8,
            n_objects: 102,
            orientations_per_object: 4,
            n_labellers: 11,
            labeller_coverage: DEFAULT_COVERAGE,
            labeller_temperature_range: [0.8, 1.25],
            labeller_bias_scale: 0.1,
            feature_noise: 0.1,
            orientation_spread: 0.5,
            score_scale: 2.0,
            bias_spread: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Defaults with every labeller sharing the true distribution.
    pub fn low_noise() -> Self {
        SyntheticConfig {
            labeller_temperature_range: [1.0, 1.0],
            labeller_bias_scale: 0.0,
            ..SyntheticConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_classes", self.n_classes),
            ("input_dim", self.input_dim),
            ("n_objects", self.n_objects),
            ("orientations_per_object", self.orientations_per_object),
            ("n_labellers", self.n_labellers),
        ];
        for (field, v) in counts {
            if v < 1 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if !(self.labeller_coverage > 0.0 && self.labeller_coverage <= 1.0) {
            return Err(Error::config("labeller_coverage", "must lie in (0, 1]"));
        }
        let [lo, hi] = self.labeller_temperature_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::config(
                "labeller_temperature_range",
                "must satisfy 0 < lo <= hi",
            ));
        }
        let non_negative = [
            ("labeller_bias_scale", self.labeller_bias_scale),
            ("feature_noise", self.feature_noise),
            ("orientation_spread", self.orientation_spread),
            ("score_scale", self.score_scale),
            ("bias_spread", self.bias_spread),
        ];
        for (field, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabellerProfile {
    pub labeller_id: String,
    pub temperature: f64,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueInstance {
    pub object_id: String,
    pub orientation_id: String,
    pub complexity: f64,
    pub features: Vec<f64>,
    pub weights: Vec<f64>,
}

/// The latent truth behind a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `W*`, one row per class.
    pub weight_matrix: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub labellers: Vec<LabellerProfile>,
    pub instances: Vec<TrueInstance>,
}

impl GroundTruth {
    pub fn true_weights(&self, key: &InstanceKey) -> Option<WeightVector> {
        self.instances
            .iter()
            .find(|t| t.object_id == key.object_id && t.orientation_id == key.orientation_id)
            .and_then(|t| WeightVector::new(t.weights.clone()).ok())
    }
}

fn normal_vec<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect()
}

pub fn object_id(index: usize) -> String {
    format!("obj{index:03}")
}

pub fn labeller_id(index: usize) -> String {
    format!("L{index:02}")
}

/// Generates labelled rankings and the ground truth that produced them.
pub fn generate_dataset(config: &SyntheticConfig) -> Result<(Vec<LabelledInstance>, GroundTruth)> {
    config.validate()?;
    let n = config.n_classes;
    let d = config.input_dim;
    let mut rng = seeded_rng(config.seed);

    let row_scale = config.score_scale / (d as f64).sqrt();
    let weight_matrix: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(&mut rng, d, row_scale)).collect();
    let bias = normal_vec(&mut rng, n, config.bias_spread);

    let [lo, hi] = config.labeller_temperature_range;
    let labellers: Vec<LabellerProfile> = (0..config.n_labellers)
        .map(|l| {
            let u: f64 = rng.random();
            LabellerProfile {
                labeller_id: labeller_id(l),
                temperature: lo + u * (hi - lo),
                offset: normal_vec(&mut rng, n, config.labeller_bias_scale),
            }
        })
        .collect();

    let mut records = Vec::new();
    let mut truths = Vec::new();
    let mut theta = vec![0.0; n];
    for o in 0..config.n_objects {
        let archetype = normal_vec(&mut rng, d, 1.0);
        let complexity: f64 = rng.random::<f64>() * 2.0;
        for orientation in 0..config.orientations_per_object {
            let spread = normal_vec(&mut rng, d, config.orientation_spread);
            let noise = normal_vec(&mut rng, d, config.feature_noise);
            let features: Vec<f64> = (0..d)
                .map(|k| archetype[k] + spread[k] + noise[k])
                .collect();
            let true_scores: Vec<f64> = weight_matrix
                .iter()
                .zip(&bias)
                .map(|(row, b)| b + row.iter().zip(&features).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            let truth = TrueInstance {
                object_id: object_id(o),
                orientation_id: orientation.to_string(),
                complexity,
                features: features.clone(),
                weights: softmax_slice(&true_scores),
            };
            for profile in &labellers {
                let u: f64 = rng.random();
                if u >= config.labeller_coverage {
                    continue;
                }
                for (t, (s, delta)) in theta
                    .iter_mut()
                    .zip(true_scores.iter().zip(&profile.offset))
                {
                    *t = s / profile.temperature + complexity * delta;
                }
                let weights = WeightVector::normalized(&softmax_slice(&theta))?;
                records.push(LabelledInstance {
                    object_id: truth.object_id.clone(),
                    orientation_id: truth.orientation_id.clone(),
                    labeller_id: profile.labeller_id.clone(),
                    features: features.clone(),
                    ranking: sample_ranking(&weights, &mut rng),
                });
            }
            truths.push(truth);
        }
    }
    Ok((
        records,
        GroundTruth {
            weight_matrix,
            bias,
            labellers,
            instances: truths,
        },
    ))
}

/// Distinct object ids in order of first appearance.
pub fn object_ids(dataset: &[LabelledInstance]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    dataset
        .iter()
        .filter(|r| seen.insert(r.object_id.as_str()))
        .map(|r| r.object_id.clone())
        .collect()
}

/// Partitions whole objects into a train and a test side.
///
/// `round(train_fraction · objects)` objects, clamped so each side keeps at
/// least one, are chosen by a seeded shuffle; records keep their original
/// order within each side.
pub fn split_by_object(
    dataset: &[LabelledInstance],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabelledInstance>, Vec<LabelledInstance>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config("train_fraction", "must lie in (0, 1)"));
    }
    let mut objects = object_ids(dataset);
    if objects.len() < 2 {
        return Err(Error::TooFewObjects {
            needed: 2,
            found: objects.len(),
        });
    }
    objects.shuffle(&mut seeded_rng(seed));
    let n_train =
        ((train_fraction * objects.len() as f64).round() as usize).clamp(1, objects.len() - 1);
    let train_objects: BTreeSet<&str> = objects[..n_train].iter().map(String::as_str).collect();
    let (train, test) = dataset
        .iter()
        .cloned()
        .partition(|r| train_objects.contains(r.object_id.as_str()));
    Ok((train, test))
}

/// All reference rankings of each instance, in record order.
pub fn group_references(dataset: &[LabelledInstance]) -> BTreeMap<InstanceKey, Vec<Ranking>> {
    let mut refs: BTreeMap<InstanceKey, Vec<Ranking>> = BTreeMap::new();
    for r in dataset {
        refs.entry(r.key()).or_default().push(r.ranking.clone());
    }
    refs
}
