//! Plackett-Luce distributions from ranking labels.
//!
//! Annotators rank a fixed set of classes from most to least suitable; this
//! crate turns such rankings into probability distributions over the classes
//! and back.
//!
//! * [`pl`]: exact permutation probabilities, log-likelihood, the listwise
//!   loss and its score-space gradient.
//! * [`estimation`]: maximum-likelihood fitting of one distribution from a
//!   bag of rankings, and sampling rankings from a distribution.
//! * [`ranker`]: linear and one-hidden-layer predictors of a distribution
//!   from a feature vector, trained with the listwise loss.
//! * [`metrics`]: average overlap, Kendall's tau, multi-reference evaluation
//!   and entropy.
//! * [`synth`]: synthetic multi-annotator datasets and object-level splits.
//! * [`io`]: the line-oriented dataset, prediction and model file formats.
//!
//! ```
//! use plrank::pl::{permutation_probability, Ranking, WeightVector};
//!
//! let w = WeightVector::new(vec![0.5, 0.3, 0.2]).unwrap();
//! let p = permutation_probability(&w, &Ranking::new(vec![0, 1, 2]).unwrap()).unwrap();
//! assert!((p - 0.3).abs() < 1e-15);
//! ```

pub mod error;
pub mod estimation;
pub mod io;
pub mod metrics;
pub mod pl;
pub mod ranker;
pub mod synth;

pub use error::{Error, Result};
pub use pl::{ClassIndex, Ranking, ScoreVector, WeightVector};

/// The random number generator used throughout: ChaCha with 8 rounds, whose
/// output stream is fixed for a given seed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// A [`Rng`] seeded from a 64-bit value.
pub fn seeded_rng(seed: u64) -> Rng {
    <Rng as rand::SeedableRng>::seed_from_u64(seed)
}

/// The five grasp types used as default class labels.
pub const GRASP_LABELS: [&str; 5] = [
    "OpenPalm",
    "MediumWrap",
    "PowerSphere",
    "ParallelExtension",
    "PalmarPinch",
];

/// Default label names for `n` classes: the grasp types when `n = 5`,
/// otherwise `class0`, `class1`, ….
pub fn default_labels(n: usize) -> Vec<String> {
    if n == GRASP_LABELS.len() {
        GRASP_LABELS.iter().map(|s| s.to_string()).collect()
    } else {
        (0..n).map(|i| format!("class{i}")).collect()
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/plackett-luce.md")]
    pub mod plackett_luce {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    pub mod fitting {}
    #[doc = include_str!("../../../book/src/training.md")]
    pub mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/synthetic-data.md")]
    pub mod synthetic_data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
