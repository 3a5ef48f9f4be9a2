//! Feature-conditioned distribution predictors trained with the listwise
//! Plackett-Luce loss.
//!
//! A [`RankerModel`] maps a feature vector to class scores, and the softmax of
//! those scores is the predicted [`WeightVector`]. Two architectures exist:
//!
//! * `linear`: `θ = W·x + b`
//! * `mlp1`: `θ = W2·relu(W1·x + b1) + b2`
//!
//! Parameters live in one flat vector, layer by layer, each layer's weight
//! matrix (row-major, one row per output unit) followed by its bias vector:
//!
//! ```text
//! linear: W[n_classes × input_dim] | b[n_classes]
//! mlp1:   W1[hidden × input_dim] | b1[hidden] | W2[n_classes × hidden] | b2[n_classes]
//! ```
//!
//! Training minimizes, per instance, the negative log-likelihood of its
//! ranking plus `l2_lambda · ‖W‖²` over the weight matrices (biases are not
//! penalized), with plain mini-batch SGD.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::{evaluate, AveragingMode, EvaluationReport};
use crate::pl::{self, rank_from_weights, Ranking, ScoreVector, WeightVector};
use crate::seeded_rng;
use crate::synth::{InstanceKey, LabelledInstance};

/// Floor on the denominator of the relative error in [`gradient_check`].
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Linear,
    Mlp1,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Linear => "linear",
            Architecture::Mlp1 => "mlp1",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Architecture::Linear),
            "mlp1" => Ok(Architecture::Mlp1),
            other => Err(Error::config(
                "architecture",
                format!("unknown architecture `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankerModel {
    architecture: Architecture,
    input_dim: usize,
    hidden_dim: usize,
    n_classes: usize,
    parameters: Vec<f64>,
}

/// Number of parameters for the given shape.
pub fn parameter_count(
    architecture: Architecture,
    input_dim: usize,
    hidden_dim: usize,
    n_classes: usize,
) -> usize {
    match architecture {
        Architecture::Linear => (input_dim + 1) * n_classes,
        Architecture::Mlp1 => (input_dim + 1) * hidden_dim + (hidden_dim + 1) * n_classes,
    }
}

fn check_dims(
    architecture: Architecture,
    input_dim: usize,
    hidden_dim: usize,
    n_classes: usize,
) -> Result<()> {
    if input_dim == 0 {
        return Err(Error::config("input_dim", "must be at least 1"));
    }
    if n_classes == 0 {
        return Err(Error::config("n_classes", "must be at least 1"));
    }
    if architecture == Architecture::Mlp1 && hidden_dim == 0 {
        return Err(Error::config("hidden_dim", "must be at least 1 for mlp1"));
    }
    Ok(())
}

/// Parameters drawn i.i.d. uniform in `[-init_scale, init_scale]`.
pub fn init_model(
    architecture: Architecture,
    input_dim: usize,
    hidden_dim: usize,
    n_classes: usize,
    seed: u64,
    init_scale: f64,
) -> Result<RankerModel> {
    check_dims(architecture, input_dim, hidden_dim, n_classes)?;
    if !(init_scale.is_finite() && init_scale >= 0.0) {
        return Err(Error::config(
            "init_scale",
            "must be finite and non-negative",
        ));
    }
    let hidden_dim = if architecture == Architecture::Linear {
        0
    } else {
        hidden_dim
    };
    let count = parameter_count(architecture, input_dim, hidden_dim, n_classes);
    let parameters = if init_scale == 0.0 {
        vec![0.0; count]
    } else {
        let mut rng = seeded_rng(seed);
        (0..count)
            .map(|_| rng.random_range(-init_scale..=init_scale))
            .collect()
    };
    Ok(RankerModel {
        architecture,
        input_dim,
        hidden_dim,
        n_classes,
        parameters,
    })
}

impl RankerModel {
    /// Wraps an existing flat parameter vector in the documented layout.
    pub fn from_parameters(
        architecture: Architecture,
        input_dim: usize,
        hidden_dim: usize,
        n_classes: usize,
        parameters: Vec<f64>,
    ) -> Result<Self> {
        check_dims(architecture, input_dim, hidden_dim, n_classes)?;
        let hidden_dim = if architecture == Architecture::Linear {
            0
        } else {
            hidden_dim
        };
        let expected = parameter_count(architecture, input_dim, hidden_dim, n_classes);
        if parameters.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: parameters.len(),
            });
        }
        if parameters.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("parameters", "all parameters must be finite"));
        }
        Ok(RankerModel {
            architecture,
            input_dim,
            hidden_dim,
            n_classes,
            parameters,
        })
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Zero for linear models.
    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn parameters(&self) -> &[f64] {
        &self.parameters
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.parameters
    }

    /// `true` for entries belonging to a weight matrix, `false` for biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.parameters.len());
        for (rows, cols) in self.layer_shapes() {
            mask.extend(std::iter::repeat_n(true, rows * cols));
            mask.extend(std::iter::repeat_n(false, rows));
        }
        mask
    }

    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        match self.architecture {
            Architecture::Linear => vec![(self.n_classes, self.input_dim)],
            Architecture::Mlp1 => vec![
                (self.hidden_dim, self.input_dim),
                (self.n_classes, self.hidden_dim),
            ],
        }
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: features.len(),
            });
        }
        Ok(())
    }

    /// Class scores for `features`.
    pub fn logits(&self, features: &[f64]) -> Result<ScoreVector> {
        self.check_features(features)?;
        let mut cache = ForwardCache::default();
        self.forward_into(features, &mut cache);
        ScoreVector::new(cache.logits)
    }

    fn forward_into(&self, x: &[f64], cache: &mut ForwardCache) {
        let p = &self.parameters;
        match self.architecture {
            Architecture::Linear => {
                affine(p, self.n_classes, self.input_dim, x, &mut cache.logits);
            }
            Architecture::Mlp1 => {
                let w1 = self.hidden_dim * self.input_dim + self.hidden_dim;
                affine(
                    &p[..w1],
                    self.hidden_dim,
                    self.input_dim,
                    x,
                    &mut cache.pre_activation,
                );
                cache.hidden.clear();
                cache
                    .hidden
                    .extend(cache.pre_activation.iter().map(|&z| z.max(0.0)));
                affine(
                    &p[w1..],
                    self.n_classes,
                    self.hidden_dim,
                    &cache.hidden,
                    &mut cache.logits,
                );
            }
        }
    }

    /// Adds `scale · ∂loss/∂parameters` into `grad` for one ranked instance and
    /// returns the ranking loss (without the L2 term).
    fn accumulate_gradient(
        &self,
        x: &[f64],
        ranking: &Ranking,
        scale: f64,
        cache: &mut ForwardCache,
        grad: &mut [f64],
    ) -> f64 {
        self.forward_into(x, cache);
        cache.score_grad.clear();
        cache.score_grad.resize(self.n_classes, 0.0);
        let loss = pl::accumulate_score_gradient(
            &cache.logits,
            ranking.as_slice(),
            1.0,
            &mut cache.score_grad,
        );
        match self.architecture {
            Architecture::Linear => {
                affine_backward(
                    grad,
                    self.n_classes,
                    self.input_dim,
                    x,
                    &cache.score_grad,
                    scale,
                );
            }
            Architecture::Mlp1 => {
                let w1 = self.hidden_dim * self.input_dim + self.hidden_dim;
                let (g1, g2) = grad.split_at_mut(w1);
                affine_backward(
                    g2,
                    self.n_classes,
                    self.hidden_dim,
                    &cache.hidden,
                    &cache.score_grad,
                    scale,
                );
                // Back through W2 and the relu.
                let w2 = &self.parameters[w1..];
                cache.hidden_grad.clear();
                cache.hidden_grad.resize(self.hidden_dim, 0.0);
                for (k, &g) in cache.score_grad.iter().enumerate() {
                    let row = &w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
                    for (h, &w) in cache.hidden_grad.iter_mut().zip(row) {
                        *h += g * w;
                    }
                }
                for (h, &z) in cache.hidden_grad.iter_mut().zip(&cache.pre_activation) {
                    if z <= 0.0 {
                        *h = 0.0;
                    }
                }
                affine_backward(
                    g1,
                    self.hidden_dim,
                    self.input_dim,
                    x,
                    &cache.hidden_grad,
                    scale,
                );
            }
        }
        loss
    }

    fn l2_penalty(&self, mask: &[bool]) -> f64 {
        self.parameters
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(p, _)| p * p)
            .sum()
    }
}

#[derive(Default)]
struct ForwardCache {
    pre_activation: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
    score_grad: Vec<f64>,
    hidden_grad: Vec<f64>,
}

/// `out = W·x + b` where `params` starts with `W[rows × cols]` then `b[rows]`.
fn affine(params: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let (w, b) = params.split_at(rows * cols);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        out.push(b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
    }
}

fn affine_backward(
    grad: &mut [f64],
    rows: usize,
    cols: usize,
    x: &[f64],
    upstream: &[f64],
    scale: f64,
) {
    let (gw, gb) = grad.split_at_mut(rows * cols);
    for r in 0..rows {
        let g = scale * upstream[r];
        for (gwi, &xi) in gw[r * cols..(r + 1) * cols].iter_mut().zip(x) {
            *gwi += g * xi;
        }
        gb[r] += g;
    }
}

/// The predicted distribution for `features`.
pub fn forward(model: &RankerModel, features: &[f64]) -> Result<WeightVector> {
    Ok(pl::softmax(&model.logits(features)?))
}

pub fn predict_distribution(model: &RankerModel, features: &[f64]) -> Result<WeightVector> {
    forward(model, features)
}

/// Classes ordered by predicted probability, ties by class index.
pub fn predict_ranking(model: &RankerModel, features: &[f64]) -> Result<Ranking> {
    Ok(rank_from_weights(&forward(model, features)?))
}

/// Ranking loss of one instance plus `l2_lambda · ‖W‖²`, and its gradient
/// with respect to every parameter.
pub fn parameter_gradient(
    model: &RankerModel,
    features: &[f64],
    ranking: &Ranking,
    l2_lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    model.check_features(features)?;
    check_ranking(model, ranking)?;
    let mask = model.weight_mask();
    let mut grad = vec![0.0; model.parameters.len()];
    let mut cache = ForwardCache::default();
    let loss = model.accumulate_gradient(features, ranking, 1.0, &mut cache, &mut grad);
    add_l2_gradient(&model.parameters, &mask, l2_lambda, &mut grad);
    Ok((loss + l2_lambda * model.l2_penalty(&mask), grad))
}

/// Full per-instance loss, including the L2 term.
pub fn instance_loss(
    model: &RankerModel,
    features: &[f64],
    ranking: &Ranking,
    l2_lambda: f64,
) -> Result<f64> {
    check_ranking(model, ranking)?;
    let theta = model.logits(features)?;
    Ok(pl::score_loss(&theta, ranking)? + l2_lambda * model.l2_penalty(&model.weight_mask()))
}

fn check_ranking(model: &RankerModel, ranking: &Ranking) -> Result<()> {
    if ranking.len() != model.n_classes {
        return Err(Error::LengthMismatch {
            expected: model.n_classes,
            found: ranking.len(),
        });
    }
    Ok(())
}

fn add_l2_gradient(params: &[f64], mask: &[bool], l2_lambda: f64, grad: &mut [f64]) {
    if l2_lambda == 0.0 {
        return;
    }
    for ((g, &p), &m) in grad.iter_mut().zip(params).zip(mask) {
        if m {
            *g += 2.0 * l2_lambda * p;
        }
    }
}

/// Largest relative error between the analytic parameter gradient of
/// [`instance_loss`] and central finite differences with the given step.
///
/// The relative error of one component is
/// `|analytic − numeric| / max(|analytic|, |numeric|, RELATIVE_ERROR_FLOOR)`.
pub fn gradient_check(
    model: &RankerModel,
    instance: &LabelledInstance,
    l2_lambda: f64,
    step: f64,
) -> Result<f64> {
    if !(1e-8..=1e-4).contains(&step) {
        return Err(Error::config("step", "must lie in [1e-8, 1e-4]"));
    }
    let (_, analytic) =
        parameter_gradient(model, &instance.features, &instance.ranking, l2_lambda)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let original = probe.parameters[i];
        probe.parameters[i] = original + step;
        let plus = instance_loss(&probe, &instance.features, &instance.ranking, l2_lambda)?;
        probe.parameters[i] = original - step;
        let minus = instance_loss(&probe, &instance.features, &instance.ranking, l2_lambda)?;
        probe.parameters[i] = original;
        let numeric = (plus - minus) / (2.0 * step);
        let denom = a.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init_scale: f64,
}

/// Learning rates swept in the reference experiments.
pub const LEARNING_RATE_GRID: [f64; 3] = [1e-5, 1e-4, 1e-3];
/// L2 strengths swept in the reference experiments.
pub const L2_LAMBDA_GRID: [f64; 3] = [0.0002, 0.002, 0.02];

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            l2_lambda: 0.002,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            init_scale: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if !(self.l2_lambda.is_finite() && self.l2_lambda >= 0.0) {
            return Err(Error::config("l2_lambda", "must be non-negative"));
        }
        if self.epochs < 1 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::config(
                "init_scale",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    /// Mean per-instance ranking loss (no L2 term) seen during each epoch.
    pub train_loss: Vec<f64>,
    /// Pair-mode overlap accuracy on the validation set after each epoch.
    pub validation_accuracy: Option<Vec<f64>>,
}

/// Mini-batch SGD; see [`train_with_validation`].
pub fn train(
    model: RankerModel,
    dataset: &[LabelledInstance],
    config: &TrainConfig,
) -> Result<(RankerModel, TrainHistory)> {
    train_with_validation(model, dataset, None, config)
}

/// Mini-batch SGD over `dataset`, reshuffled every epoch by a generator seeded
/// with `config.seed`.
///
/// Each step subtracts `learning_rate` times the batch-mean gradient of the
/// per-instance loss, plus the gradient of `l2_lambda · ‖W‖²`.
pub fn train_with_validation(
    mut model: RankerModel,
    dataset: &[LabelledInstance],
    validation: Option<&[LabelledInstance]>,
    config: &TrainConfig,
) -> Result<(RankerModel, TrainHistory)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for inst in dataset.iter().chain(validation.unwrap_or_default()) {
        model.check_features(&inst.features)?;
        check_ranking(&model, &inst.ranking)?;
    }

    let mask = model.weight_mask();
    let mut rng = seeded_rng(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut grad = vec![0.0; model.parameters.len()];
    let mut cache = ForwardCache::default();
    let mut history = TrainHistory {
        train_loss: Vec::with_capacity(config.epochs),
        validation_accuracy: validation.map(|_| Vec::with_capacity(config.epochs)),
    };

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_index, batch) in order.chunks(config.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let inst = &dataset[i];
                batch_loss += model.accumulate_gradient(
                    &inst.features,
                    &inst.ranking,
                    scale,
                    &mut cache,
                    &mut grad,
                );
            }
            add_l2_gradient(&model.parameters, &mask, config.l2_lambda, &mut grad);
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: batch_index + 1,
                });
            }
            for (p, g) in model.parameters.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            epoch_loss += batch_loss;
        }
        if model.parameters.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss {
                epoch: epoch + 1,
                batch: 0,
            });
        }
        history.train_loss.push(epoch_loss / dataset.len() as f64);
        if let (Some(val), Some(acc)) = (validation, history.validation_accuracy.as_mut()) {
            acc.push(evaluate_model(&model, val, AveragingMode::Pair)?.mean_overlap_accuracy);
        }
    }
    Ok((model, history))
}

/// Mean ranking loss (no L2 term) of `model` over `dataset`.
pub fn mean_loss(model: &RankerModel, dataset: &[LabelledInstance]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for inst in dataset {
        total += instance_loss(model, &inst.features, &inst.ranking, 0.0)?;
    }
    Ok(total / dataset.len() as f64)
}

/// One prediction per distinct `(object_id, orientation_id)` instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstancePrediction {
    pub key: InstanceKey,
    pub weights: WeightVector,
    pub ranking: Ranking,
}

/// Predicts each distinct instance of `dataset` once, using the features of
/// its first record, in order of first appearance.
pub fn predict_instances(
    model: &RankerModel,
    dataset: &[LabelledInstance],
) -> Result<Vec<InstancePrediction>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for inst in dataset {
        let key = inst.key();
        if seen.insert(key.clone()) {
            let weights = forward(model, &inst.features)?;
            let ranking = rank_from_weights(&weights);
            out.push(InstancePrediction {
                key,
                weights,
                ranking,
            });
        }
    }
    Ok(out)
}

/// Scores a set of instance predictions against the labelled rankings of
/// `references`.
pub fn evaluate_predictions(
    predictions: &[InstancePrediction],
    references: &[LabelledInstance],
    mode: AveragingMode,
) -> Result<EvaluationReport> {
    let preds: BTreeMap<InstanceKey, Ranking> = predictions
        .iter()
        .map(|p| (p.key.clone(), p.ranking.clone()))
        .collect();
    let refs = crate::synth::group_references(references);
    Ok(evaluate(&preds, &refs, mode)?.with_entropy(predictions.iter().map(|p| &p.weights)))
}

/// Predicts every instance of `dataset` and evaluates against its own labels.
pub fn evaluate_model(
    model: &RankerModel,
    dataset: &[LabelledInstance],
    mode: AveragingMode,
) -> Result<EvaluationReport> {
    let predictions = predict_instances(model, dataset)?;
    evaluate_predictions(&predictions, dataset, mode)
}
