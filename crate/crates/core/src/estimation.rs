//! Maximum-likelihood fitting of a single Plackett-Luce distribution from a
//! bag of rankings, plus sampling rankings from a fitted distribution.
//!
//! Two fitters are provided and are expected to agree:
//!
//! * [`fit_mle_mm`], the minorization-maximization fixed point. Every
//!   iteration is guaranteed not to decrease the (smoothed) likelihood.
//! * [`fit_mle_gradient`], gradient descent on softmax scores with a
//!   backtracking step.
//!
//! [`brute_force_mle`] is a grid search over the simplex for `n ≤ 3` and is
//! only meant as a reference for the other two.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pl::{self, log_likelihood, ClassIndex, Ranking, ScoreVector, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Mm,
    Gradient,
}

impl std::str::FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mm" => Ok(FitMethod::Mm),
            "gradient" => Ok(FitMethod::Gradient),
            other => Err(Error::config("method", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub method: FitMethod,
    pub max_iters: usize,
    /// Convergence threshold on the largest absolute weight change between iterations.
    pub tolerance: f64,
    /// Pseudo-count for the MM fitter; coefficient of `‖θ‖²` for the gradient fitter.
    pub smoothing: f64,
    /// Initial step of the backtracking line search (gradient method only).
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            method: FitMethod::Mm,
            max_iters: 10_000,
            tolerance: 1e-9,
            smoothing: 1e-6,
            learning_rate: 1.0,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::config("max_iters", "must be at least 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(Error::config("smoothing", "must be non-negative"));
        }
        if self.method == FitMethod::Gradient
            && (!(self.learning_rate.is_finite() && self.learning_rate > 0.0))
        {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub weights: WeightVector,
    pub final_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration: the smoothed log-likelihood for MM,
    /// the negated penalized loss for the gradient method.
    pub objective_trace: Vec<f64>,
}

/// Runs the fitter selected by `config.method`.
pub fn fit(rankings: &[Ranking], config: &FitConfig) -> Result<FitResult> {
    match config.method {
        FitMethod::Mm => fit_mle_mm(rankings, config),
        FitMethod::Gradient => fit_mle_gradient(rankings, config),
    }
}

fn class_count(rankings: &[Ranking]) -> Result<usize> {
    let first = rankings.first().ok_or(Error::EmptyRankings)?;
    let n = first.len();
    for r in rankings {
        if r.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: r.len(),
            });
        }
    }
    Ok(n)
}

fn trivial_fit() -> FitResult {
    FitResult {
        weights: WeightVector::uniform(1),
        final_log_likelihood: 0.0,
        iterations: 0,
        converged: true,
        objective_trace: Vec::new(),
    }
}

/// Number of choice events each class wins, i.e. how often it is placed
/// anywhere but last.
pub fn win_counts(rankings: &[Ranking], n: usize) -> Vec<f64> {
    let mut wins = vec![0.0; n];
    for r in rankings {
        for &c in &r.as_slice()[..n - 1] {
            wins[c] += 1.0;
        }
    }
    wins
}

/// Minorization-maximization fit.
///
/// With pseudo-count `s` the objective is
/// `ℓ(ω) + s · Σ_i ln(ω_i / Σ_j ω_j)`, which is scale invariant like `ℓ`
/// itself, and each step is
///
/// ```text
/// ω_i ← (W_i + s) / ( Σ_{events e ∋ i} 1 / Σ_{j ∈ e} ω_j  +  n·s / Σ_j ω_j )
/// ```
///
/// followed by renormalization. `W_i` counts the choice events won by `i`.
/// With `s = 0` a class that never wins has no finite MLE and the fit fails
/// with [`Error::NoWins`].
pub fn fit_mle_mm(rankings: &[Ranking], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let n = class_count(rankings)?;
    if n == 1 {
        return Ok(trivial_fit());
    }
    let s = config.smoothing;
    let wins = win_counts(rankings, n);
    if s == 0.0 {
        if let Some(class) = wins.iter().position(|&w| w == 0.0) {
            return Err(Error::NoWins { class });
        }
    }
    let numerators: Vec<f64> = wins.iter().map(|w| w + s).collect();

    let mut weights = vec![1.0 / n as f64; n];
    let mut denom = vec![0.0; n];
    let mut suffix = vec![0.0; n + 1];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters {
        iterations += 1;
        denom.iter_mut().for_each(|d| *d = n as f64 * s);
        for r in rankings {
            // Event e (positions e..n) contains the class at position i for
            // every e <= min(i, n-2), so walking from the head accumulates
            // each class's reciprocal candidate-set weights.
            let order = r.as_slice();
            suffix[n] = 0.0;
            for i in (0..n).rev() {
                suffix[i] = suffix[i + 1] + weights[order[i]];
            }
            let mut head = 0.0;
            for (i, &c) in order.iter().enumerate() {
                if i + 1 < n {
                    head += 1.0 / suffix[i];
                }
                denom[c] += head;
            }
        }
        let mut next: Vec<f64> = numerators.iter().zip(&denom).map(|(a, d)| a / d).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);

        let change = next
            .iter()
            .zip(&weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        weights = next;
        trace.push(smoothed_objective(&weights, rankings, s));
        if change < config.tolerance {
            converged = true;
            break;
        }
    }

    let weights = WeightVector::normalized(&weights)?;
    Ok(FitResult {
        final_log_likelihood: log_likelihood(&weights, rankings)?,
        weights,
        iterations,
        converged,
        objective_trace: trace,
    })
}

fn smoothed_objective(weights: &[f64], rankings: &[Ranking], s: f64) -> f64 {
    let mut total = pl::CompensatedSum::default();
    for r in rankings {
        pl::add_ranking_log_probability(weights, r.as_slice(), &mut total);
    }
    if s > 0.0 {
        let sum: f64 = weights.iter().sum();
        for w in weights {
            total.add(s * (w / sum).ln());
        }
    }
    total.value()
}

/// Gradient-descent fit on softmax scores `θ`, starting from `θ = 0`.
///
/// Minimizes `(Σ_k loss(θ; π_k) + smoothing · ‖θ‖²) / N` with an Armijo
/// backtracking step that starts from `learning_rate` every iteration.
pub fn fit_mle_gradient(rankings: &[Ranking], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let n = class_count(rankings)?;
    if n == 1 {
        return Ok(trivial_fit());
    }
    let count = rankings.len() as f64;
    let penalty = config.smoothing;
    let objective = |theta: &[f64], grad: Option<&mut [f64]>| -> f64 {
        let mut loss = 0.0;
        match grad {
            Some(g) => {
                g.iter_mut().for_each(|v| *v = 0.0);
                for r in rankings {
                    loss += pl::accumulate_score_gradient(theta, r.as_slice(), 1.0 / count, g);
                }
                for (gi, t) in g.iter_mut().zip(theta) {
                    *gi += 2.0 * penalty * t / count;
                }
            }
            None => {
                for r in rankings {
                    loss += pl::score_loss_unchecked(theta, r.as_slice());
                }
            }
        }
        (loss + penalty * theta.iter().map(|t| t * t).sum::<f64>()) / count
    };

    let mut theta = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut candidate = vec![0.0; n];
    let mut weights = pl::softmax_slice(&theta);
    let mut value = objective(&theta, Some(&mut grad));
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters {
        iterations += 1;
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        let mut step = config.learning_rate;
        let mut next_value;
        loop {
            for ((c, t), g) in candidate.iter_mut().zip(&theta).zip(&grad) {
                *c = t - step * g;
            }
            next_value = objective(&candidate, None);
            if next_value <= value - 0.5 * step * grad_sq || step < 1e-16 {
                break;
            }
            step *= 0.5;
        }
        if !next_value.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: iterations,
                batch: 0,
            });
        }
        std::mem::swap(&mut theta, &mut candidate);
        value = objective(&theta, Some(&mut grad));
        trace.push(-value * count);

        let next = pl::softmax_slice(&theta);
        let change = next
            .iter()
            .zip(&weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        weights = next;
        if change < config.tolerance {
            converged = true;
            break;
        }
    }

    let weights = pl::softmax(&ScoreVector::new(theta)?);
    Ok(FitResult {
        final_log_likelihood: log_likelihood(&weights, rankings)?,
        weights,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Exhaustive grid search over the interior of the simplex for `n ≤ 3`.
///
/// Grid points are `k / grid_steps` with every coordinate at least one step
/// from the boundary. The first maximizer in lexicographic grid order wins.
pub fn brute_force_mle(rankings: &[Ranking], grid_steps: usize) -> Result<WeightVector> {
    let n = class_count(rankings)?;
    if n > 3 {
        return Err(Error::TooManyClasses {
            what: "brute_force_mle",
            n,
            max: 3,
        });
    }
    if grid_steps < 10 {
        return Err(Error::config("grid_steps", "must be at least 10"));
    }
    if n == 1 {
        return Ok(WeightVector::uniform(1));
    }
    let step = 1.0 / grid_steps as f64;
    let mut best = f64::NEG_INFINITY;
    let mut best_point = vec![0.0; n];
    let mut point = vec![0.0; n];
    let mut consider = |point: &[f64]| {
        let ll: f64 = rankings
            .iter()
            .map(|r| pl::ranking_log_probability(point, r.as_slice()))
            .sum();
        if ll > best {
            best = ll;
            best_point.copy_from_slice(point);
        }
    };
    if n == 2 {
        for a in 1..grid_steps {
            point[0] = a as f64 * step;
            point[1] = (grid_steps - a) as f64 * step;
            consider(&point);
        }
    } else {
        for a in 1..grid_steps - 1 {
            for b in 1..grid_steps - a {
                point[0] = a as f64 * step;
                point[1] = b as f64 * step;
                point[2] = (grid_steps - a - b) as f64 * step;
                consider(&point);
            }
        }
    }
    WeightVector::normalized(&best_point)
}

/// Draws a ranking by repeatedly picking one of the remaining classes with
/// probability proportional to its weight.
pub fn sample_ranking<R: Rng + ?Sized>(weights: &WeightVector, rng: &mut R) -> Ranking {
    let mut remaining: Vec<ClassIndex> = (0..weights.len()).collect();
    let mut order = Vec::with_capacity(weights.len());
    while remaining.len() > 1 {
        let total: f64 = remaining.iter().map(|&c| weights[c]).sum();
        let mut u = rng.random::<f64>() * total;
        // Falls back to the last candidate if rounding leaves `u` above the sum.
        let mut pick = remaining.len() - 1;
        for (k, &c) in remaining.iter().enumerate() {
            if u < weights[c] {
                pick = k;
                break;
            }
            u -= weights[c];
        }
        order.push(remaining.remove(pick));
    }
    order.extend(remaining);
    Ranking::new(order).expect("sequential draw yields a permutation")
}

/// `count` independent draws of [`sample_ranking`].
pub fn sample_rankings<R: Rng + ?Sized>(
    weights: &WeightVector,
    count: usize,
    rng: &mut R,
) -> Vec<Ranking> {
    (0..count).map(|_| sample_ranking(weights, rng)).collect()
}
