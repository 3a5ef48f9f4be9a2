//! Exhaustive and finite-difference checks of the Plackett-Luce core against
//! naive reimplementations kept here in the test.

use plrank::pl::{
    all_rankings, log_likelihood, loss_gradient_scores, permutation_probability, pl_loss,
    rank_from_weights, softmax, Ranking, ScoreVector, WeightVector,
};
use plrank::seeded_rng;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn naive_softmax(theta: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Product of choice probabilities, recomputing every denominator from scratch.
fn naive_probability(w: &[f64], order: &[usize]) -> f64 {
    let mut p = 1.0;
    for i in 0..order.len() - 1 {
        let denom: f64 = order[i..].iter().map(|&c| w[c]).sum();
        p *= w[order[i]] / denom;
    }
    p
}

fn naive_loss(theta: &[f64], order: &[usize]) -> f64 {
    -naive_probability(&naive_softmax(theta), order).ln()
}

fn random_weights(rng: &mut impl Rng, n: usize) -> WeightVector {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    WeightVector::normalized(&raw).unwrap()
}

fn random_ranking(rng: &mut impl Rng, n: usize) -> Ranking {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ranking::new(order).unwrap()
}

#[test]
fn probabilities_sum_to_one_over_all_permutations() {
    let mut rng = seeded_rng(2024);
    for n in 1..=6 {
        let perms = all_rankings(n);
        for _ in 0..50 {
            let w = random_weights(&mut rng, n);
            let total: f64 = perms
                .iter()
                .map(|p| permutation_probability(&w, p).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "n={n}: {total}");
        }
    }
}

#[test]
fn probability_matches_naive_product() {
    let mut rng = seeded_rng(7);
    for n in 2..=6 {
        for _ in 0..100 {
            let w = random_weights(&mut rng, n);
            let p = random_ranking(&mut rng, n);
            let fast = permutation_probability(&w, &p).unwrap();
            let slow = naive_probability(w.as_slice(), p.as_slice());
            assert!((fast - slow).abs() <= 1e-14 * slow.max(1e-300));
        }
    }
}

#[test]
fn uniform_loss_is_log_factorial_exhaustively() {
    for n in 1..=6 {
        let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
        let u = WeightVector::uniform(n);
        for p in all_rankings(n) {
            assert!((pl_loss(&u, &[p]).unwrap() - log_fact).abs() < 1e-12);
        }
    }
}

#[test]
fn log_likelihood_is_log_probability() {
    let mut rng = seeded_rng(99);
    for n in 2..=6 {
        for _ in 0..50 {
            let w = random_weights(&mut rng, n);
            let p = random_ranking(&mut rng, n);
            let ll = log_likelihood(&w, std::slice::from_ref(&p)).unwrap();
            let prob = permutation_probability(&w, &p).unwrap();
            assert!((ll.exp() - prob).abs() <= 1e-10 * prob);
        }
    }
}

#[test]
fn long_rankings_do_not_underflow() {
    let n = 400;
    let u = WeightVector::uniform(n);
    let ll = log_likelihood(&u, &[Ranking::identity(n)]).unwrap();
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    assert!(ll.is_finite());
    assert!((ll + log_fact).abs() < 1e-9 * log_fact);
}

/// Relative error with the same floor the crate uses for model gradients.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn score_gradient_matches_central_differences() {
    let mut rng = seeded_rng(31337);
    let h = 1e-6;
    let mut cases = 0;
    for n in 2..=6 {
        for _ in 0..20 {
            let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = random_ranking(&mut rng, n);
            let grad = loss_gradient_scores(&ScoreVector::new(theta.clone()).unwrap(), &p).unwrap();
            assert!(grad.iter().sum::<f64>().abs() < 1e-10);
            for m in 0..n {
                let mut plus = theta.clone();
                plus[m] += h;
                let mut minus = theta.clone();
                minus[m] -= h;
                let fd = (naive_loss(&plus, p.as_slice()) - naive_loss(&minus, p.as_slice()))
                    / (2.0 * h);
                assert!(
                    rel_err(grad[m], fd) < 1e-5,
                    "n={n} m={m}: {} vs {fd}",
                    grad[m]
                );
            }
            cases += 1;
        }
    }
    assert_eq!(cases, 100);
}

#[test]
fn zero_scores_give_zero_sum_gradient() {
    let mut rng = seeded_rng(5);
    for _ in 0..20 {
        let p = random_ranking(&mut rng, 5);
        let g = loss_gradient_scores(&ScoreVector::zeros(5), &p).unwrap();
        assert!(g.iter().sum::<f64>().abs() < 1e-10);
    }
}

fn ranking_strategy() -> impl Strategy<Value = Ranking> {
    (1usize..=7)
        .prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        .prop_map(|order| Ranking::new(order).unwrap())
}

fn scores_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-30.0f64..30.0, n)
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant(theta in scores_strategy(5), c in -500.0f64..500.0) {
        let a = softmax(&ScoreVector::new(theta.clone()).unwrap());
        let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
        let b = softmax(&ScoreVector::new(shifted).unwrap());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_output_is_a_weight_vector(theta in scores_strategy(6)) {
        let w = softmax(&ScoreVector::new(theta).unwrap());
        prop_assert!(WeightVector::new(w.into_vec()).is_ok());
    }

    #[test]
    fn ranking_from_weights_is_a_sorted_permutation(raw in prop::collection::vec(0.001f64..1.0, 1..8)) {
        let w = WeightVector::normalized(&raw).unwrap();
        let r = rank_from_weights(&w);
        prop_assert!(Ranking::new(r.as_slice().to_vec()).is_ok());
        for pair in r.as_slice().windows(2) {
            let (a, b) = (w[pair[0]], w[pair[1]]);
            prop_assert!(a > b || (a == b && pair[0] < pair[1]));
        }
    }

    #[test]
    fn log_likelihood_is_additive(r in ranking_strategy(), copies in 1usize..5) {
        let w = WeightVector::uniform(r.len());
        let one = log_likelihood(&w, std::slice::from_ref(&r)).unwrap();
        let many = log_likelihood(&w, &vec![r; copies]).unwrap();
        prop_assert!((many - copies as f64 * one).abs() < 1e-12 * copies as f64 * (1.0 + one.abs()));
    }
}
