use plrank::estimation::{fit_mle_mm, FitConfig};
use plrank::metrics::average_overlap;
use plrank::pl::WeightVector;
use plrank::synth::{generate_dataset, group_references, SyntheticConfig};

fn unanimous(n_labellers: usize) -> SyntheticConfig {
    SyntheticConfig {
        n_objects: 4,
        orientations_per_object: 2,
        n_labellers,
        labeller_coverage: 1.0,
        feature_noise: 0.0,
        seed: 21,
        ..SyntheticConfig::low_noise()
    }
}

#[test]
fn first_place_frequencies_converge_to_truth() {
    let (data, truth) = generate_dataset(&unanimous(1000)).unwrap();
    for (key, refs) in group_references(&data) {
        assert_eq!(refs.len(), 1000);
        let w = truth.true_weights(&key).unwrap();
        let mut first = vec![0usize; w.len()];
        for r in &refs {
            first[r.at(0)] += 1;
        }
        for (c, &count) in first.iter().enumerate() {
            let freq = count as f64 / refs.len() as f64;
            assert!(
                (freq - w[c]).abs() < 0.05,
                "{key} class {c}: {freq} vs {}",
                w[c]
            );
        }
    }
}

#[test]
fn per_instance_fit_recovers_true_distribution() {
    let (data, truth) = generate_dataset(&unanimous(2000)).unwrap();
    for (key, refs) in group_references(&data) {
        let fit = fit_mle_mm(&refs, &FitConfig::default()).unwrap();
        let w = truth.true_weights(&key).unwrap();
        assert!(
            fit.weights.max_abs_diff(&w) < 0.05,
            "{key}: {:?} vs {:?}",
            fit.weights,
            w
        );
    }
}

fn mean_pairwise_agreement(bias_scale: f64) -> f64 {
    let cfg = SyntheticConfig {
        labeller_bias_scale: bias_scale,
        labeller_coverage: 1.0,
        n_objects: 40,
        seed: 8,
        ..SyntheticConfig::default()
    };
    let (data, _) = generate_dataset(&cfg).unwrap();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for refs in group_references(&data).values() {
        for i in 0..refs.len() {
            for j in i + 1..refs.len() {
                total += average_overlap(&refs[i], &refs[j]).unwrap();
                pairs += 1;
            }
        }
    }
    total / pairs as f64
}

#[test]
fn labeller_bias_lowers_agreement() {
    let agreement: Vec<f64> = [0.0, 0.5, 1.0]
        .iter()
        .map(|&s| mean_pairwise_agreement(s))
        .collect();
    assert!(agreement[1] <= agreement[0], "{agreement:?}");
    assert!(agreement[2] <= agreement[1], "{agreement:?}");
}

#[test]
fn true_weights_are_valid_and_features_finite() {
    let (data, truth) = generate_dataset(&SyntheticConfig::default()).unwrap();
    assert_eq!(truth.instances.len(), 102 * 4);
    for t in &truth.instances {
        assert!(WeightVector::new(t.weights.clone()).is_ok());
    }
    assert!(data
        .iter()
        .all(|r| r.features.iter().all(|x| x.is_finite())));
    // Default coverage leaves roughly 98% of the 4488 possible labels.
    assert!(data.len() > 4300 && data.len() < 4488, "{}", data.len());
}
