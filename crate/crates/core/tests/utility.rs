mod common;

use common::law_samples;
use roistream::utility::{
    analytic_gradient, gradient_check, numeric_gradient, predict_accuracy, tabulate_utility,
    train_utility, FeatureRange, ProfilingSample, TrainConfig, UtilityModel,
};

#[test]
fn constant_target_is_learned() {
    let mut samples = law_samples(60, 3);
    samples.iter_mut().for_each(|s| s.accuracy = 0.7);
    let fit = train_utility(&samples, &TrainConfig::default()).unwrap();
    for s in &samples {
        let p = predict_accuracy(&fit.model, s.a, s.c, s.bitrate_kbps, s.resolution);
        assert!((p - 0.7).abs() <= 0.02, "{p}");
    }
}

#[test]
fn synthetic_law_generalises() {
    let train = law_samples(200, 11);
    let held_out = law_samples(200, 12);
    let fit = train_utility(&train, &TrainConfig::default()).unwrap();
    let mse = held_out
        .iter()
        .map(|s| {
            let e = predict_accuracy(&fit.model, s.a, s.c, s.bitrate_kbps, s.resolution) - s.accuracy;
            e * e
        })
        .sum::<f64>()
        / held_out.len() as f64;
    assert!(mse.sqrt() < 0.05, "held-out rmse {}", mse.sqrt());

    // generating law: 0.3 + 0.25 - 0.04
    let p = predict_accuracy(&fit.model, 0.2, 0.5, 500.0, 0);
    assert!((p - 0.51).abs() <= 0.05, "{p}");

    // monotone in bitrate per resolution column, within 0.02
    let bitrates = [50, 100, 200, 400, 800, 1000];
    let table = tabulate_utility(&fit.model, 0.3, 0.5, &bitrates, &[0, 1, 2]);
    for r in 0..3 {
        for b in 1..bitrates.len() {
            assert!(table[b][r] + 0.02 >= table[b - 1][r], "b={b} r={r}");
        }
    }
}

#[test]
fn two_point_set_is_memorised() {
    // two distinct points, each repeated to reach the minimum sample count
    let p = ProfilingSample {
        a: 0.1,
        c: 0.2,
        bitrate_kbps: 100.0,
        resolution: 0,
        accuracy: 0.25,
    };
    let q = ProfilingSample {
        a: 0.6,
        c: 0.9,
        bitrate_kbps: 800.0,
        resolution: 2,
        accuracy: 0.85,
    };
    let samples: Vec<_> = (0..10).map(|i| if i % 2 == 0 { p } else { q }).collect();
    let cfg = TrainConfig {
        hidden_size: 4,
        epochs: 2000,
        ..TrainConfig::default()
    };
    let fit = train_utility(&samples, &cfg).unwrap();
    assert!(fit.train_mse < 1e-4, "mse {}", fit.train_mse);
}

#[test]
fn training_is_reproducible() {
    let s = law_samples(50, 5);
    let cfg = TrainConfig {
        epochs: 100,
        ..TrainConfig::default()
    };
    let a = train_utility(&s, &cfg).unwrap();
    let b = train_utility(&s, &cfg).unwrap();
    assert_eq!(a, b);
    let pa = predict_accuracy(&a.model, 0.3, 0.3, 300.0, 1);
    let pb = predict_accuracy(&b.model, 0.3, 0.3, 300.0, 1);
    assert_eq!(pa.to_bits(), pb.to_bits());
}

#[test]
fn tabulate_matches_scalar_calls() {
    let fit = train_utility(&law_samples(40, 8), &TrainConfig { epochs: 50, ..TrainConfig::default() }).unwrap();
    let single = tabulate_utility(&fit.model, 0.4, 0.6, &[200], &[1]);
    assert_eq!(single, vec![vec![predict_accuracy(&fit.model, 0.4, 0.6, 200.0, 1)]]);
    let bitrates = [50, 200, 400, 1000];
    let res = [0, 1, 2];
    let t = tabulate_utility(&fit.model, 0.4, 0.6, &bitrates, &res);
    assert_eq!(t.len() * t[0].len(), 12);
    for (bi, &b) in bitrates.iter().enumerate() {
        for (ri, &r) in res.iter().enumerate() {
            assert_eq!(t[bi][ri], predict_accuracy(&fit.model, 0.4, 0.6, f64::from(b), r));
        }
    }
}

fn unit_norm() -> [FeatureRange; 4] {
    [
        FeatureRange { min: 0.0, max: 1.0 },
        FeatureRange { min: 0.0, max: 1.0 },
        FeatureRange { min: 50.0, max: 1000.0 },
        FeatureRange { min: 0.0, max: 2.0 },
    ]
}

#[test]
fn random_small_model_passes_gradient_check() {
    let model = UtilityModel::random(6, unit_norm(), 77);
    let samples = law_samples(5, 78);
    let err = gradient_check(&model, &samples);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn zero_model_output_weight_gradients_match_exactly() {
    let model = UtilityModel::zeros(5, unit_norm());
    let mut samples = law_samples(5, 4);
    samples.iter_mut().for_each(|s| s.accuracy = 0.0);
    let analytic = analytic_gradient(&model, &samples);
    let numeric = numeric_gradient(&model, &samples, 1e-5);
    // w2 block then b2
    let start = 5 * 4 + 5;
    for i in start..analytic.len() {
        assert!((analytic[i] - numeric[i]).abs() < 1e-6, "param {i}");
    }
    // out = 0.5 for every sample: d/db2 mean (out-0)^2 = 2 * 0.5 * 0.25
    assert!((analytic[analytic.len() - 1] - 0.25).abs() < 1e-15);
}

#[test]
fn single_hidden_unit_gradients_agree() {
    let model = UtilityModel::random(1, unit_norm(), 5);
    let samples = law_samples(8, 6);
    let analytic = analytic_gradient(&model, &samples);
    let numeric = numeric_gradient(&model, &samples, 1e-5);
    for (a, n) in analytic.iter().zip(&numeric) {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-7);
        assert!(rel < 1e-4, "{a} vs {n}");
    }
}

#[test]
fn gradient_check_over_twenty_seeds() {
    for seed in 0..20 {
        let model = UtilityModel::random(8, unit_norm(), seed);
        let samples = law_samples(6, 1000 + seed);
        let err = gradient_check(&model, &samples);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}
