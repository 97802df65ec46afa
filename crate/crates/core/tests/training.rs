//! Regression properties of training: closed-form solves against brute-force
//! oracles on small images.

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blade::apply;
use blade::bank::identity_filter;
use blade::noise::add_awgn;
use blade::quantizer::{selection_map, QuantizerSpec};
use blade::raster::{Footprint, ImageGray, D4};
use blade::synth::scene_gray;
use blade::training::{
    accumulate_corpus, bucket_objective, build_gradient_q, solve_bucket, train, GramAccumulator,
    TrainConfig, TrainingPair,
};

fn small_q() -> QuantizerSpec {
    QuantizerSpec::new(4, 2, (5.0, 30.0), 2, (0.2, 0.8), 1.0).unwrap()
}

fn noisy_pair(seed: u64) -> TrainingPair {
    let clean = scene_gray(40, 36, seed);
    TrainingPair::gray(add_awgn(&clean, 12.0, seed).unwrap(), clean)
}

fn fallback(fp: Footprint) -> Vec<Vec<f64>> {
    vec![identity_filter(fp, 1, 0)
        .into_iter()
        .map(f64::from)
        .collect()]
}

#[test]
fn identity_target_gives_center_delta() {
    let img = add_awgn(&scene_gray(48, 40, 1), 20.0, 2).unwrap();
    let fp = Footprint::new(3).unwrap();
    let mut config = TrainConfig::new(QuantizerSpec::single(1.0), fp);
    config.lambda = 0.0;
    let (bank, _) = train(&[TrainingPair::gray(img.clone(), img)], &config).unwrap();
    for (j, &h) in bank.filter(0, 0).iter().enumerate() {
        let want = if j == fp.center() { 1.0 } else { 0.0 };
        assert!((h - want).abs() < 1e-5, "tap {j}: {h}");
    }
}

#[test]
fn pre_augmented_pairs_equal_augmentation() {
    let pair = noisy_pair(3);
    let fp = Footprint::new(3).unwrap();
    let mut config = TrainConfig::new(small_q(), fp);
    let mut on = accumulate_corpus(std::slice::from_ref(&pair), &config).unwrap();
    let manual: Vec<TrainingPair> = D4::ALL
        .iter()
        .map(|t| TrainingPair::gray(t.apply(&pair.inputs[0]), t.apply(&pair.targets[0])))
        .collect();
    config.augment = false;
    let mut off = accumulate_corpus(&manual, &config).unwrap();
    assert_eq!(on.counts(), off.counts());
    for k in 0..small_q().buckets() {
        let (a, b) = (on.gram(k).to_vec(), off.gram(k).to_vec());
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-9);
        }
    }
}

#[test]
fn residual_variance_matches_direct_residual() {
    let pair = noisy_pair(4);
    let fp = Footprint::new(3).unwrap();
    let mut config = TrainConfig::new(small_q(), fp);
    config.augment = false;
    let mut acc = accumulate_corpus(std::slice::from_ref(&pair), &config).unwrap();
    let q = build_gradient_q(fp, 1, config.lambda).unwrap();
    let sel = selection_map(&pair.guide, &small_q()).unwrap();
    let img = &pair.inputs[0];
    for k in 0..small_q().buckets() {
        if acc.count(k) as usize <= fp.taps() {
            continue;
        }
        let sol = solve_bucket(&mut acc, k, &q, &fallback(fp)).unwrap();
        let h = &sol.filters[0];
        let mut sq = 0.0;
        for y in 0..img.height() {
            for x in 0..img.width() {
                if sel.get(x, y) != k {
                    continue;
                }
                let pred: f64 = fp
                    .offsets()
                    .zip(h)
                    .map(|((dx, dy), &c)| {
                        c * img.get_reflect(x as isize + dx, y as isize + dy) as f64
                    })
                    .sum();
                sq += (pair.targets[0].get(x, y) as f64 - pred).powi(2);
            }
        }
        let direct = sq / (acc.count(k) as usize - fp.taps()) as f64;
        assert_relative_eq!(sol.residual_variance[0], direct, max_relative = 1e-6);
    }
}

#[test]
fn stronger_regularization_never_roughens_filters() {
    let fp = Footprint::new(5).unwrap();
    let mut config = TrainConfig::new(QuantizerSpec::single(1.0), fp);
    config.augment = false;
    let mut acc = accumulate_corpus(&[noisy_pair(5)], &config).unwrap();
    let unit = build_gradient_q(fp, 1, 1.0).unwrap();
    let mut last = f64::INFINITY;
    for lambda in [0.0, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5] {
        let q = build_gradient_q(fp, 1, lambda).unwrap();
        let h = solve_bucket(&mut acc, 0, &q, &fallback(fp))
            .unwrap()
            .filters
            .remove(0);
        let rough = unit.quadratic_form(&h);
        assert!(
            rough <= last * (1.0 + 1e-9),
            "lambda {lambda}: {rough} > {last}"
        );
        last = rough;
    }
}

#[test]
fn solution_is_a_minimum_of_the_objective() {
    let fp = Footprint::new(3).unwrap();
    let mut config = TrainConfig::new(small_q(), fp);
    config.augment = false;
    let mut acc = accumulate_corpus(&[noisy_pair(6)], &config).unwrap();
    let q = build_gradient_q(fp, 1, config.lambda).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..small_q().buckets() {
        if acc.count(k) == 0 {
            continue;
        }
        let h = solve_bucket(&mut acc, k, &q, &fallback(fp))
            .unwrap()
            .filters
            .remove(0);
        let best = bucket_objective(&mut acc, k, &q, 0, &h);
        for _ in 0..50 {
            let eps = 10f64.powf(rng.random_range(-4.0..-1.0));
            let perturbed: Vec<f64> = h
                .iter()
                .map(|&v| v + eps * rng.random_range(-1.0..1.0))
                .collect();
            let value = bucket_objective(&mut acc, k, &q, 0, &perturbed);
            assert!(
                value >= best - 1e-9 * best.abs(),
                "bucket {k}: {value} < {best}"
            );
        }
    }
}

#[test]
fn buckets_are_solved_independently() {
    // Moving one bucket's samples elsewhere changes no other bucket.
    let fp = Footprint::new(3).unwrap();
    let d = fp.taps();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<(usize, Vec<f64>, f64)> = (0..600)
        .map(|i| {
            let patch: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..255.0)).collect();
            let target = patch[4] * 0.8 + rng.random_range(-5.0..5.0);
            (i % 3, patch, target)
        })
        .collect();
    let q = build_gradient_q(fp, 1, 2.0).unwrap();
    let solve = |filter: &dyn Fn(usize) -> bool| {
        let mut acc = GramAccumulator::new(3, d, 1);
        for (k, p, t) in &samples {
            if filter(*k) {
                acc.add_sample(*k, p, &[*t]);
            }
        }
        (0..2)
            .map(|k| {
                solve_bucket(&mut acc, k, &q, &fallback(fp))
                    .unwrap()
                    .filters
                    .remove(0)
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(solve(&|_| true), solve(&|k| k != 2));
}

#[test]
fn more_buckets_never_raise_training_error() {
    let corpus: Vec<TrainingPair> = (10..14).map(noisy_pair).collect();
    let fp = Footprint::new(5).unwrap();
    let err = |q: QuantizerSpec| {
        let mut config = TrainConfig::new(q, fp);
        config.augment = false;
        config.lambda = 0.0;
        let (bank, _) = train(&corpus, &config).unwrap();
        corpus
            .iter()
            .map(|p| {
                blade::metrics::mse(&apply(&bank, &p.inputs[0]).unwrap(), &p.targets[0]).unwrap()
            })
            .sum::<f64>()
    };
    assert!(err(small_q()) <= err(QuantizerSpec::single(1.0)));
}

#[test]
fn every_pixel_of_every_transform_is_counted() {
    let corpus = vec![noisy_pair(20), noisy_pair(21)];
    let (_, report) = train(
        &corpus,
        &TrainConfig::new(small_q(), Footprint::new(3).unwrap()),
    )
    .unwrap();
    let sum: u64 = report.buckets.iter().map(|b| b.samples).sum();
    assert_eq!(sum, 8 * 2 * 40 * 36);
    assert_eq!(report.total_samples, sum);
}

#[test]
fn mismatched_pairs_are_rejected() {
    let pair = TrainingPair::gray(ImageGray::new(10, 10), ImageGray::new(10, 9));
    assert!(train(
        &[pair],
        &TrainConfig::new(small_q(), Footprint::new(3).unwrap())
    )
    .is_err());
    assert!(train(
        &[],
        &TrainConfig::new(small_q(), Footprint::new(3).unwrap())
    )
    .is_err());
}
