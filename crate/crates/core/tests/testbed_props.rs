//! Decoder, perturbation, diagnostic and objective properties of the
//! synthetic latent testbed.

use cbo_core::engine::Problem;
use cbo_core::smiles::check_validity;
use cbo_core::testbed::*;
use cbo_core::BoundedBox;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_decoder(lengthscale: f64) -> SyntheticDecoder {
    let anchors = vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-2.0, 4.0]];
    SyntheticDecoder::new(anchors, lengthscale, 0.7, SyntheticDecoder::default_templates()).unwrap()
}

#[test]
fn decoding_on_an_anchor_is_always_valid() {
    let dec = small_decoder(0.5);
    assert_eq!(dec.p_valid(&[3.0, 1.0]), 1.0);
    let out = synth_decode(&dec, &[3.0, 1.0], 500, 11);
    assert_eq!(out.len(), 500);
    // p_valid = 1: the 99% binomial interval is the single point {500}.
    assert!(out.iter().all(|s| check_validity(s).valid && dec.templates().contains(s)));
}

#[test]
fn decoding_far_away_is_methane_or_invalid() {
    let dec = small_decoder(0.5);
    // Ten lengthscales to the right of the anchor at (3, 1).
    let z = [8.0, 1.0];
    assert_eq!(dec.nearest_anchor_distance(&z), 5.0);
    let out = dec.decode(&z, 2000, 4);
    let bad = out.iter().filter(|s| *s == METHANE || !check_validity(s).valid).count();
    assert!(bad as f64 / out.len() as f64 >= 0.99);
    let methane = out.iter().filter(|s| *s == METHANE).count() as f64 / out.len() as f64;
    // Binomial(2000, 0.7): 4.5 standard deviations is about 0.046.
    assert!((methane - 0.7).abs() < 0.05, "methane fraction {methane}");
}

#[test]
fn non_template_outputs_are_invalid() {
    let dec = small_decoder(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..40 {
        let z = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
        for s in dec.decode(&z, 100, k) {
            let template = dec.templates().contains(&s);
            assert_eq!(check_validity(&s).valid, template || s == METHANE, "{s:?}");
        }
    }
}

#[test]
fn decoding_is_deterministic_per_seed() {
    let dec = small_decoder(1.0);
    assert_eq!(dec.decode(&[1.0, 1.0], 300, 5), dec.decode(&[1.0, 1.0], 300, 5));
    assert_ne!(dec.decode(&[1.0, 1.0], 300, 5), dec.decode(&[1.0, 1.0], 300, 6));
}

proptest! {
    #[test]
    fn p_valid_decreases_with_distance(a in prop::array::uniform2(-8.0f64..8.0), b in prop::array::uniform2(-8.0f64..8.0)) {
        let dec = small_decoder(1.5);
        let (da, db) = (dec.nearest_anchor_distance(&a), dec.nearest_anchor_distance(&b));
        if da <= db {
            prop_assert!(dec.p_valid(&a) >= dec.p_valid(&b));
        } else {
            prop_assert!(dec.p_valid(&a) <= dec.p_valid(&b));
        }
    }
}

#[test]
fn perturbation_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let points: Vec<Vec<f64>> = (0..2000).map(|_| (0..56).map(|_| rng.random_range(0.5..2.0) * if rng.random() { 1.0 } else { -1.0 }).collect()).collect();
    assert_eq!(perturb_training_points(&points, 0.0, 1), points);
    let moved = perturb_training_points(&points, 0.5, 1);
    assert_eq!(moved, perturb_training_points(&points, 0.5, 1));
    let mut sum = 0.0;
    let mut n = 0.0;
    for (p, q) in points.iter().zip(&moved) {
        for (x, y) in p.iter().zip(q) {
            sum += (y - x).abs() / x.abs();
            n += 1.0;
        }
    }
    let half_normal_mean = 0.5 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((sum / n - half_normal_mean).abs() < 0.005, "{} vs {half_normal_mean}", sum / n);
}

#[test]
fn diagnostic_orderings_hold_for_every_seed() {
    for seed in 0..5 {
        let tb = LatentTestbed::new(&TestbedConfig { seed, negative_points: 0, ..TestbedConfig::default() }).unwrap();
        let rows = diagnostic_experiment(tb.decoder(), &tb.bounds(), &DiagnosticConfig { seed, ..Default::default() }).unwrap();
        assert_eq!(rows.len(), 5);
        for r in &rows {
            for v in [r.pct_valid, r.pct_methane, r.pct_druglike] {
                assert!((0.0..=100.0).contains(&v));
            }
            assert!(r.pct_druglike <= r.pct_valid);
        }
        for w in rows.windows(2) {
            assert!(w[1].pct_valid < w[0].pct_valid, "seed {seed}: {rows:?}");
            assert!(w[1].pct_methane > w[0].pct_methane, "seed {seed}: {rows:?}");
        }
    }
}

#[test]
fn diagnostic_csv_layout() {
    let tb = LatentTestbed::new(&TestbedConfig { negative_points: 0, ..TestbedConfig::default() }).unwrap();
    let cfg = DiagnosticConfig { decode_attempts: 20, ..Default::default() };
    let rows = diagnostic_experiment(tb.decoder(), &tb.bounds(), &cfg).unwrap();
    let mut out = Vec::new();
    write_diagnostic_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "group,pct_valid,pct_methane,pct_druglike");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("train,"));
    assert!(lines[5].starts_with("random,"));
    let too_many = DiagnosticConfig { points_per_group: 60, ..cfg };
    assert!(diagnostic_experiment(tb.decoder(), &tb.bounds(), &too_many).is_err());
}

#[test]
fn negative_class_labels() {
    let dec = small_decoder(0.5);
    let far = BoundedBox::cube(2, 20.0, 30.0).unwrap();
    let labels = generate_negative_class(&far, 100, 100, &dec, 0.2, 3);
    assert_eq!(labels.len(), 100);
    assert!(labels.iter().filter(|p| p.label).count() <= 1);
    let on_anchor = BoundedBox::new(vec![2.999, 0.999], vec![3.001, 1.001]).unwrap();
    let labels = generate_negative_class(&on_anchor, 100, 100, &dec, 0.2, 3);
    assert!(labels.iter().filter(|p| p.label).count() >= 99);
    assert!(generate_negative_class(&far, 0, 100, &dec, 0.2, 3).is_empty());
}

#[test]
fn composite_examples() {
    let c = |p, s, r| composite_objective(ComponentScores { primary: p, sa: s, ring_penalty: r });
    assert_eq!(c(2.5, 1.0, 0.5), 1.0);
    assert_eq!(c(0.7, 0.0, 0.0), 0.7);
    assert_eq!(c(0.0, 0.0, 0.0), 0.0);
}

#[test]
fn latent_objective_contract() {
    let anchors = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 3.0], vec![9.0, 9.0]];
    // Heights 1, 1/2, 1/3 on the first three anchors, width 1.
    let at_best = 1.0 + 0.5 * (-2.0f64).exp() + (1.0 / 3.0) * (-4.5f64).exp();
    assert!((synthetic_latent_objective(&[0.0, 0.0], &anchors, None) - at_best).abs() < 1e-15);
    assert!(synthetic_latent_objective(&[50.0, 50.0], &anchors, None).abs() < 1e-300);
    let a = synthetic_latent_objective(&[1.0, 1.0], &anchors, Some(1));
    let b = synthetic_latent_objective(&[1.0, 1.0], &anchors, Some(2));
    assert_ne!(a, b);
    assert_eq!(a, synthetic_latent_objective(&[1.0, 1.0], &anchors, Some(1)));
    assert!((a - synthetic_latent_objective(&[1.0, 1.0], &anchors, None)).abs() < 0.1);
}

#[test]
fn testbed_problem_shape() {
    let cfg = TestbedConfig::desk_scale();
    let tb = LatentTestbed::new(&cfg).unwrap();
    assert_eq!(tb.bounds().dim(), 8);
    assert_eq!(tb.initial_objective_data().len(), cfg.n_anchors);
    assert_eq!(tb.initial_constraint_data().len(), cfg.n_anchors + cfg.negative_points);
    assert!(tb.initial_constraint_data()[..cfg.n_anchors].iter().all(|p| p.label));
    let anchor = tb.decoder().anchors()[0].clone();
    let e = tb.evaluate(&anchor, 3).unwrap();
    assert!(e.constraint_satisfied);
    assert_eq!(e, tb.evaluate(&anchor, 3).unwrap());
    assert!(e.objective.unwrap() < -0.9);
    assert!(LatentTestbed::new(&TestbedConfig { validity_lengthscale: 0.0, ..cfg }).is_err());
}
