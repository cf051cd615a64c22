use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsat_core::dataset::*;
use tsat_core::evaluation::*;
use tsat_core::selection::*;

/// Repeated arg-max over summed similarities; no sorting involved.
fn brute_force_rank(train: &[Vec<f64>], query: &[Vec<f64>], k: usize) -> Vec<usize> {
    let score = |t: &Vec<f64>| -> f64 {
        query
            .iter()
            .map(|q| {
                let d2: f64 = t.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                1.0 / (d2 + 1.0).sqrt()
            })
            .sum::<f64>()
            / query.len() as f64
    };
    let scores: Vec<f64> = train.iter().map(score).collect();
    let mut taken = vec![false; train.len()];
    let mut out = Vec::new();
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..train.len() {
            if !taken[i] && best.is_none_or(|b| scores[i] > scores[b]) {
                best = Some(i);
            }
        }
        taken[best.unwrap()] = true;
        out.push(best.unwrap());
    }
    out
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, grid: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if grid {
                        rng.random_range(0..3) as f64
                    } else {
                        rng.random::<f64>() * 2.0 - 1.0
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn ranking_matches_brute_force_oracle() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..40);
        let d = rng.random_range(1..6);
        // Every other instance uses a coarse grid so that ties occur.
        let grid = seed % 2 == 0;
        let train = random_rows(&mut rng, n, d, grid);
        let nq = rng.random_range(1..5);
        let query = random_rows(&mut rng, nq, d, grid);
        let k = rng.random_range(0..=n);
        let got = rank_indices(&FeatureMatrix::from_rows(&train), &FeatureMatrix::from_rows(&query), k).unwrap();
        assert_eq!(got, brute_force_rank(&train, &query, k), "seed {seed}");
    }
}

proptest! {
    #[test]
    fn rankings_are_nested(seed in any::<u64>(), k in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = FeatureMatrix::from_rows(&random_rows(&mut rng, 20, 3, true));
        let query = FeatureMatrix::from_rows(&random_rows(&mut rng, 3, 3, true));
        let a = rank_indices(&train, &query, k).unwrap();
        let b = rank_indices(&train, &query, k + 1).unwrap();
        prop_assert_eq!(&a[..], &b[..k]);
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(a in prop::collection::vec(-1e3f64..1e3, 4), b in prop::collection::vec(-1e3f64..1e3, 4)) {
        let s = similarity(&a, &b).unwrap().0;
        prop_assert_eq!(s, similarity(&b, &a).unwrap().0);
        prop_assert!(s > 0.0 && s <= 1.0);
    }
}

#[test]
fn random_subsamples_look_representative() {
    let schema = Arc::new(VariableSchema::default_survey());
    let full = synthesize(
        schema.clone(),
        &MarginalSpec::default_survey(),
        &SynthSpec {
            n: 874,
            seed: 11,
            label_rule: "linear".into(),
            noise_sd: 0.5,
        },
    )
    .unwrap();
    let mut pass = 0;
    for rep in 0..100 {
        let s = random_support(&full, 100, 1000 + rep).unwrap();
        let col = schema.index_of("age").unwrap();
        let sample: Vec<f64> = s.members().iter().map(|r| r.values[col]).collect();
        let res = ks_two_sample("age", &sample, &full.column(col)).unwrap();
        if res.p_value > 0.05 {
            pass += 1;
        }
    }
    assert!(pass >= 90, "{pass}/100");
}

#[test]
fn metrics_match_direct_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.random_range(1..100);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..7.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..8.0)).collect();
        let mut se = 0.0;
        let mut ape = 0.0;
        for i in 0..n {
            se += (p[i] - y[i]).powi(2);
            ape += ((p[i] - y[i]) / y[i]).abs();
        }
        let m = evaluate(&y, &p).unwrap();
        assert!((m.mse - se / n as f64).abs() < 1e-12);
        assert!((m.mape - ape / n as f64).abs() < 1e-12);
    }
}

#[test]
fn metric_hand_case() {
    let m = evaluate(&[4.0, 5.0, 2.0], &[3.0, 5.0, 3.0]).unwrap();
    assert!((m.mse - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.mape - (0.25 + 0.5) / 3.0).abs() < 1e-12);
    assert!(evaluate(&[0.0], &[1.0]).is_err());
}
