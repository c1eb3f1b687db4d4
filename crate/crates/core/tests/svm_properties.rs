use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use authorprof::svm::{train_binary, train_one_vs_one, GammaMode, KernelParams, TrainOptions};
use authorprof::SparseVector;

const DIM: usize = 6;

/// Distinct count vectors with at least one row of each sign.
fn dataset() -> impl Strategy<Value = (Vec<SparseVector>, Vec<i8>)> {
    prop::collection::btree_set(prop::collection::vec(0u32..4, DIM), 4..24)
        .prop_flat_map(|rows: BTreeSet<Vec<u32>>| {
            let n = rows.len();
            (Just(rows), prop::collection::vec(prop::bool::ANY, n))
        })
        .prop_map(|(rows, signs)| {
            let rows: Vec<SparseVector> = rows.iter().map(|r| SparseVector::from_dense(r)).collect();
            let mut y: Vec<i8> = signs.iter().map(|&s| if s { 1 } else { -1 }).collect();
            y[0] = 1;
            y[1] = -1;
            (rows, y)
        })
}

fn params(c: f64) -> KernelParams {
    KernelParams {
        gamma: GammaMode::Auto,
        c,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solution_is_feasible_and_satisfies_kkt((rows, y) in dataset(), c in 0.1f64..10.0) {
        let opts = TrainOptions::default();
        let m = train_binary(&rows, &y, &params(c), &opts).unwrap();
        prop_assert!(m.info.converged);

        let alpha_y: BTreeMap<&SparseVector, f64> =
            m.support_vectors.iter().zip(m.dual_coefs.iter().copied()).collect();
        prop_assert!(m.dual_coefs.iter().sum::<f64>().abs() < 1e-9);

        let slack = opts.tol + 1e-9;
        for (x, &yi) in rows.iter().zip(&y) {
            let coef = alpha_y.get(x).copied().unwrap_or(0.0);
            let alpha = coef * yi as f64;
            prop_assert!(alpha >= 0.0 && alpha <= c * (1.0 + 1e-12), "alpha {} outside [0, {}]", alpha, c);
            let margin = yi as f64 * m.decision_function(x).unwrap();
            if alpha < 1e-8 * c {
                prop_assert!(margin >= 1.0 - slack, "alpha=0 with margin {}", margin);
            } else if alpha > c * (1.0 - 1e-8) {
                prop_assert!(margin <= 1.0 + slack, "alpha=C with margin {}", margin);
            } else {
                prop_assert!((margin - 1.0).abs() <= slack, "free alpha with margin {}", margin);
            }
        }
    }

    #[test]
    fn training_order_does_not_matter(
        (rows, y) in dataset(),
        seed in any::<u64>(),
        probes in prop::collection::vec(prop::collection::vec(0u32..5, DIM), 1..6),
    ) {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        // deterministic shuffle from the drawn seed
        let mut s = seed | 1;
        for i in (1..order.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            order.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let rows2: Vec<SparseVector> = order.iter().map(|&i| rows[i].clone()).collect();
        let y2: Vec<i8> = order.iter().map(|&i| y[i]).collect();

        let a = train_binary(&rows, &y, &params(1.0), &TrainOptions::default()).unwrap();
        let b = train_binary(&rows2, &y2, &params(1.0), &TrainOptions::default()).unwrap();
        for p in probes.iter().map(|p| SparseVector::from_dense(p)).chain(rows.iter().cloned()) {
            let (da, db) = (a.decision_function(&p).unwrap(), b.decision_function(&p).unwrap());
            prop_assert!((da - db).abs() <= 1e-9, "{} vs {}", da, db);
        }

        let labels: Vec<&str> = y.iter().map(|&v| if v > 0 { "pos" } else { "neg" }).collect();
        let labels2: Vec<&str> = order.iter().map(|&i| labels[i]).collect();
        let ma = train_one_vs_one(&rows, &labels, &params(1.0), &TrainOptions::default()).unwrap();
        let mb = train_one_vs_one(&rows2, &labels2, &params(1.0), &TrainOptions::default()).unwrap();
        prop_assert_eq!(ma.predict_many(&rows).unwrap(), mb.predict_many(&rows).unwrap());
    }
}

#[test]
fn iteration_cap_is_reported_not_silent() {
    let rows: Vec<SparseVector> = (0..30u32)
        .map(|i| SparseVector::from_dense(&[i % 7, (i * 3) % 5, i % 2, (i / 3) % 4]))
        .collect();
    let y: Vec<i8> = (0..30).map(|i| if (i * 7) % 3 == 0 { 1 } else { -1 }).collect();
    let opts = TrainOptions {
        tol: f64::MIN_POSITIVE,
        max_passes: 1,
        parallel: false,
    };
    let m = train_binary(&rows, &y, &params(100.0), &opts).unwrap();
    assert!(!m.info.converged, "{:?}", m.info);
    assert!(m.info.violation > opts.tol);
    approx::assert_relative_eq!(m.dual_coefs.iter().sum::<f64>(), 0.0, epsilon = 1e-9);
}
