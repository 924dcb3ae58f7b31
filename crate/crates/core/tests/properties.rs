use proptest::prelude::*;

use pattern_cse::embeddings::Embedding;
use pattern_cse::lexical_metrics::mer_tokens;
use pattern_cse::losses::{
    hierarchical_triplet, info_nce, BatchRow, ContrastiveBatch, HtConfig, InfoNceConfig,
};
use pattern_cse::repr_metrics::{
    rfd, uniformity, AlignUniformConfig, Trajectory, TrajectorySnapshot,
};
use pattern_cse::train_eval::{spearman, split_heldout, top_k_average};

fn unit_vectors(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), n).prop_filter_map(
        "zero vector",
        |vs| {
            vs.into_iter()
                .map(|v| {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (norm > 1e-3).then(|| v.iter().map(|x| x / norm).collect())
                })
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn spearman_ignores_strictly_monotone_maps(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        scale in 0.1f64..10.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(r) = spearman(&x, &y) {
            let mapped: Vec<f64> = x.iter().map(|v| (v * scale).powi(3) + v).collect();
            // Rounding can merge close values; compare only when order survived.
            let order_kept = x.iter().zip(&mapped).all(|(xi, mi)| {
                x.iter().zip(&mapped).all(|(xj, mj)| xi.partial_cmp(xj) == mi.partial_cmp(mj))
            });
            if order_kept {
                let r2 = spearman(&mapped, &y).unwrap();
                prop_assert!((r - r2).abs() < 1e-12, "{r} vs {r2}");
            }
            prop_assert!((-1.0..=1.0).contains(&r));
            let flipped: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((spearman(&flipped, &y).unwrap() + r).abs() < 1e-12);
        }
    }

    #[test]
    fn heldout_split_partitions_the_records(n in 2usize..300, fraction in 0.01f64..0.9, seed: u64) {
        let records: Vec<usize> = (0..n).collect();
        match split_heldout(&records, fraction, seed) {
            Ok((train, held)) => {
                prop_assert_eq!(held.len(), (fraction * n as f64).ceil() as usize);
                prop_assert!(!train.is_empty());
                let mut all: Vec<usize> = train.iter().chain(&held).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, records.clone());
                prop_assert_eq!(split_heldout(&records, fraction, seed).unwrap(), (train, held));
            }
            Err(_) => prop_assert!((fraction * n as f64).ceil() as usize >= n),
        }
    }

    #[test]
    fn mer_is_a_symmetric_ratio(
        a in prop::collection::vec(0u8..4, 0..12),
        b in prop::collection::vec(0u8..4, 0..12),
    ) {
        match (mer_tokens(&a, &b), mer_tokens(&b, &a)) {
            (Some(x), Some(y)) => {
                prop_assert!((0.0..=1.0).contains(&x.value));
                prop_assert_eq!(x.value, y.value);
                prop_assert_eq!(x.value == 0.0, a == b);
                prop_assert_eq!(x.counts.errors(), y.counts.errors());
            }
            (None, None) => prop_assert!(a.is_empty() && b.is_empty()),
            _ => prop_assert!(false, "asymmetric definedness"),
        }
    }

    #[test]
    fn info_nce_is_nonnegative_and_permutation_invariant(vs in unit_vectors(6, 4), tau in 0.05f64..2.0) {
        let e = |i: usize| Embedding::new(vs[i].clone());
        let rows = vec![BatchRow::pair(e(0), e(1)), BatchRow::pair(e(2), e(3)), BatchRow::pair(e(4), e(5))];
        let mut reversed = rows.clone();
        reversed.reverse();
        let cfg = InfoNceConfig { tau };
        let a = info_nce(&ContrastiveBatch::new(rows).unwrap(), &cfg).unwrap();
        let b = info_nce(&ContrastiveBatch::new(reversed).unwrap(), &cfg).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ht_loss_is_bounded(vs in unit_vectors(4, 5), m1 in 0.0f64..0.5, m2 in 0.0f64..0.5) {
        let e = |i: usize| Embedding::new(vs[i].clone());
        let row = BatchRow { anchor: e(0), positive: e(1), intermediate: Some(e(2)), hard_negative: Some(e(3)), ht: true };
        let cfg = HtConfig { m1, m2, beta: 1.0 };
        let loss = hierarchical_triplet(&ContrastiveBatch::new(vec![row]).unwrap(), &cfg).unwrap().loss;
        // Each hinge is at most 2 + its margin on the unit sphere.
        prop_assert!(loss >= 0.0 && loss <= (4.0 + m1 + m2) / 2.0 + 1e-12);
    }

    #[test]
    fn uniformity_lies_between_bounds(vs in unit_vectors(8, 3), t in 0.5f64..4.0) {
        let xs: Vec<Embedding> = vs.into_iter().map(Embedding::new).collect();
        let u = uniformity(&xs, &AlignUniformConfig { alpha: 2.0, t }).unwrap();
        // Squared distances on the unit sphere lie in [0, 4].
        prop_assert!(u <= 1e-12 && u >= -4.0 * t - 1e-12);
    }

    #[test]
    fn rfd_and_top_k_are_consistent(
        rows in prop::collection::vec((0.0f64..4.0, -4.0f64..0.0, 0.0f64..4.0, -4.0f64..0.0, -1.0f64..1.0), 1..30),
        k in 1usize..10,
    ) {
        let snaps: Vec<TrajectorySnapshot> = rows
            .iter()
            .enumerate()
            .map(|(i, &(ah, uh, ae, ue, sp))| TrajectorySnapshot {
                step: (i as u64 + 1) * 125,
                align_heldout: ah,
                unif_heldout: uh,
                align_eval: ae,
                unif_eval: ue,
                spearman_eval: sp,
            })
            .collect();
        let t = Trajectory::from_snapshots(snaps.clone()).unwrap();
        let r = rfd(&t).unwrap();
        let lo = snaps.iter().map(|s| s.align_heldout - s.align_eval).fold(f64::INFINITY, f64::min);
        let hi = snaps.iter().map(|s| s.align_heldout - s.align_eval).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(r.rfd_a >= lo - 1e-12 && r.rfd_a <= hi + 1e-12);

        let top = top_k_average(&t, k).unwrap();
        let best = snaps.iter().map(|s| s.spearman_eval).fold(f64::NEG_INFINITY, f64::max);
        let mean = snaps.iter().map(|s| s.spearman_eval).sum::<f64>() / snaps.len() as f64;
        prop_assert!(top <= best + 1e-12 && top >= mean - 1e-12);

        let back = Trajectory::read_csv(t.to_csv_string().unwrap().as_bytes(), "roundtrip").unwrap();
        prop_assert_eq!(back, t);
    }
}
