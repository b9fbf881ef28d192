mod common;

use proptest::prelude::*;
use scenic_core::sampling::{balance, smote_class, BalanceTarget, SmoteParams};
use scenic_core::{ClassLabel, Dataset, FeatureVector, RngSeed};

fn rows_of(points: &[[f64; 11]], rating: f64) -> Vec<FeatureVector> {
    points
        .iter()
        .enumerate()
        .map(|(i, &values)| FeatureVector {
            location_id: format!("r{i}"),
            values,
            label: ClassLabel::from_rating(rating).unwrap(),
            synthetic: false,
        })
        .collect()
}

proptest! {
    #[test]
    fn synthetic_points_lie_on_neighbor_segments(
        points in prop::collection::vec(prop::array::uniform11(-100.0f64..100.0), 1..12),
        n in 0usize..25,
        k in 1usize..7,
        seed in any::<u64>(),
    ) {
        let rows = rows_of(&points, 3.0);
        let originals: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
        let out = smote_class(&rows, n, k, RngSeed(seed)).unwrap();
        prop_assert_eq!(out.len(), n);
        for s in &out {
            prop_assert!(s.synthetic);
            prop_assert!(common::on_any_smote_segment(&s.values, &originals, k, 1e-9));
            // Inside the class bounding box, hence inside its convex hull's box.
            for f in 0..11 {
                let lo = originals.iter().map(|p| p[f]).fold(f64::INFINITY, f64::min);
                let hi = originals.iter().map(|p| p[f]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(s.values[f] >= lo - 1e-9 && s.values[f] <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn balance_keeps_originals_and_hits_targets(
        sizes in prop::collection::vec(1usize..15, 2..5),
        target in prop_oneof![Just(None), (15usize..30).prop_map(Some)],
        seed in any::<u64>(),
    ) {
        let ratings = [2.0, 3.0, 4.0, 5.0];
        let mut rows = Vec::new();
        for (c, &size) in sizes.iter().enumerate() {
            let points: Vec<[f64; 11]> = (0..size).map(|i| [i as f64 * 0.5 + c as f64; 11]).collect();
            rows.extend(rows_of(&points, ratings[c]));
        }
        let ds = Dataset::new(rows);
        let params = SmoteParams {
            k_neighbors: 5,
            target: target.map_or(BalanceTarget::Majority, BalanceTarget::Count),
        };
        let out = balance(&ds, &params, RngSeed(seed)).unwrap();
        prop_assert_eq!(&out.rows[..ds.len()], &ds.rows[..]);
        let want = target.unwrap_or(*sizes.iter().max().unwrap());
        prop_assert!(out.class_counts().iter().all(|&c| c == want));
    }
}
