use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenic_core::ensemble::{
    bag, boost, boost_traced, member_weight, BagParams, BoostMode, BoostParams, EnsembleModel,
};
use scenic_core::model::save_model;
use scenic_core::trees::{ForestParams, TrainSet, TreeParams};
use scenic_core::{ClassLabel, Learner, Model, RngSeed};

fn classes(k: usize) -> Vec<ClassLabel> {
    ClassLabel::all().take(k).collect()
}

fn noisy_data(n: usize, k: usize, seed: u64) -> TrainSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..3).map(|_| rng.gen_range(0.0..10.0)).collect())
        .collect();
    let labels = rows
        .iter()
        .map(|r| {
            let signal = ((r[0] + r[1]) / 20.0 * k as f64) as usize;
            if rng.gen_bool(0.2) {
                rng.gen_range(0..k)
            } else {
                signal.min(k - 1)
            }
        })
        .collect();
    TrainSet::new(rows, labels, classes(k)).unwrap()
}

fn stump() -> Learner {
    let mut p = TreeParams::unpruned();
    p.max_depth = Some(1);
    Learner::Tree(p)
}

fn training_error(model: &EnsembleModel, data: &TrainSet) -> usize {
    (0..data.len())
        .filter(|&i| model.predict_index(data.row(i)).unwrap() != data.label(i))
        .count()
}

fn json(model: Model) -> Vec<u8> {
    let mut out = Vec::new();
    save_model(&model, &mut out).unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn boosting_weights_stay_normalized(seed in any::<u64>(), n in 10usize..60, resample in any::<bool>()) {
        let data = noisy_data(n, 3, seed);
        let mode = if resample { BoostMode::Resample } else { BoostMode::Reweight };
        let params = BoostParams { iterations: 8, mode };
        let (model, trace) = boost_traced(&Learner::j48(), &data, &params, RngSeed(seed)).unwrap();
        for s in &trace.weight_sums {
            prop_assert!((s - 1.0).abs() < 1e-9, "weight sum {s}");
        }
        prop_assert!(!model.members.is_empty());
        for m in &model.members {
            prop_assert!(m.weight.is_finite() && m.weight >= 0.0);
        }
    }

    #[test]
    fn bagging_ignores_member_order(seed in any::<u64>()) {
        let data = noisy_data(40, 3, seed);
        let params = BagParams { iterations: 5, resample: true };
        let model = bag(&Learner::reptree(), &data, &params, RngSeed(seed)).unwrap();
        let mut reversed = model.clone();
        reversed.members.reverse();
        let mut rotated = model.clone();
        rotated.members.rotate_left(2);
        for i in 0..data.len() {
            let x = data.row(i);
            let want = model.predict(x).unwrap();
            prop_assert_eq!(&reversed.predict(x).unwrap(), &want);
            prop_assert_eq!(&rotated.predict(x).unwrap(), &want);
        }
    }
}

/// The 0/1 training error of AdaBoost.M1 can rise between rounds; the
/// quantity that provably cannot is the bound prod 2*sqrt(e(1-e)), which
/// must also dominate the observed training error at every prefix.
#[test]
fn boosted_training_error_stays_under_shrinking_bound() {
    for seed in 0..5 {
        let data = noisy_data(60, 2, 100 + seed);
        let params = BoostParams {
            iterations: 10,
            mode: BoostMode::Reweight,
        };
        let (model, trace) = boost_traced(&stump(), &data, &params, RngSeed(seed)).unwrap();
        assert_eq!(trace.discarded, 0, "every round must beat 0.5 for this check");
        let rounds = model.members.len() - usize::from(trace.stopped_early);
        let mut bound = 1.0;
        for (m, e) in trace.errors.iter().take(rounds).enumerate() {
            let next = bound * 2.0 * (e * (1.0 - e)).sqrt();
            assert!(next <= bound + 1e-12);
            bound = next;
            let mut prefix = model.clone();
            prefix.members.truncate(m + 1);
            let err = training_error(&prefix, &data) as f64 / data.len() as f64;
            assert!(
                err <= bound + 1e-12,
                "seed {seed}: round {m} error {err} above bound {bound}"
            );
        }
    }
}

#[test]
fn perfect_first_round_gives_single_member() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
    let labels = (0..20).map(|i| usize::from(i >= 10)).collect();
    let data = TrainSet::new(rows, labels, classes(2)).unwrap();
    let model = boost(&Learner::j48(), &data, &BoostParams::default(), RngSeed(3)).unwrap();
    assert_eq!(model.members.len(), 1);
    assert_eq!(model.members[0].weight, member_weight(1.0 / 40.0));
    assert_eq!(member_weight(0.25), 3f64.ln());
}

#[test]
fn same_seed_same_bytes() {
    let data = noisy_data(50, 3, 9);
    let forest = Learner::Forest {
        forest: ForestParams {
            n_trees: 5,
            features_per_split: 2,
            bootstrap: true,
        },
        tree: TreeParams::unpruned(),
    };
    for learner in [Learner::j48(), Learner::reptree(), forest] {
        let bag_params = BagParams {
            iterations: 3,
            resample: true,
        };
        let a = bag(&learner, &data, &bag_params, RngSeed(5)).unwrap();
        let b = bag(&learner, &data, &bag_params, RngSeed(5)).unwrap();
        assert_eq!(json(Model::Ensemble(a)), json(Model::Ensemble(b)));
        for mode in [BoostMode::Reweight, BoostMode::Resample] {
            let p = BoostParams { iterations: 3, mode };
            let a = boost(&learner, &data, &p, RngSeed(5)).unwrap();
            let b = boost(&learner, &data, &p, RngSeed(5)).unwrap();
            assert_eq!(json(Model::Ensemble(a)), json(Model::Ensemble(b)));
        }
    }
}
