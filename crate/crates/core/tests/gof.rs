use std::sync::Arc;

use proptest::prelude::*;
use tailwright::dist::{
    sample, DiscretePowerLawModel, ExponentialModel, LognormalModel, ModelFamily, ModelRegistry,
    WaitingTimeDistribution,
};
use tailwright::gof::{
    cross_validated_bic, dstar_statistic, fold_partition, kl_divergence, ks_statistic, EmpiricalDist,
    ModelComparison,
};
use tailwright::ingest::WaitingTimes;

fn integer_sample(model: &dyn WaitingTimeDistribution, n: usize, seed: u64) -> Vec<u64> {
    sample(model, n, seed)
        .unwrap()
        .into_iter()
        .map(|x| (x.ceil() as u64).max(1))
        .collect()
}

proptest! {
    #[test]
    fn kl_is_non_negative(values in prop::collection::vec(1u64..60, 1..200), mean in 1.0f64..50.0) {
        let emp = EmpiricalDist::from_values(&values).unwrap();
        let model = ExponentialModel::new(1.0 / mean).unwrap();
        // non-negative up to the mass the unit bins leave below 0.5
        prop_assert!(kl_divergence(&emp, &model) >= -1e-12 + (1.0 - model.sf(0.5).unwrap()).log2());
        let pl = DiscretePowerLawModel::new(2.5, 1).unwrap();
        prop_assert!(kl_divergence(&emp, &pl) >= -1e-12);
    }

    #[test]
    fn ks_ignores_duplication(values in prop::collection::vec(1u64..100, 1..100), k in 2usize..5) {
        let model = LognormalModel::new(1.0, 1.0).unwrap();
        let a = ks_statistic(&EmpiricalDist::from_values(&values).unwrap(), &model, None).unwrap();
        let doubled: Vec<u64> = values.iter().flat_map(|&v| std::iter::repeat_n(v, k)).collect();
        let b = ks_statistic(&EmpiricalDist::from_values(&doubled).unwrap(), &model, None).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dstar_dominates_ks_on_its_points(values in prop::collection::vec(5u64..500, 10..300), alpha in 1.5f64..4.0) {
        let model = DiscretePowerLawModel::new(alpha, 5).unwrap();
        let emp = EmpiricalDist::from_values(&values).unwrap();
        prop_assume!(emp.support.len() >= 2);
        let d = dstar_statistic(&emp, &model, 5).unwrap();
        let n = emp.n as f64;
        let mut cum = 0;
        let mut ks = 0.0f64;
        for (&x, &c) in emp.support.iter().zip(&emp.counts) {
            cum += c;
            let p = cum as f64 / n;
            if p < 1.0 {
                ks = ks.max((p - model.cdf(x as f64).unwrap()).abs());
            }
        }
        prop_assert!(d >= ks);
    }

    #[test]
    fn folds_partition_the_indices(n in 2usize..500, folds in 2usize..10, seed in any::<u64>()) {
        prop_assume!(n >= folds);
        let parts = fold_partition(n, folds, seed).unwrap();
        prop_assert_eq!(parts.len(), folds);
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }
}

fn families(names: &[&str]) -> Vec<Arc<dyn ModelFamily>> {
    ModelRegistry::with_defaults().select(names).unwrap()
}

#[test]
fn lognormal_data_prefers_lognormal() {
    let model = LognormalModel::new(2.5, 0.9).unwrap();
    let data = WaitingTimes::new("LN", integer_sample(&model, 20_000, 4)).unwrap();
    let c = cross_validated_bic(&data, &families(&["exponential", "weibull", "lognormal"]), 5, 9).unwrap();
    assert_eq!(c.winner_by_kl, "lognormal");
    assert_eq!(c.winner_by_bic, "lognormal");
    assert!(c.fold_winners.iter().all(|w| w == "lognormal"));
}

#[test]
fn comparison_json_round_trip_keeps_infinities() {
    let model = ExponentialModel::new(0.1).unwrap();
    let data = WaitingTimes::new("E", integer_sample(&model, 2_000, 1)).unwrap();
    let c = cross_validated_bic(&data, &families(&["exponential", "powerlaw"]), 5, 2).unwrap();
    let pl = c.score("powerlaw").unwrap();
    // held-out points below the cutoff have zero likelihood
    assert!(pl.bic_cv.is_infinite());
    let json = serde_json::to_string(&c).unwrap();
    let back: ModelComparison = serde_json::from_str(&json).unwrap();
    assert_eq!(back, c);
}

#[test]
fn cross_validation_is_seeded() {
    let model = ExponentialModel::new(0.2).unwrap();
    let data = WaitingTimes::new("E", integer_sample(&model, 1_000, 3)).unwrap();
    let fams = families(&["exponential", "weibull"]);
    assert_eq!(
        cross_validated_bic(&data, &fams, 5, 1).unwrap(),
        cross_validated_bic(&data, &fams, 5, 1).unwrap()
    );
    assert_ne!(
        cross_validated_bic(&data, &fams, 5, 1).unwrap().models[0].bic_folds,
        cross_validated_bic(&data, &fams, 5, 2).unwrap().models[0].bic_folds
    );
}
