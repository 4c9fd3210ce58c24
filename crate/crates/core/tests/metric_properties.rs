mod common;

use common::pairwise_auc;
use proptest::collection::vec;
use proptest::prelude::*;
use sketchbalance::data::Class;
use sketchbalance::metrics::{confusion, roc_auc, PositiveClass};

fn labeled_scores() -> impl Strategy<Value = (Vec<f64>, Vec<Class>)> {
    // Scores from a small grid so ties are common.
    (2usize..200)
        .prop_flat_map(|n| (vec(0u8..12, n), vec(any::<bool>(), n)))
        .prop_map(|(levels, flags)| {
            let scores = levels.iter().map(|&l| f64::from(l) / 11.0).collect();
            let mut truth: Vec<Class> = flags
                .iter()
                .map(|&b| if b { Class::Minority } else { Class::Majority })
                .collect();
            truth[0] = Class::Majority;
            truth[1] = Class::Minority;
            (scores, truth)
        })
}

fn positive() -> impl Strategy<Value = PositiveClass> {
    prop_oneof![Just(PositiveClass::Majority), Just(PositiveClass::Minority)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn auc_equals_pairwise_statistic((scores, truth) in labeled_scores(), pos in positive()) {
        let (_, auc) = roc_auc(&scores, &truth, pos).unwrap();
        let oracle = pairwise_auc(&scores, &truth);
        prop_assert!((auc - oracle).abs() < 1e-12, "{} vs {}", auc, oracle);
    }

    #[test]
    fn auc_ignores_increasing_maps((scores, truth) in labeled_scores(), pos in positive()) {
        let (_, a) = roc_auc(&scores, &truth, pos).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        let (_, b) = roc_auc(&mapped, &truth, pos).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn roc_curve_is_monotone((scores, truth) in labeled_scores(), pos in positive()) {
        let (curve, _) = roc_auc(&scores, &truth, pos).unwrap();
        prop_assert_eq!(curve.points.first().copied(), Some((0.0, 0.0)));
        prop_assert_eq!(curve.points.last().copied(), Some((1.0, 1.0)));
        for w in curve.points.windows(2) {
            prop_assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
        }
        for &(f, t) in &curve.points {
            prop_assert!((0.0..=1.0).contains(&f) && (0.0..=1.0).contains(&t));
        }
    }

    #[test]
    fn accuracy_is_weighted_recall(
        (truth, pred) in (1usize..300).prop_flat_map(|n| (vec(any::<bool>(), n), vec(any::<bool>(), n))),
        pos in positive(),
    ) {
        let cls = |b: &bool| if *b { Class::Minority } else { Class::Majority };
        let truth: Vec<Class> = truth.iter().map(cls).collect();
        let pred: Vec<Class> = pred.iter().map(cls).collect();
        let c = confusion(&truth, &pred, pos).unwrap();
        let n = truth.len() as f64;
        let n_pos = truth.iter().filter(|&&t| t == pos.class()).count() as f64;
        prop_assert_eq!(c.tp + c.fn_, n_pos as usize);
        let weighted = c.sensitivity() * n_pos / n + c.specificity() * (n - n_pos) / n;
        prop_assert!((c.accuracy() - weighted).abs() < 1e-12);
    }
}
