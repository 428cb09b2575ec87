mod common;

use indexmap::IndexMap;
use progst::classifier::Prediction;
use progst::corpus::SentimentLabel;
use progst::evaluation::{
    confusion_from_pairs, evaluate, f1_scores, ood_fraction, ood_threshold, paired_t_test, ConfusionCounts,
};
use proptest::prelude::*;

use SentimentLabel::{Negative as N, Positive as P};

fn label(b: bool) -> SentimentLabel {
    if b {
        P
    } else {
        N
    }
}

fn pairs() -> impl Strategy<Value = Vec<(bool, bool)>> {
    prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn metrics_match_brute_force(pairs in pairs()) {
        let gold: Vec<_> = pairs.iter().map(|p| label(p.0)).collect();
        let pred: Vec<_> = pairs.iter().map(|p| label(p.1)).collect();
        let m = f1_scores(&confusion_from_pairs(gold.iter().copied().zip(pred.iter().copied()))).unwrap();
        let n = gold.len() as f64;
        let f = [common::oracle_f1(&gold, &pred, P), common::oracle_f1(&gold, &pred, N)];
        let support = [gold.iter().filter(|&&g| g == P).count() as f64, gold.iter().filter(|&&g| g == N).count() as f64];
        let correct = gold.iter().zip(&pred).filter(|(g, p)| g == p).count() as f64;
        prop_assert!((m.macro_f1 - (f[0] + f[1]) / 2.0).abs() <= 1e-12);
        prop_assert!((m.weighted_f1 - (f[0] * support[0] + f[1] * support[1]) / n).abs() <= 1e-12);
        prop_assert!((m.micro_f1 - correct / n).abs() <= 1e-12);
        prop_assert!((m.micro_f1 - m.accuracy).abs() <= 1e-12);
    }

    #[test]
    fn relabeling_swaps_per_class_scores(pairs in pairs()) {
        let a = f1_scores(&confusion_from_pairs(pairs.iter().map(|p| (label(p.0), label(p.1))))).unwrap();
        let b = f1_scores(&confusion_from_pairs(pairs.iter().map(|p| (label(!p.0), label(!p.1))))).unwrap();
        prop_assert!((a.macro_f1 - b.macro_f1).abs() <= 1e-12);
        prop_assert!((a.micro_f1 - b.micro_f1).abs() <= 1e-12);
        prop_assert_eq!(a.per_class_f1[&P], b.per_class_f1[&N]);
        prop_assert_eq!(a.per_class_f1[&N], b.per_class_f1[&P]);
    }

    #[test]
    fn balanced_support_makes_weighted_equal_macro(half in prop::collection::vec((any::<bool>(), any::<bool>()), 1..100)) {
        let pairs = half.iter().map(|&(_, p)| (P, label(p))).chain(half.iter().map(|&(_, p)| (N, label(p))));
        let m = f1_scores(&confusion_from_pairs(pairs)).unwrap();
        prop_assert!((m.macro_f1 - m.weighted_f1).abs() <= 1e-12);
    }

    #[test]
    fn disjoint_parts_merge_to_the_whole(pairs in pairs(), cut in 0..200usize) {
        let cut = cut.min(pairs.len());
        let conv = |v: &[(bool, bool)]| confusion_from_pairs(v.iter().map(|p| (label(p.0), label(p.1))));
        let whole: ConfusionCounts = conv(&pairs);
        prop_assert_eq!(conv(&pairs[..cut]).merge(&conv(&pairs[cut..])), whole);
        prop_assert_eq!(whole.total(), pairs.len() as u64);
    }

    #[test]
    fn threshold_law(values in prop::collection::vec(0.5..=1.0f64, 1..300), alpha in 0.001..0.999f64) {
        let p = ood_threshold(&values, alpha).unwrap();
        let below = values.iter().filter(|&&v| v < p).count();
        prop_assert!(below as f64 <= alpha * values.len() as f64);
        prop_assert_eq!(ood_fraction(&values, p).unwrap(), below as f64 / values.len() as f64);
    }

    #[test]
    fn threshold_is_tight_for_distinct_values(values in prop::collection::btree_set(0u32..1_000_000, 1..300), alpha in 0.001..0.999f64) {
        let values: Vec<f64> = values.into_iter().map(|v| v as f64 / 1e6).collect();
        let p = ood_threshold(&values, alpha).unwrap();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = sorted.iter().position(|&v| v == p).unwrap();
        if rank + 1 < sorted.len() {
            let next = sorted[rank + 1];
            let below = values.iter().filter(|&&v| v < next).count();
            prop_assert!(below as f64 > alpha * values.len() as f64);
        }
    }
}

#[test]
fn evaluate_uses_ids_not_positions() {
    let preds: IndexMap<String, Prediction> =
        [("b", 0.2), ("a", 0.9)].into_iter().map(|(id, p)| (id.to_string(), Prediction::from_positive(p))).collect();
    let golds: IndexMap<String, SentimentLabel> = [("a", P), ("b", N)].into_iter().map(|(id, g)| (id.to_string(), g)).collect();
    assert_eq!(evaluate(&preds, &golds).unwrap().accuracy, 1.0);
}

#[test]
fn t_test_matches_reference_fixtures() {
    let cases = common::ttest_reference_cases();
    assert_eq!(cases.len(), 20);
    for (a, b, t, p, df) in cases {
        let r = paired_t_test(&a, &b).unwrap();
        assert_eq!(r.df, df);
        assert!((r.t - t).abs() < 5e-5, "t {} vs {t}", r.t);
        assert!((r.p - p).abs() < 5e-5, "p {} vs {p}", r.p);
    }
}

#[test]
fn constant_differences_have_no_test() {
    assert!(paired_t_test(&[2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0]).is_err());
}
