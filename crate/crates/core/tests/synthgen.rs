use progst::corpus::DatasetKind;
use progst::langid::f_eng;
use progst::synthgen::{generate, SynthConfig};
use proptest::prelude::*;

#[test]
fn default_benchmark_digest_is_frozen() {
    let golden = include_str!("golden/synth_default_seed0.sha256").trim();
    let corpus = generate(&SynthConfig::default()).unwrap();
    assert_eq!(corpus.digest(), golden);
    assert_eq!(corpus.source.len(), 500);
    assert_eq!(corpus.target.len(), 6000);
}

#[test]
fn default_target_mixes_are_bimodal() {
    let corpus = generate(&SynthConfig::default()).unwrap();
    let fractions: Vec<f64> = corpus.target.examples().iter().map(|e| f_eng(&e.text, &corpus.lexicon_a).value).collect();
    let high = fractions.iter().filter(|&&f| (0.6..=0.8).contains(&f)).count();
    let low = fractions.iter().filter(|&&f| (0.05..=0.25).contains(&f)).count();
    assert_eq!(high + low, fractions.len());
    assert!(high > 2700 && low > 2700, "{high} {low}");
}

#[test]
fn target_gold_is_hidden_from_the_pipeline_side() {
    let corpus = generate(&SynthConfig { n_source: 50, n_target: 80, ..SynthConfig::default() }).unwrap();
    assert_eq!(corpus.source.kind, DatasetKind::SourceLabeled);
    assert_eq!(corpus.target.kind, DatasetKind::TargetWithHiddenGold);
    assert!(corpus.target.without_gold().examples().iter().all(|e| e.gold.is_none()));
    assert!(corpus.source.examples().iter().all(|e| f_eng(&e.text, &corpus.lexicon_a).value == 1.0));
}

fn mixes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::btree_set(0u32..=10, 2..5).prop_map(|s| s.into_iter().map(|r| (r as f64 / 10.0, 1.0)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lower_mix_means_lower_fraction(mix in mixes(), seed in any::<u64>()) {
        let config = SynthConfig {
            n_source: 20,
            n_target: 150,
            mix_ratio_distribution: mix,
            sentence_length: (12, 20),
            seed,
            ..SynthConfig::default()
        };
        let corpus = generate(&config).unwrap();
        let f: Vec<f64> = corpus.target.examples().iter().map(|e| f_eng(&e.text, &corpus.lexicon_a).value).collect();
        for i in 0..f.len() {
            for j in 0..f.len() {
                if corpus.target_mix[i] < corpus.target_mix[j] {
                    prop_assert!(f[i] < f[j]);
                }
            }
        }
    }

    #[test]
    fn same_config_same_corpus(seed in any::<u64>()) {
        let config = SynthConfig { n_source: 30, n_target: 40, seed, ..SynthConfig::default() };
        prop_assert_eq!(generate(&config).unwrap().digest(), generate(&config).unwrap().digest());
    }
}
