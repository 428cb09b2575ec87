#![allow(dead_code)]

use progst::classifier::{featurize, ClassifierSpec, Model, SparseVector};
use progst::corpus::SentimentLabel;
use progst::langid::Detector;
use progst::pipeline::RunConfig;
use progst::synthgen::{generate, SynthConfig, SynthCorpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// A few hundred sentences of the benchmark, enough for fast pipeline runs.
pub fn small_synth(seed: u64) -> SynthCorpus {
    generate(&SynthConfig { n_source: 200, n_target: 300, seed, ..SynthConfig::default() }).unwrap()
}

pub fn lexicon_detector(c: &SynthCorpus) -> Detector {
    Detector::Lexicon(c.lexicon_a.clone())
}

pub fn small_config(seed: u64) -> RunConfig {
    RunConfig { seed, classifier: ClassifierSpec { feature_dims: 1 << 12, ..ClassifierSpec::default() }, ..RunConfig::default() }
}

pub fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..8);
    (0..n).map(|_| format!("w{}", rng.gen_range(0..40))).collect::<Vec<_>>().join(" ")
}

/// Random weights over a small feature space and a random labeled batch.
pub fn random_model_and_batch(seed: u64) -> (Model, Vec<(SparseVector, SentimentLabel)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ClassifierSpec {
        feature_dims: 1 << 10,
        word_ngrams: vec![1, 2],
        char_ngrams: if rng.gen_bool(0.5) { vec![3] } else { vec![] },
        l2: if rng.gen_bool(0.5) { rng.gen_range(0.0..0.1) } else { 0.0 },
        ..ClassifierSpec::default()
    };
    let mut model = Model::zeros(spec.clone());
    for w in &mut model.weights {
        *w = rng.gen_range(-2.0..2.0);
    }
    let batch = (0..rng.gen_range(1..12))
        .map(|_| {
            let label = if rng.gen_bool(0.5) { SentimentLabel::Positive } else { SentimentLabel::Negative };
            (featurize(&random_text(&mut rng), &spec), label)
        })
        .collect();
    (model, batch)
}

/// Largest absolute gap between the analytic gradient and central finite
/// differences with step `h`, over every coordinate.
pub fn max_gradient_error(model: &Model, batch: &[(SparseVector, SentimentLabel)], h: f64) -> f64 {
    let (_, grad) = progst::classifier::loss_and_gradient(model, batch);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..model.weights.len() {
        let w = model.weights[i];
        probe.weights[i] = w + h;
        let up = progst::classifier::loss_and_gradient(&probe, batch).0;
        probe.weights[i] = w - h;
        let down = progst::classifier::loss_and_gradient(&probe, batch).0;
        probe.weights[i] = w;
        worst = worst.max(((up - down) / (2.0 * h) - grad[i]).abs());
    }
    worst
}

/// F1 of one class as 2TP / (2TP + FP + FN), counted straight from the lists.
pub fn oracle_f1(gold: &[SentimentLabel], pred: &[SentimentLabel], class: SentimentLabel) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (g, p) in gold.iter().zip(pred) {
        match (*g == class, *p == class) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

#[derive(Deserialize)]
struct Reference {
    a: Vec<f64>,
    b: Vec<f64>,
    t: f64,
    p: f64,
    df: usize,
}

pub fn ttest_reference_cases() -> Vec<(Vec<f64>, Vec<f64>, f64, f64, usize)> {
    let refs: Vec<Reference> = serde_json::from_str(include_str!("../fixtures/ttest_reference.json")).unwrap();
    refs.into_iter().map(|r| (r.a, r.b, r.t, r.p, r.df)).collect()
}
