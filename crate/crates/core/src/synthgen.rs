//! Synthetic two-language sentiment benchmark.
//!
//! Language A plays the resource-rich role, language B the low-resource one.
//! Words are consonant-vowel syllable strings; the two languages draw their
//! consonants from disjoint sets, so no surface form is shared.
//!
//! Each vocabulary holds positive and negative sentiment words plus neutral
//! filler. A sentence gets a latent polarity; each of its tokens is a
//! sentiment word with probability `sentiment_word_fraction`, agreeing with
//! the latent polarity with probability `polarity_agreement`. One sentiment
//! slot is toggled when the count comes out even, so every sentence has an
//! odd number of sentiment words. The gold label is the majority polarity of
//! the sentiment words, flipped with probability `label_noise`.
//!
//! Source sentences are entirely language A. A target sentence draws a mix
//! ratio `r` and uses `r * len` (rounded half up) language-A tokens at random
//! positions. Mix ratios must be spaced by more than `1 / min_len`, which
//! keeps the order of mix ratios and of resource-rich fractions identical.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{round_half_up, Dataset, DatasetKind, Example, SentimentLabel};
use crate::langid::Lexicon;
use crate::seed;
use crate::{Error, Result};

const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];
const CONSONANTS_A: [char; 8] = ['p', 't', 'k', 'm', 'n', 's', 'l', 'r'];
const CONSONANTS_B: [char; 8] = ['b', 'd', 'g', 'h', 'j', 'v', 'z', 'f'];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub vocab_size_per_lang: usize,
    pub sentiment_word_fraction: f64,
    pub polarity_agreement: f64,
    pub sentence_length: (usize, usize),
    /// `(ratio, weight)` pairs for the target's language-A share.
    pub mix_ratio_distribution: Vec<(f64, f64)>,
    pub n_source: usize,
    pub n_target: usize,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// The benchmark used by the directional tests: two spikes of mix
    /// ratios, one high and one low.
    fn default() -> Self {
        SynthConfig {
            vocab_size_per_lang: 100,
            sentiment_word_fraction: 0.5,
            polarity_agreement: 0.8,
            sentence_length: (8, 16),
            mix_ratio_distribution: vec![(0.7, 1.0), (0.15, 1.0)],
            n_source: 500,
            n_target: 6000,
            label_noise: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let (lo, hi) = self.sentence_length;
        if lo == 0 || lo > hi {
            return bad(format!("sentence_length ({lo}, {hi}) must satisfy 1 <= min <= max"));
        }
        if !(self.sentiment_word_fraction > 0.0 && self.sentiment_word_fraction < 1.0) {
            return bad(format!("sentiment_word_fraction {} outside (0, 1)", self.sentiment_word_fraction));
        }
        if !(0.0..=1.0).contains(&self.polarity_agreement) {
            return bad(format!("polarity_agreement {} outside [0, 1]", self.polarity_agreement));
        }
        if !(0.0..=0.5).contains(&self.label_noise) {
            return bad(format!("label_noise {} outside [0, 0.5]", self.label_noise));
        }
        let (n_sent, n_neutral) = self.vocab_split();
        if n_sent < 2 || n_neutral < 1 {
            return bad(format!(
                "vocabulary of {} cannot hold both polarities and neutral filler",
                self.vocab_size_per_lang
            ));
        }
        if self.vocab_size_per_lang > 20_000 {
            return bad("vocab_size_per_lang above 20000".into());
        }
        if self.n_source < 2 || self.n_target < 1 {
            return bad("need at least 2 source and 1 target sentences".into());
        }
        if self.mix_ratio_distribution.is_empty() {
            return bad("mix_ratio_distribution is empty".into());
        }
        for &(r, w) in &self.mix_ratio_distribution {
            if !(0.0..=1.0).contains(&r) || !(w > 0.0 && w.is_finite()) {
                return bad(format!("mix ratio entry ({r}, {w}) needs ratio in [0, 1] and positive weight"));
            }
        }
        let mut ratios: Vec<f64> = self.mix_ratio_distribution.iter().map(|p| p.0).collect();
        ratios.sort_by(f64::total_cmp);
        for w in ratios.windows(2) {
            if w[1] - w[0] <= 1.0 / lo as f64 {
                return bad(format!(
                    "mix ratios {} and {} are closer than 1/{lo}; fractions could reorder",
                    w[0], w[1]
                ));
            }
        }
        Ok(())
    }

    /// Sentiment word count (both polarities) and neutral count per language.
    fn vocab_split(&self) -> (usize, usize) {
        let n_sent = round_half_up(self.vocab_size_per_lang as f64 * self.sentiment_word_fraction)
            .min(self.vocab_size_per_lang);
        (n_sent, self.vocab_size_per_lang - n_sent)
    }
}

/// Vocabulary of one language.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub neutral: Vec<String>,
}

impl Vocabulary {
    pub fn all(&self) -> impl Iterator<Item = &str> {
        self.positive.iter().chain(&self.negative).chain(&self.neutral).map(String::as_str)
    }

    fn sentiment(&self, label: SentimentLabel) -> &[String] {
        match label {
            SentimentLabel::Positive => &self.positive,
            SentimentLabel::Negative => &self.negative,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub source: Dataset,
    pub target: Dataset,
    pub lexicon_a: Lexicon,
    /// Mix ratio drawn for each target sentence, in target order.
    pub target_mix: Vec<f64>,
    pub vocab_a: Vocabulary,
    pub vocab_b: Vocabulary,
}

impl SynthCorpus {
    /// SHA-256 over the source and target (as TSV, gold included) and the
    /// sorted lexicon.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for d in [&self.source, &self.target] {
            h.update(d.name.as_bytes());
            h.update(b"\n");
            for e in d.examples() {
                let label = e.gold.map_or("", SentimentLabel::as_str);
                h.update(format!("{}\t{}\t{}\n", e.id, e.text, label).as_bytes());
            }
        }
        for w in self.lexicon_a.words() {
            h.update(w.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

fn vocabulary(consonants: &[char], config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vocabulary {
    let mut words = BTreeSet::new();
    let mut order = Vec::with_capacity(config.vocab_size_per_lang);
    while order.len() < config.vocab_size_per_lang {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::with_capacity(2 * syllables);
        for _ in 0..syllables {
            w.push(*consonants.choose(rng).unwrap());
            w.push(*VOWELS.choose(rng).unwrap());
        }
        if words.insert(w.clone()) {
            order.push(w);
        }
    }
    let (n_sent, _) = config.vocab_split();
    let n_pos = n_sent / 2;
    let neutral = order.split_off(n_sent);
    let negative = order.split_off(n_pos);
    Vocabulary { positive: order, negative, neutral }
}

fn sentence(
    langs: &[bool],
    vocab_a: &Vocabulary,
    vocab_b: &Vocabulary,
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> (String, SentimentLabel) {
    let latent = if rng.gen_bool(0.5) { SentimentLabel::Positive } else { SentimentLabel::Negative };
    let mut sentiment: Vec<bool> = langs.iter().map(|_| rng.gen_bool(config.sentiment_word_fraction)).collect();
    // An odd number of sentiment words, so the majority is never tied.
    if sentiment.iter().filter(|&&s| s).count() % 2 == 0 {
        let on: Vec<usize> = (0..langs.len()).filter(|&j| sentiment[j]).collect();
        let off: Vec<usize> = (0..langs.len()).filter(|&j| !sentiment[j]).collect();
        if !on.is_empty() && (off.is_empty() || rng.gen_bool(0.5)) {
            sentiment[*on.choose(rng).unwrap()] = false;
        } else {
            sentiment[*off.choose(rng).unwrap()] = true;
        }
    }
    let mut votes = [0usize; 2];
    let mut words = Vec::with_capacity(langs.len());
    for (&is_a, &is_sent) in langs.iter().zip(&sentiment) {
        let vocab = if is_a { vocab_a } else { vocab_b };
        let word = if is_sent {
            let polarity = if rng.gen_bool(config.polarity_agreement) { latent } else { latent.other() };
            votes[polarity.index()] += 1;
            vocab.sentiment(polarity).choose(rng).unwrap()
        } else {
            vocab.neutral.choose(rng).unwrap()
        };
        words.push(word.as_str());
    }
    let mut gold = if votes[0] >= votes[1] { SentimentLabel::Positive } else { SentimentLabel::Negative };
    if config.label_noise > 0.0 && rng.gen_bool(config.label_noise) {
        gold = gold.other();
    }
    (words.join(" "), gold)
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let root = config.seed;
    let vocab_a = vocabulary(&CONSONANTS_A, config, &mut seed::rng(root, "synth_vocab", 0));
    let vocab_b = vocabulary(&CONSONANTS_B, config, &mut seed::rng(root, "synth_vocab", 1));
    let (lo, hi) = config.sentence_length;

    let mut rng = seed::rng(root, "synth_source", 0);
    let mut source = Vec::with_capacity(config.n_source);
    for i in 0..config.n_source {
        let len = rng.gen_range(lo..=hi);
        let (text, gold) = sentence(&vec![true; len], &vocab_a, &vocab_b, config, &mut rng);
        source.push(Example { id: format!("s{i}"), text, gold: Some(gold) });
    }
    if source.iter().all(|e| e.gold == source[0].gold) {
        return Err(Error::Invalid("synthetic source came out single-class".into()));
    }

    let total: f64 = config.mix_ratio_distribution.iter().map(|p| p.1).sum();
    let mut rng = seed::rng(root, "synth_target", 0);
    let mut target = Vec::with_capacity(config.n_target);
    let mut target_mix = Vec::with_capacity(config.n_target);
    for i in 0..config.n_target {
        let mut u = rng.gen::<f64>() * total;
        let mut ratio = config.mix_ratio_distribution.last().unwrap().0;
        for &(r, w) in &config.mix_ratio_distribution {
            if u < w {
                ratio = r;
                break;
            }
            u -= w;
        }
        let len = rng.gen_range(lo..=hi);
        let n_a = round_half_up(ratio * len as f64).min(len);
        let mut langs: Vec<bool> = (0..len).map(|j| j < n_a).collect();
        langs.shuffle(&mut rng);
        let (text, gold) = sentence(&langs, &vocab_a, &vocab_b, config, &mut rng);
        target.push(Example { id: format!("t{i}"), text, gold: Some(gold) });
        target_mix.push(ratio);
    }

    let lexicon_a = Lexicon::new("lexicon_a", vocab_a.all())?;
    Ok(SynthCorpus {
        source: Dataset::new("synth_source", DatasetKind::SourceLabeled, source)?,
        target: Dataset::new("synth_target", DatasetKind::TargetWithHiddenGold, target)?,
        lexicon_a,
        target_mix,
        vocab_a,
        vocab_b,
    })
}

/// One-line summary of a generated corpus.
pub fn describe(c: &SynthCorpus) -> String {
    let mut s = String::new();
    let [sp, sn] = c.source.class_counts();
    let [tp, tn] = c.target.class_counts();
    let _ = write!(
        s,
        "source {} ({sp} pos / {sn} neg), target {} ({tp} pos / {tn} neg), lexicon {} words",
        c.source.len(),
        c.target.len(),
        c.lexicon_a.len()
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langid::f_eng;

    fn small() -> SynthConfig {
        SynthConfig { n_source: 50, n_target: 80, vocab_size_per_lang: 60, ..Default::default() }
    }

    #[test]
    fn all_language_a_target_has_fraction_one() {
        let c = generate(&SynthConfig { mix_ratio_distribution: vec![(1.0, 1.0)], ..small() }).unwrap();
        for e in c.target.examples() {
            assert_eq!(f_eng(&e.text, &c.lexicon_a).value, 1.0);
        }
    }

    #[test]
    fn languages_are_disjoint_and_fraction_is_exact() {
        let c = generate(&small()).unwrap();
        assert!(c.vocab_b.all().all(|w| !c.lexicon_a.contains(w)));
        for (e, &r) in c.target.examples().iter().zip(&c.target_mix) {
            let words: Vec<&str> = e.text.split(' ').collect();
            let n_a = words.iter().filter(|w| c.lexicon_a.contains(w)).count();
            let f = f_eng(&e.text, &c.lexicon_a);
            assert_eq!(f.value, n_a as f64 / words.len() as f64);
            assert_eq!(n_a, round_half_up(r * words.len() as f64));
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&small()).unwrap().digest(), generate(&small()).unwrap().digest());
        let other = SynthConfig { seed: 1, ..small() };
        assert_ne!(generate(&small()).unwrap().digest(), generate(&other).unwrap().digest());
    }

    #[test]
    fn close_mix_ratios_are_rejected() {
        let c = SynthConfig { mix_ratio_distribution: vec![(0.5, 1.0), (0.6, 1.0)], ..small() };
        assert!(matches!(generate(&c), Err(Error::Config(_))));
    }

    #[test]
    fn tiny_vocabulary_is_rejected() {
        let c = SynthConfig { vocab_size_per_lang: 2, ..small() };
        assert!(matches!(generate(&c), Err(Error::Config(_))));
    }
}
