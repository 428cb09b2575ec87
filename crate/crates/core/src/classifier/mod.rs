//! The classifier slot of the pipeline.
//!
//! Pipeline code only talks to the [`Classifier`] trait. A classifier holds
//! one current model: `train` replaces it and `predict` scores with it.
//! Two backends ship with the crate:
//!
//! * [`LinearClassifier`], a hashed-feature binary logistic model trained by
//!   seeded mini-batch SGD with a linearly decaying step size;
//! * [`ExternalClassifier`], which forwards the same calls to a child process
//!   over a JSON line protocol.

mod external;
mod features;
mod linear;

pub use external::ExternalClassifier;
pub use features::{featurize, SparseVector};
pub use linear::{loss_and_gradient, predict, train, train_checkpoints, LinearClassifier, Model, TrainTrace};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SentimentLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    /// Number of hashed feature buckets; a power of two, at least 1024.
    pub feature_dims: usize,
    pub word_ngrams: Vec<usize>,
    pub char_ngrams: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            feature_dims: 1 << 16,
            word_ngrams: vec![1],
            char_ngrams: vec![],
            epochs: 4,
            batch_size: 16,
            learning_rate: 5.0,
            l2: 1e-5,
            seed: 0,
        }
    }
}

impl ClassifierSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.feature_dims.is_power_of_two() || self.feature_dims < 1 << 10 {
            return bad(format!("feature_dims must be a power of two >= 1024, got {}", self.feature_dims));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be non-negative, got {}", self.l2));
        }
        if self.learning_rate * self.l2 >= 1.0 {
            return bad("learning_rate * l2 must be below 1".into());
        }
        if self.word_ngrams.is_empty() && self.char_ngrams.is_empty() {
            return bad("at least one word or character n-gram order is required".into());
        }
        if self.word_ngrams.iter().chain(&self.char_ngrams).any(|&n| n == 0) {
            return bad("n-gram orders start at 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Pretrained,
    Iteration(usize),
    Supervised,
}

impl Provenance {
    /// Iteration number in the progressive chain; the pretrained model is 0.
    pub fn iteration(self) -> Option<usize> {
        match self {
            Provenance::Pretrained => Some(0),
            Provenance::Iteration(i) => Some(i),
            Provenance::Supervised => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// `[p_positive, p_negative]`.
    pub probs: [f64; 2],
    pub label: SentimentLabel,
    pub confidence: f64,
}

impl Prediction {
    /// Builds a prediction from the positive-class probability. Exact ties
    /// go to `Positive`.
    pub fn from_positive(p_pos: f64) -> Self {
        let probs = [p_pos, 1.0 - p_pos];
        let label = if probs[0] >= probs[1] { SentimentLabel::Positive } else { SentimentLabel::Negative };
        Prediction { probs, label, confidence: probs[0].max(probs[1]) }
    }

    pub fn prob(&self, label: SentimentLabel) -> f64 {
        self.probs[label.index()]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LabeledText<'a> {
    pub text: &'a str,
    pub label: SentimentLabel,
}

/// Which epoch's weights a training call keeps.
#[derive(Debug, Clone, Copy)]
pub enum Checkpoint<'a> {
    FinalEpoch,
    /// Highest macro-F1 on the given dev set; the earliest epoch wins ties.
    BestOnDev(&'a [LabeledText<'a>]),
}

/// Summary of a trained model, as recorded in run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub provenance: Provenance,
    pub training_digest: String,
    /// Hash of the learned parameters, when the backend exposes them.
    pub model_digest: Option<String>,
    pub train_size: usize,
    /// 1-based epoch kept, when the backend reports it.
    pub epoch: Option<usize>,
}

pub trait Classifier {
    fn name(&self) -> &str;

    fn train(
        &mut self,
        data: &[LabeledText<'_>],
        seed: u64,
        checkpoint: Checkpoint<'_>,
        provenance: Provenance,
    ) -> Result<ModelRecord>;

    fn predict(&mut self, text: &str) -> Result<Prediction>;

    fn predict_all(&mut self, texts: &[&str]) -> Result<Vec<Prediction>> {
        texts.iter().map(|t| self.predict(t)).collect()
    }
}

/// SHA-256 over a training call's inputs: a context string, then every
/// `(label, text)` pair in order.
pub fn training_digest(context: &str, data: &[LabeledText<'_>]) -> String {
    let mut h = Sha256::new();
    h.update(context.as_bytes());
    h.update([0u8]);
    for item in data {
        h.update([item.label.index() as u8]);
        h.update(item.text.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

pub(crate) fn check_both_classes(data: &[LabeledText<'_>]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Training("no training examples".into()));
    }
    let first = data[0].label;
    if data.iter().all(|d| d.label == first) {
        return Err(Error::Training(format!("training data contains only the {first} class")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_breaks_to_positive() {
        let p = Prediction::from_positive(0.5);
        assert_eq!(p.label, SentimentLabel::Positive);
        assert_eq!(p.confidence, 0.5);
        let p = Prediction::from_positive(0.2);
        assert_eq!(p.label, SentimentLabel::Negative);
        assert!((p.confidence - 0.8).abs() < 1e-15);
        assert!((p.probs[0] + p.probs[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spec_validation() {
        assert!(ClassifierSpec::default().validate().is_ok());
        let bad = [
            ClassifierSpec { feature_dims: 512, ..Default::default() },
            ClassifierSpec { feature_dims: 3000, ..Default::default() },
            ClassifierSpec { epochs: 0, ..Default::default() },
            ClassifierSpec { learning_rate: 0.0, ..Default::default() },
            ClassifierSpec { l2: -1.0, ..Default::default() },
            ClassifierSpec { word_ngrams: vec![], char_ngrams: vec![], ..Default::default() },
        ];
        for spec in bad {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
    }
}
