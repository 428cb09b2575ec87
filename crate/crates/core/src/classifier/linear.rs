use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{featurize, SparseVector};
use super::{
    check_both_classes, training_digest, Checkpoint, Classifier, ClassifierSpec, LabeledText, ModelRecord,
    Prediction, Provenance,
};
use crate::corpus::SentimentLabel;
use crate::evaluation::{confusion_from_pairs, f1_scores};
use crate::seed;
use crate::{Error, Result};

/// Binary logistic model over hashed features. `weights` has
/// `feature_dims + 1` entries; the last is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ClassifierSpec,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
    pub training_digest: String,
}

impl Model {
    pub fn zeros(spec: ClassifierSpec) -> Model {
        let weights = vec![0.0; spec.feature_dims + 1];
        Model { spec, weights, provenance: Provenance::Pretrained, training_digest: String::new() }
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.weights[self.spec.feature_dims]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    /// SHA-256 of the little-endian weight bytes.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.weights {
            h.update(w.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn target(label: SentimentLabel) -> f64 {
    match label {
        SentimentLabel::Positive => 1.0,
        SentimentLabel::Negative => 0.0,
    }
}

pub fn predict(model: &Model, text: &str) -> Prediction {
    predict_features(model, &featurize(text, &model.spec))
}

fn predict_features(model: &Model, x: &SparseVector) -> Prediction {
    Prediction::from_positive(sigmoid(model.score(x)))
}

/// Mean logistic loss over `batch` plus `l2/2 * |w|^2` (bias excluded),
/// and the exact gradient with respect to every weight including the bias.
pub fn loss_and_gradient(model: &Model, batch: &[(SparseVector, SentimentLabel)]) -> (f64, Vec<f64>) {
    let dims = model.spec.feature_dims;
    let l2 = model.spec.l2;
    let mut grad = vec![0.0; dims + 1];
    let mut loss = 0.0;
    let scale = if batch.is_empty() { 0.0 } else { 1.0 / batch.len() as f64 };
    for (x, label) in batch {
        let s = model.score(x);
        let y = target(*label);
        loss += if y == 1.0 { softplus(-s) } else { softplus(s) };
        let r = (sigmoid(s) - y) * scale;
        for (i, v) in x.iter() {
            grad[i] += r * v;
        }
        grad[dims] += r;
    }
    loss *= scale;
    let mut sq = 0.0;
    for (g, w) in grad[..dims].iter_mut().zip(&model.weights[..dims]) {
        *g += l2 * w;
        sq += w * w;
    }
    (loss + 0.5 * l2 * sq, grad)
}

/// Per-epoch training loss over the full training set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub epoch_losses: Vec<f64>,
}

/// Non-bias weights are stored as `scale * v` so that L2 shrinkage costs
/// O(1) per step instead of O(feature_dims).
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
    bias: f64,
}

impl ScaledWeights {
    fn score(&self, x: &SparseVector) -> f64 {
        self.scale * x.dot(&self.v) + self.bias
    }

    fn materialize(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self.v.iter().map(|v| v * self.scale).collect();
        w.push(self.bias);
        w
    }

    fn renormalize(&mut self) {
        for v in &mut self.v {
            *v *= self.scale;
        }
        self.scale = 1.0;
    }
}

/// Trains from zero weights and returns a snapshot after every epoch.
pub fn train_checkpoints(
    data: &[LabeledText<'_>],
    spec: &ClassifierSpec,
    provenance: Provenance,
) -> Result<(Vec<Model>, TrainTrace)> {
    spec.validate()?;
    check_both_classes(data)?;
    let digest = training_digest(
        &serde_json::to_string(spec).expect("spec serializes"),
        data,
    );
    let examples: Vec<(SparseVector, SentimentLabel)> =
        data.iter().map(|d| (featurize(d.text, spec), d.label)).collect();

    let dims = spec.feature_dims;
    let lr = spec.learning_rate;
    let steps_per_epoch = examples.len().div_ceil(spec.batch_size);
    let total_steps = (steps_per_epoch * spec.epochs) as f64;
    let mut t = 0usize;
    let mut w = ScaledWeights { v: vec![0.0; dims], scale: 1.0, bias: 0.0 };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut snapshots = Vec::with_capacity(spec.epochs);
    let mut epoch_losses = Vec::with_capacity(spec.epochs);
    let mut residuals = Vec::with_capacity(spec.batch_size);

    for epoch in 0..spec.epochs {
        order.shuffle(&mut seed::rng(spec.seed, "epoch", epoch as u64));
        for batch in order.chunks(spec.batch_size) {
            // Linear decay from `lr` towards zero over the whole run.
            let rate = lr * (1.0 - t as f64 / total_steps);
            t += 1;
            let step = rate / batch.len() as f64;
            residuals.clear();
            residuals.extend(batch.iter().map(|&i| {
                let (x, label) = &examples[i];
                sigmoid(w.score(x)) - target(*label)
            }));
            w.scale *= 1.0 - rate * spec.l2;
            if w.scale < 1e-9 {
                w.renormalize();
            }
            let inv = step / w.scale;
            for (&i, &r) in batch.iter().zip(&residuals) {
                for (j, v) in examples[i].0.iter() {
                    w.v[j] -= inv * r * v;
                }
            }
            w.bias -= step * residuals.iter().sum::<f64>();
        }
        let model = Model {
            spec: spec.clone(),
            weights: w.materialize(),
            provenance,
            training_digest: digest.clone(),
        };
        let loss = loss_value(&model, &examples);
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss after epoch {} (learning rate {} too large?)",
                epoch + 1,
                lr
            )));
        }
        epoch_losses.push(loss);
        snapshots.push(model);
    }
    Ok((snapshots, TrainTrace { epoch_losses }))
}

fn loss_value(model: &Model, examples: &[(SparseVector, SentimentLabel)]) -> f64 {
    let dims = model.spec.feature_dims;
    let mut loss = 0.0;
    for (x, label) in examples {
        let s = model.score(x);
        loss += if *label == SentimentLabel::Positive { softplus(-s) } else { softplus(s) };
    }
    let sq: f64 = model.weights[..dims].iter().map(|w| w * w).sum();
    loss / examples.len() as f64 + 0.5 * model.spec.l2 * sq
}

/// Trains for `spec.epochs` epochs and keeps the final weights.
pub fn train(data: &[LabeledText<'_>], spec: &ClassifierSpec, provenance: Provenance) -> Result<Model> {
    let (mut snapshots, _) = train_checkpoints(data, spec, provenance)?;
    Ok(snapshots.pop().expect("epochs >= 1"))
}

fn dev_macro_f1(model: &Model, dev: &[LabeledText<'_>]) -> f64 {
    let pairs = dev.iter().map(|d| (d.label, predict(model, d.text).label));
    f1_scores(&confusion_from_pairs(pairs)).map_or(0.0, |m| m.macro_f1)
}

/// [`Classifier`] backed by the built-in logistic model.
#[derive(Debug, Clone)]
pub struct LinearClassifier {
    pub spec: ClassifierSpec,
    current: Option<Model>,
}

impl LinearClassifier {
    pub fn new(spec: ClassifierSpec) -> Result<Self> {
        spec.validate()?;
        Ok(LinearClassifier { spec, current: None })
    }

    pub fn model(&self) -> Option<&Model> {
        self.current.as_ref()
    }

    pub fn set_model(&mut self, model: Model) {
        self.current = Some(model);
    }
}

impl Classifier for LinearClassifier {
    fn name(&self) -> &str {
        "linear"
    }

    fn train(
        &mut self,
        data: &[LabeledText<'_>],
        seed: u64,
        checkpoint: Checkpoint<'_>,
        provenance: Provenance,
    ) -> Result<ModelRecord> {
        let spec = ClassifierSpec { seed, ..self.spec.clone() };
        let (snapshots, _) = train_checkpoints(data, &spec, provenance)?;
        let (epoch, model) = match checkpoint {
            Checkpoint::FinalEpoch => (snapshots.len(), snapshots.into_iter().last().unwrap()),
            Checkpoint::BestOnDev(dev) => {
                let mut best: Option<(usize, f64)> = None;
                for (i, m) in snapshots.iter().enumerate() {
                    let f1 = dev_macro_f1(m, dev);
                    if best.map_or(true, |(_, b)| f1 > b) {
                        best = Some((i, f1));
                    }
                }
                let i = best.map_or(snapshots.len() - 1, |(i, _)| i);
                (i + 1, snapshots.into_iter().nth(i).unwrap())
            }
        };
        let record = ModelRecord {
            provenance,
            training_digest: model.training_digest.clone(),
            model_digest: Some(model.digest()),
            train_size: data.len(),
            epoch: Some(epoch),
        };
        self.current = Some(model);
        Ok(record)
    }

    fn predict(&mut self, text: &str) -> Result<Prediction> {
        let model = self
            .current
            .as_ref()
            .ok_or_else(|| Error::Invalid("predict called before train".into()))?;
        Ok(predict(model, text))
    }
}
