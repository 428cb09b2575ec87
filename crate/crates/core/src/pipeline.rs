//! Progressive self-training and its comparison runs.
//!
//! A progressive run:
//!
//! 1. trains `m_pt` on the source train split, keeping the epoch with the
//!    best dev macro-F1;
//! 2. scores every target text with `m_pt` and its resource-rich fraction,
//!    sorts and cuts the target into `k` buckets;
//! 3. selects the confident subset `X_st` once, from `m_pt` confidences;
//! 4. for `i = 1..=k`, labels `X_st ∩ B_i` with `m_{i-1}` and trains a fresh
//!    `m_i` on the source plus every pseudo-label gathered so far, keeping
//!    the final epoch;
//! 5. predicts the whole target with `m_k`.
//!
//! Pseudo-labels of a bucket are never revisited once assigned. The target's
//! gold labels are stripped before any of this runs.
//!
//! Seeds: the source split uses stream `split`, source upsampling `upsample`,
//! pretraining `pretrain`, and every later training round the single stream
//! `train`, so compared models share their initialization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::classifier::{Checkpoint, Classifier, ClassifierSpec, LabeledText, ModelRecord, Prediction, Provenance};
use crate::corpus::{self, Dataset, DatasetKind, Example, SentimentLabel};
use crate::curriculum::{self, Bucket, ScoredExample, SelectionResult};
use crate::evaluation::ProbeInputs;
use crate::langid::{Detector, Script};
use crate::seed;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    PerClass,
    Global,
}

impl FromStr for SelectionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "per_class" => Ok(SelectionMode::PerClass),
            "global" => Ok(SelectionMode::Global),
            other => Err(format!("unknown selection mode {other:?} (expected per_class or global)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorSpec {
    Lexicon(String),
    Script(Script),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub delta: f64,
    pub seed: u64,
    pub selection_mode: SelectionMode,
    pub use_source_in_training: bool,
    pub upsample_source: bool,
    pub upsample_pseudo: bool,
    pub dev_fraction: f64,
    pub classifier: ClassifierSpec,
    pub detector: DetectorSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 2,
            delta: 0.5,
            seed: 0,
            selection_mode: SelectionMode::PerClass,
            use_source_in_training: true,
            upsample_source: true,
            upsample_pseudo: false,
            dev_fraction: 0.2,
            classifier: ClassifierSpec::default(),
            detector: DetectorSpec::Script(Script::Latin),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(Error::Config(format!("dev_fraction must lie in (0, 1), got {}", self.dev_fraction)));
        }
        self.classifier.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Progressive,
    NoPt,
    ZeroShot,
    MinusSource,
    MinusRatio,
    Supervised,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Progressive,
        Method::NoPt,
        Method::ZeroShot,
        Method::MinusSource,
        Method::MinusRatio,
        Method::Supervised,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Progressive => "progressive",
            Method::NoPt => "no_pt",
            Method::ZeroShot => "zero_shot",
            Method::MinusSource => "minus_source",
            Method::MinusRatio => "minus_ratio",
            Method::Supervised => "supervised",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub id: String,
    pub label: SentimentLabel,
    pub confidence: f64,
}

/// One bucket of the target and the pseudo-labels assigned inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRecord {
    pub bucket: usize,
    /// Iteration of the model that produced `labels` (0 = pretrained);
    /// absent when the method assigns no pseudo-labels.
    pub labeled_by: Option<usize>,
    pub f_eng_mean: f64,
    pub f_eng_std: f64,
    pub members: Vec<String>,
    pub labels: Vec<PseudoLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    /// No selected instance fell into this iteration's bucket.
    EmptyBucket,
    /// The previous model was kept because the training set did not change.
    ModelReused,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub kind: FlagKind,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub models: Vec<ModelRecord>,
    pub pseudo_labels: Vec<BucketRecord>,
    pub final_predictions: IndexMap<String, Prediction>,
    pub flags: Vec<Flag>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn bucket_ids(&self) -> Vec<Vec<String>> {
        self.pseudo_labels.iter().map(|b| b.members.clone()).collect()
    }
}

/// Source split prepared for pretraining.
#[derive(Debug, Clone)]
pub struct SourceSplit {
    /// Train side, upsampled when configured.
    pub train: Dataset,
    pub dev: Dataset,
}

pub fn split_source(source: &Dataset, config: &RunConfig) -> Result<SourceSplit> {
    if source.kind != DatasetKind::SourceLabeled {
        return Err(Error::Invalid(format!("{}: source must be a labeled dataset", source.name)));
    }
    let (train, dev) = corpus::train_dev_split(source, config.dev_fraction, config.seed)?;
    let train = if config.upsample_source {
        corpus::upsample_minority(&train, config.seed)?
    } else {
        train
    };
    Ok(SourceSplit { train, dev })
}

fn labeled(d: &Dataset) -> Vec<LabeledText<'_>> {
    d.examples()
        .iter()
        .map(|e| LabeledText { text: &e.text, label: e.gold.expect("labeled dataset") })
        .collect()
}

/// Trains `m_pt` on the source train split with dev-based epoch selection.
pub fn pretrain_source(
    source: &Dataset,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<(ModelRecord, SourceSplit)> {
    config.validate()?;
    let split = split_source(source, config)?;
    let train = labeled(&split.train);
    let dev = labeled(&split.dev);
    let record = clf.train(
        &train,
        seed::derive(config.seed, "pretrain", 0),
        Checkpoint::BestOnDev(&dev),
        Provenance::Pretrained,
    )?;
    Ok((record, split))
}

fn score_target(target: &Dataset, detector: &Detector, clf: &mut dyn Classifier) -> Result<Vec<ScoredExample>> {
    let texts: Vec<&str> = target.examples().iter().map(|e| e.text.as_str()).collect();
    let preds = clf.predict_all(&texts)?;
    Ok(target
        .examples()
        .iter()
        .zip(preds)
        .map(|(e, prediction)| ScoredExample {
            example: Example { gold: None, ..e.clone() },
            f_eng: detector.fraction(&e.text).value,
            prediction,
        })
        .collect())
}

fn predict_target(target: &Dataset, clf: &mut dyn Classifier) -> Result<IndexMap<String, Prediction>> {
    let texts: Vec<&str> = target.examples().iter().map(|e| e.text.as_str()).collect();
    let preds = clf.predict_all(&texts)?;
    Ok(target.examples().iter().map(|e| e.id.clone()).zip(preds).collect())
}

/// State shared by every method after pretraining and bucketing.
struct Prepared {
    split: SourceSplit,
    pretrained: ModelRecord,
    buckets: Vec<Bucket>,
    selection: SelectionResult,
    texts: BTreeMap<String, String>,
}

impl Prepared {
    fn new(
        source: &Dataset,
        target: &Dataset,
        detector: &Detector,
        config: &RunConfig,
        clf: &mut dyn Classifier,
    ) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::Invalid("target dataset is empty".into()));
        }
        let (pretrained, split) = pretrain_source(source, config, clf)?;
        let scored = score_target(target, detector, clf)?;
        let selection = match config.selection_mode {
            SelectionMode::PerClass => curriculum::select_per_class(&scored, config.delta)?,
            SelectionMode::Global => curriculum::select_global(&scored, config.delta)?,
        };
        let buckets = curriculum::make_buckets(scored, config.k)?;
        let selection = curriculum::bucket_intersect(&selection, &buckets)?;
        if selection.selected.is_empty() {
            return Err(Error::Invalid(format!("selection fraction {} selects nothing", config.delta)));
        }
        let texts = target.examples().iter().map(|e| (e.id.clone(), e.text.clone())).collect();
        Ok(Prepared { split, pretrained, buckets, selection, texts })
    }

    fn pretrained_prediction(&self, bucket: usize, id: &str) -> &Prediction {
        &self.buckets[bucket - 1]
            .members
            .iter()
            .find(|m| m.example.id == id)
            .expect("selected id belongs to its bucket")
            .prediction
    }

    fn bucket_record(&self, bucket: usize, labeled_by: Option<usize>, labels: Vec<PseudoLabel>) -> BucketRecord {
        let b = &self.buckets[bucket - 1];
        BucketRecord {
            bucket,
            labeled_by,
            f_eng_mean: b.f_eng_mean,
            f_eng_std: b.f_eng_std,
            members: b.ids().map(str::to_string).collect(),
            labels,
        }
    }

    /// Pseudo-labels bucket `bucket`'s selection with the current model
    /// (`m_pt` when `bucket == 1`, whose predictions are already known).
    fn label_bucket(&self, bucket: usize, clf: &mut dyn Classifier) -> Result<Vec<PseudoLabel>> {
        self.selection.per_bucket[&bucket]
            .iter()
            .map(|id| {
                let pred = if bucket == 1 {
                    self.pretrained_prediction(bucket, id).clone()
                } else {
                    clf.predict(&self.texts[id])?
                };
                Ok(PseudoLabel { id: id.clone(), label: pred.label, confidence: pred.confidence })
            })
            .collect()
    }

    fn training_set<'a>(
        &'a self,
        config: &RunConfig,
        pseudo: impl Iterator<Item = &'a PseudoLabel>,
        iteration: usize,
    ) -> Result<Vec<(String, &'a str, SentimentLabel)>> {
        let mut items: Vec<(String, &str, SentimentLabel)> = Vec::new();
        if config.use_source_in_training {
            items.extend(
                self.split
                    .train
                    .examples()
                    .iter()
                    .map(|e| (format!("s:{}", e.id), e.text.as_str(), e.gold.expect("labeled source"))),
            );
        }
        items.extend(pseudo.map(|p| (format!("t:{}", p.id), self.texts[&p.id].as_str(), p.label)));
        if !config.upsample_pseudo {
            return Ok(items);
        }
        let combined = Dataset::new(
            "combined",
            DatasetKind::SourceLabeled,
            items
                .iter()
                .map(|(id, text, label)| Example { id: id.clone(), text: text.to_string(), gold: Some(*label) })
                .collect(),
        )?;
        let up = corpus::upsample_minority(&combined, seed::derive(config.seed, "upsample_pseudo", iteration as u64))
            .map_err(|e| Error::Training(format!("iteration {iteration}: {e}")))?;
        let text_of: BTreeMap<&str, &'a str> = items.iter().map(|(id, t, _)| (id.as_str(), *t)).collect();
        Ok(up
            .examples()
            .iter()
            .map(|e| {
                let base = e.id.split("#dup").next().unwrap();
                (e.id.clone(), text_of[base], e.gold.unwrap())
            })
            .collect())
    }

    fn train_iteration(
        &self,
        config: &RunConfig,
        labels: &[PseudoLabel],
        iteration: usize,
        clf: &mut dyn Classifier,
    ) -> Result<ModelRecord> {
        let items = self.training_set(config, labels.iter(), iteration)?;
        let data: Vec<LabeledText<'_>> = items.iter().map(|(_, text, label)| LabeledText { text, label: *label }).collect();
        clf.train(
            &data,
            seed::derive(config.seed, "train", 0),
            Checkpoint::FinalEpoch,
            Provenance::Iteration(iteration),
        )
        .map_err(|e| match e {
            Error::Training(msg) => Error::Training(format!("iteration {iteration}: {msg}")),
            other => other,
        })
    }
}

/// Shared loop for progressive, -Source and -Ratio.
fn progressive_loop(
    source: &Dataset,
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
    stop_after: usize,
) -> Result<(Prepared, RunReport)> {
    let target = target.without_gold();
    let prep = Prepared::new(source, &target, detector, config, clf)?;
    let mut models = vec![prep.pretrained.clone()];
    let mut records = Vec::with_capacity(config.k);
    let mut gathered: Vec<PseudoLabel> = Vec::new();
    let mut flags = Vec::new();
    for i in 1..=stop_after.min(config.k) {
        let labels = prep.label_bucket(i, clf)?;
        records.push(prep.bucket_record(i, Some(i - 1), labels.clone()));
        if labels.is_empty() {
            flags.push(Flag { kind: FlagKind::EmptyBucket, iteration: i });
            flags.push(Flag { kind: FlagKind::ModelReused, iteration: i });
            let previous = models.last().expect("pretrained record").clone();
            models.push(ModelRecord { provenance: Provenance::Iteration(i), ..previous });
            continue;
        }
        gathered.extend(labels);
        models.push(prep.train_iteration(config, &gathered, i, clf)?);
    }
    for i in records.len() + 1..=config.k {
        records.push(prep.bucket_record(i, None, Vec::new()));
    }
    let final_predictions = predict_target(&target, clf)?;
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        models,
        pseudo_labels: records,
        final_predictions,
        flags,
    };
    Ok((prep, report))
}

pub fn run_progressive(
    source: &Dataset,
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<RunReport> {
    progressive_loop(source, target, detector, config, clf, usize::MAX).map(|(_, r)| r)
}

/// Trains once on the source plus the whole selection, all labeled by `m_pt`.
pub fn run_no_pt(
    source: &Dataset,
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<RunReport> {
    let target = target.without_gold();
    let prep = Prepared::new(source, &target, detector, config, clf)?;
    let mut records = Vec::with_capacity(config.k);
    let mut gathered = Vec::new();
    for i in 1..=config.k {
        let labels: Vec<PseudoLabel> = prep.selection.per_bucket[&i]
            .iter()
            .map(|id| {
                let p = prep.pretrained_prediction(i, id);
                PseudoLabel { id: id.clone(), label: p.label, confidence: p.confidence }
            })
            .collect();
        gathered.extend(labels.iter().cloned());
        records.push(prep.bucket_record(i, Some(0), labels));
    }
    let trained = prep.train_iteration(config, &gathered, 1, clf)?;
    let final_predictions = predict_target(&target, clf)?;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        models: vec![prep.pretrained.clone(), trained],
        pseudo_labels: records,
        final_predictions,
        flags: Vec::new(),
    })
}

pub fn run_zero_shot(
    source: &Dataset,
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<RunReport> {
    config.validate()?;
    let target = target.without_gold();
    let (pretrained, _) = pretrain_source(source, config, clf)?;
    let scored = score_target(&target, detector, clf)?;
    let final_predictions = scored.iter().map(|s| (s.example.id.clone(), s.prediction.clone())).collect();
    let buckets = curriculum::make_buckets(scored, config.k)?;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        models: vec![pretrained],
        pseudo_labels: buckets.iter().map(|b| empty_record(b)).collect(),
        final_predictions,
        flags: Vec::new(),
    })
}

fn empty_record(b: &Bucket) -> BucketRecord {
    BucketRecord {
        bucket: b.index,
        labeled_by: None,
        f_eng_mean: b.f_eng_mean,
        f_eng_std: b.f_eng_std,
        members: b.ids().map(str::to_string).collect(),
        labels: Vec::new(),
    }
}

/// Progressive loop trained on pseudo-labels only.
pub fn run_minus_source(
    source: &Dataset,
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<RunReport> {
    let config = RunConfig { use_source_in_training: false, ..config.clone() };
    run_progressive(source, target, detector, &config, clf)
}

/// Progressive loop with class-agnostic selection.
pub fn run_minus_ratio(
    source: &Dataset,
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<RunReport> {
    let config = RunConfig { selection_mode: SelectionMode::Global, ..config.clone() };
    run_progressive(source, target, detector, &config, clf)
}

/// Upper bound: trains on the target's gold labels and predicts the target.
pub fn run_supervised_bound(
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<RunReport> {
    config.validate()?;
    if target.is_empty() || target.examples().iter().any(|e| e.gold.is_none()) {
        return Err(Error::Invalid(format!("{}: supervised bound needs gold labels on every text", target.name)));
    }
    let data = labeled(target);
    let record = clf.train(&data, seed::derive(config.seed, "train", 0), Checkpoint::FinalEpoch, Provenance::Supervised)?;
    let scored = score_target(target, detector, clf)?;
    let final_predictions = scored.iter().map(|s| (s.example.id.clone(), s.prediction.clone())).collect();
    let buckets = curriculum::make_buckets(scored, config.k)?;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        models: vec![record],
        pseudo_labels: buckets.iter().map(|b| empty_record(b)).collect(),
        final_predictions,
        flags: Vec::new(),
    })
}

pub fn run_method(
    method: Method,
    source: &Dataset,
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<RunReport> {
    match method {
        Method::Progressive => run_progressive(source, target, detector, config, clf),
        Method::NoPt => run_no_pt(source, target, detector, config, clf),
        Method::ZeroShot => run_zero_shot(source, target, detector, config, clf),
        Method::MinusSource => run_minus_source(source, target, detector, config, clf),
        Method::MinusRatio => run_minus_ratio(source, target, detector, config, clf),
        Method::Supervised => run_supervised_bound(target, detector, config, clf),
    }
}

/// Runs pretraining and the first progressive iteration, collecting the
/// confidences needed for OOD probing.
pub fn collect_probe_inputs(
    source: &Dataset,
    target: &Dataset,
    detector: &Detector,
    config: &RunConfig,
    clf: &mut dyn Classifier,
) -> Result<ProbeInputs> {
    if config.k < 2 {
        return Err(Error::Config("OOD probing needs k >= 2".into()));
    }
    let target = target.without_gold();
    let (prep, report) = progressive_loop(source, &target, detector, config, clf, 1)?;
    let dev_texts: Vec<&str> = prep.split.dev.examples().iter().map(|e| e.text.as_str()).collect();
    // The classifier now holds m_1 (or m_pt if bucket 1 was empty); m_pt is
    // retrained deterministically to score the dev split.
    let first_target: IndexMap<String, f64> = report
        .final_predictions
        .iter()
        .map(|(id, p)| (id.clone(), p.confidence))
        .collect();
    pretrain_source(source, config, clf)?;
    let pretrained_dev = clf.predict_all(&dev_texts)?.into_iter().map(|p| p.confidence).collect();
    let pretrained_target = prep
        .buckets
        .iter()
        .flat_map(|b| b.members.iter())
        .map(|m| (m.example.id.clone(), m.prediction.confidence))
        .collect();
    let selected_first: BTreeSet<String> = prep.selection.per_bucket[&1].iter().cloned().collect();
    Ok(ProbeInputs {
        pretrained_dev,
        pretrained_target,
        first_target,
        buckets: prep.buckets.iter().map(|b| b.ids().map(str::to_string).collect()).collect(),
        selected_first,
    })
}
