use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::classifier::Prediction;
use crate::corpus::SentimentLabel;
use crate::pipeline::RunReport;
use crate::{Error, Result};

/// Counts indexed `[gold][predicted]` by [`SentimentLabel::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionCounts {
    pub fn add(&mut self, gold: SentimentLabel, predicted: SentimentLabel) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn get(&self, gold: SentimentLabel, predicted: SentimentLabel) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&self, other: &ConfusionCounts) -> ConfusionCounts {
        let mut out = *self;
        for g in 0..2 {
            for p in 0..2 {
                out.counts[g][p] += other.counts[g][p];
            }
        }
        out
    }
}

pub fn confusion_from_pairs(pairs: impl IntoIterator<Item = (SentimentLabel, SentimentLabel)>) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (gold, pred) in pairs {
        c.add(gold, pred);
    }
    c
}

/// Confusion counts over ids present in both maps. Any id that appears in
/// only one of them is an error.
pub fn confusion(
    predictions: &IndexMap<String, Prediction>,
    golds: &IndexMap<String, SentimentLabel>,
) -> Result<ConfusionCounts> {
    if let Some(id) = predictions.keys().find(|id| !golds.contains_key(*id)) {
        return Err(Error::Invalid(format!("prediction for id {id:?} has no gold label")));
    }
    if let Some(id) = golds.keys().find(|id| !predictions.contains_key(*id)) {
        return Err(Error::Invalid(format!("no prediction for gold id {id:?}")));
    }
    Ok(confusion_from_pairs(
        golds.iter().map(|(id, g)| (*g, predictions[id].label)),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub per_class_f1: BTreeMap<SentimentLabel, f64>,
    pub support: BTreeMap<SentimentLabel, u64>,
    pub confusion: ConfusionCounts,
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn f1_scores(c: &ConfusionCounts) -> Result<MetricsReport> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Invalid("no examples to score".into()));
    }
    let mut per_class_f1 = BTreeMap::new();
    let mut support = BTreeMap::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for label in SentimentLabel::ALL {
        let other = label.other();
        let tp = c.get(label, label);
        let fp = c.get(other, label);
        let fn_ = c.get(label, other);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        per_class_f1.insert(label, f1(tp, fp, fn_));
        support.insert(label, tp + fn_);
    }
    let macro_f1 = per_class_f1.values().sum::<f64>() / per_class_f1.len() as f64;
    let weighted_f1 = SentimentLabel::ALL
        .iter()
        .map(|l| per_class_f1[l] * support[l] as f64)
        .sum::<f64>()
        / total as f64;
    Ok(MetricsReport {
        macro_f1,
        micro_f1: f1(tp_all, fp_all, fn_all),
        weighted_f1,
        accuracy: tp_all as f64 / total as f64,
        per_class_f1,
        support,
        confusion: *c,
    })
}

pub fn evaluate(
    predictions: &IndexMap<String, Prediction>,
    golds: &IndexMap<String, SentimentLabel>,
) -> Result<MetricsReport> {
    f1_scores(&confusion(predictions, golds)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketMetrics {
    pub bucket: usize,
    pub metrics: MetricsReport,
}

/// Metrics of the report's final predictions restricted to each bucket.
pub fn per_bucket_metrics(report: &RunReport, golds: &IndexMap<String, SentimentLabel>) -> Result<Vec<BucketMetrics>> {
    report
        .pseudo_labels
        .iter()
        .map(|b| {
            let mut c = ConfusionCounts::default();
            for id in &b.members {
                let pred = report
                    .final_predictions
                    .get(id)
                    .ok_or_else(|| Error::Invalid(format!("bucket {} member {id:?} has no prediction", b.bucket)))?;
                if let Some(g) = golds.get(id) {
                    c.add(*g, pred.label);
                }
            }
            if c.total() == 0 {
                return Err(Error::Invalid(format!("bucket {} has no gold labels", b.bucket)));
            }
            Ok(BucketMetrics { bucket: b.bucket, metrics: f1_scores(&c)? })
        })
        .collect()
}
