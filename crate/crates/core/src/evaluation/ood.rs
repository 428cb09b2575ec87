//! Maximum-softmax-probability OOD probing.
//!
//! A threshold `p_alpha` is calibrated on a set of confidences so that at
//! most an `alpha` fraction lies strictly below it; a target sample is
//! out of distribution when its confidence is strictly below `p_alpha`.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Value at 0-based rank `floor(alpha * n)` of the ascending confidences.
pub fn ood_threshold(calibration: &[f64], alpha: f64) -> Result<f64> {
    if calibration.is_empty() {
        return Err(Error::Invalid("empty calibration set".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if calibration.iter().any(|c| !c.is_finite()) {
        return Err(Error::Invalid("non-finite calibration confidence".into()));
    }
    let mut sorted = calibration.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (alpha * sorted.len() as f64).floor() as usize;
    Ok(sorted[rank.min(sorted.len() - 1)])
}

/// Fraction of `confidences` strictly below `p_alpha`.
pub fn ood_fraction(confidences: &[f64], p_alpha: f64) -> Result<f64> {
    if confidences.is_empty() {
        return Err(Error::Invalid("empty target set".into()));
    }
    let below = confidences.iter().filter(|&&c| c < p_alpha).count();
    Ok(below as f64 / confidences.len() as f64)
}

/// Confidences gathered from a pretraining run and its first progressive
/// iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeInputs {
    /// Pretrained model on the source dev split.
    pub pretrained_dev: Vec<f64>,
    /// Pretrained model on every target id.
    pub pretrained_target: IndexMap<String, f64>,
    /// First-iteration model on every target id.
    pub first_target: IndexMap<String, f64>,
    /// Bucket member ids, bucket 1 first.
    pub buckets: Vec<Vec<String>>,
    /// Ids of bucket 1 used in self-training.
    pub selected_first: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodEntry {
    pub alpha: f64,
    pub model: String,
    pub calibration: String,
    pub p_alpha: f64,
    pub bucket: usize,
    pub fraction: f64,
}

/// Answers per alpha: is bucket 2 more OOD than bucket 1 under the
/// pretrained model, and is bucket 2 less OOD under the first-iteration
/// model than under the pretrained one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodVerdict {
    pub alpha: f64,
    pub last_more_ood_than_first_under_pretrained: bool,
    pub last_less_ood_under_first_iteration: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodReport {
    pub entries: Vec<OodEntry>,
    pub verdicts: Vec<OodVerdict>,
}

impl OodReport {
    pub fn fraction(&self, alpha: f64, model: &str, bucket: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.alpha == alpha && e.model == model && e.bucket == bucket)
            .map(|e| e.fraction)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,model,calibration,bucket,p_alpha,fraction\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.alpha, e.model, e.calibration, e.bucket, e.p_alpha, e.fraction
            ));
        }
        out
    }
}

pub const PRETRAINED: &str = "m_pt";
pub const FIRST_ITERATION: &str = "m_1";

fn lookup(conf: &IndexMap<String, f64>, ids: &[String]) -> Result<Vec<f64>> {
    ids.iter()
        .map(|id| conf.get(id).copied().ok_or_else(|| Error::Invalid(format!("no confidence for id {id:?}"))))
        .collect()
}

pub fn probe_ood(inputs: &ProbeInputs, alphas: &[f64]) -> Result<OodReport> {
    if inputs.buckets.len() < 2 {
        return Err(Error::Invalid("OOD probing needs at least two buckets".into()));
    }
    if inputs.pretrained_dev.is_empty() {
        return Err(Error::Invalid("calibration set source dev split is empty".into()));
    }
    let unselected: Vec<String> = inputs.buckets[0]
        .iter()
        .filter(|id| !inputs.selected_first.contains(*id))
        .cloned()
        .collect();
    if unselected.is_empty() {
        return Err(Error::Invalid(
            "calibration set B_1 - X_st_1 is empty (selection fraction too large)".into(),
        ));
    }
    let first_calibration = lookup(&inputs.first_target, &unselected)?;
    let mut entries = Vec::new();
    let mut verdicts = Vec::new();
    for &alpha in alphas {
        let p_pt = ood_threshold(&inputs.pretrained_dev, alpha)?;
        let p_first = ood_threshold(&first_calibration, alpha)?;
        for (b, ids) in inputs.buckets.iter().enumerate() {
            for (model, calibration, p, conf) in [
                (PRETRAINED, "source_dev", p_pt, &inputs.pretrained_target),
                (FIRST_ITERATION, "bucket1_unselected", p_first, &inputs.first_target),
            ] {
                entries.push(OodEntry {
                    alpha,
                    model: model.to_string(),
                    calibration: calibration.to_string(),
                    p_alpha: p,
                    bucket: b + 1,
                    fraction: ood_fraction(&lookup(conf, ids)?, p)?,
                });
            }
        }
        let get = |model: &str, bucket: usize| {
            entries
                .iter()
                .find(|e| e.alpha == alpha && e.model == model && e.bucket == bucket)
                .map(|e| e.fraction)
                .unwrap()
        };
        verdicts.push(OodVerdict {
            alpha,
            last_more_ood_than_first_under_pretrained: get(PRETRAINED, 2) > get(PRETRAINED, 1),
            last_less_ood_under_first_iteration: get(FIRST_ITERATION, 2) < get(PRETRAINED, 2),
        });
    }
    Ok(OodReport { entries, verdicts })
}
