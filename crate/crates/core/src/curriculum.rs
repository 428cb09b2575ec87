//! Bucketing of the target corpus by resource-rich word fraction, and
//! confidence-based instance selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::classifier::Prediction;
use crate::corpus::{round_half_up, Example, SentimentLabel};
use crate::{Error, Result};

/// Anything that can be placed in a bucket.
pub trait Bucketable {
    fn id(&self) -> &str;
    fn f_eng(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredExample {
    pub example: Example,
    pub f_eng: f64,
    /// Prediction of the pretrained model.
    pub prediction: Prediction,
}

impl Bucketable for ScoredExample {
    fn id(&self) -> &str {
        &self.example.id
    }

    fn f_eng(&self) -> f64 {
        self.f_eng
    }
}

/// Bare `(id, f_eng)` pair, for bucketing without a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub id: String,
    pub f_eng: f64,
}

impl Bucketable for Fraction {
    fn id(&self) -> &str {
        &self.id
    }

    fn f_eng(&self) -> f64 {
        self.f_eng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket<T = ScoredExample> {
    /// 1-based; bucket 1 has the highest fractions.
    pub index: usize,
    pub members: Vec<T>,
    pub f_eng_mean: f64,
    /// Population standard deviation.
    pub f_eng_std: f64,
}

impl<T: Bucketable> Bucket<T> {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(Bucketable::id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Sorts by descending `f_eng` (ties by ascending id) and cuts the list into
/// `k` contiguous buckets. Sizes differ by at most one; the first `n mod k`
/// buckets take the extra item.
pub fn make_buckets<T: Bucketable>(mut items: Vec<T>, k: usize) -> Result<Vec<Bucket<T>>> {
    let n = items.len();
    if k == 0 {
        return Err(Error::Invalid("number of buckets must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Invalid(format!("cannot split {n} texts into {k} buckets")));
    }
    items.sort_by(|a, b| b.f_eng().total_cmp(&a.f_eng()).then_with(|| a.id().cmp(b.id())));
    let (base, extra) = (n / k, n % k);
    let mut rest = items.into_iter();
    Ok((0..k)
        .map(|i| {
            let members: Vec<T> = rest.by_ref().take(base + usize::from(i < extra)).collect();
            let (f_eng_mean, f_eng_std) = mean_std(members.iter().map(Bucketable::f_eng));
            Bucket { index: i + 1, members, f_eng_mean, f_eng_std }
        })
        .collect())
}

/// Ids chosen for self-training, before intersecting with buckets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub ids: BTreeSet<String>,
    /// Counts by predicted label, `[positive, negative]`.
    pub per_class_counts: [usize; 2],
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("selection fraction must lie in (0, 1], got {delta}")))
    }
}

/// Descending confidence, ties by ascending id.
fn by_confidence(a: &&ScoredExample, b: &&ScoredExample) -> Ordering {
    b.prediction
        .confidence
        .total_cmp(&a.prediction.confidence)
        .then_with(|| a.example.id.cmp(&b.example.id))
}

/// Number kept from a group of `n`: `round_half_up(delta * n)`, at least one
/// when `n > 0`.
pub fn selection_count(n: usize, delta: f64) -> usize {
    if n == 0 {
        0
    } else {
        round_half_up(delta * n as f64).clamp(1, n)
    }
}

/// Most confident `delta` fraction of each predicted class.
pub fn select_per_class(scored: &[ScoredExample], delta: f64) -> Result<Selection> {
    check_delta(delta)?;
    let mut ids = BTreeSet::new();
    let mut per_class_counts = [0; 2];
    for label in SentimentLabel::ALL {
        let mut class: Vec<&ScoredExample> = scored.iter().filter(|s| s.prediction.label == label).collect();
        class.sort_by(by_confidence);
        let take = selection_count(class.len(), delta);
        per_class_counts[label.index()] = take;
        ids.extend(class[..take].iter().map(|s| s.example.id.clone()));
    }
    Ok(Selection { ids, per_class_counts })
}

/// Most confident `delta` fraction of all items, ignoring predicted class.
pub fn select_global(scored: &[ScoredExample], delta: f64) -> Result<Selection> {
    check_delta(delta)?;
    let mut all: Vec<&ScoredExample> = scored.iter().collect();
    all.sort_by(by_confidence);
    let take = selection_count(all.len(), delta);
    let mut per_class_counts = [0; 2];
    let ids = all[..take]
        .iter()
        .map(|s| {
            per_class_counts[s.prediction.label.index()] += 1;
            s.example.id.clone()
        })
        .collect();
    Ok(Selection { ids, per_class_counts })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: BTreeSet<String>,
    pub per_class_counts: [usize; 2],
    /// Selected ids of each bucket, in bucket order.
    pub per_bucket: BTreeMap<usize, Vec<String>>,
}

/// Splits a selection along the buckets. Every selected id must belong to
/// exactly one bucket.
pub fn bucket_intersect<T: Bucketable>(selection: &Selection, buckets: &[Bucket<T>]) -> Result<SelectionResult> {
    let mut per_bucket = BTreeMap::new();
    let mut seen = 0;
    for b in buckets {
        let ids: Vec<String> = b.ids().filter(|id| selection.ids.contains(*id)).map(str::to_string).collect();
        seen += ids.len();
        per_bucket.insert(b.index, ids);
    }
    if seen != selection.ids.len() {
        return Err(Error::Invalid(format!(
            "{} selected ids fall outside the buckets",
            selection.ids.len().abs_diff(seen)
        )));
    }
    Ok(SelectionResult {
        selected: selection.ids.clone(),
        per_class_counts: selection.per_class_counts,
        per_bucket,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStat {
    pub bucket: usize,
    pub size: usize,
    pub f_eng_mean: f64,
    pub f_eng_std: f64,
    pub f_eng_min: f64,
    pub f_eng_max: f64,
}

pub fn bucket_stats<T: Bucketable>(buckets: &[Bucket<T>]) -> Vec<BucketStat> {
    buckets
        .iter()
        .map(|b| {
            let values = b.members.iter().map(Bucketable::f_eng);
            BucketStat {
                bucket: b.index,
                size: b.len(),
                f_eng_mean: b.f_eng_mean,
                f_eng_std: b.f_eng_std,
                f_eng_min: values.clone().fold(f64::INFINITY, f64::min),
                f_eng_max: values.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Counts of fractions in `bins` equal-width bins over [0, 1]; 1.0 lands
/// in the last bin.
pub fn histogram(values: impl IntoIterator<Item = f64>, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins.max(1)];
    let last = counts.len() - 1;
    for v in values {
        let idx = ((v.clamp(0.0, 1.0) * counts.len() as f64).floor() as usize).min(last);
        counts[idx] += 1;
    }
    counts
}

pub fn render_histogram(counts: &[usize]) -> String {
    const WIDTH: usize = 50;
    let max = counts.iter().copied().max().unwrap_or(0).max(1);
    let bins = counts.len() as f64;
    let mut out = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let lo = i as f64 / bins;
        let hi = (i + 1) as f64 / bins;
        let close = if i + 1 == counts.len() { ']' } else { ')' };
        let bar = "#".repeat((c * WIDTH).div_ceil(max));
        out.push_str(&format!("[{lo:.2}, {hi:.2}{close} {c:>7} {bar}\n"));
    }
    out
}
