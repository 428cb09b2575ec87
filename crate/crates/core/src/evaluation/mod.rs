//! Scoring runs: F1 aggregates, per-bucket breakdowns, out-of-distribution
//! probing and paired significance tests.

mod metrics;
mod ood;
mod ttest;

pub use metrics::{
    confusion, confusion_from_pairs, evaluate, f1_scores, per_bucket_metrics, BucketMetrics, ConfusionCounts,
    MetricsReport,
};
pub use ood::{
    ood_fraction, ood_threshold, probe_ood, OodEntry, OodReport, OodVerdict, ProbeInputs, FIRST_ITERATION, PRETRAINED,
};
pub use ttest::{paired_t_test, PairedTTest};
