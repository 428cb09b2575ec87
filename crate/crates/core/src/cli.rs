//! The `progst` command line.
//!
//! Exit codes: 0 on success, 1 on a runtime failure (reported on stderr as
//! one JSON object `{"error": kind, "message": text}`), 2 on a usage error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::classifier::{Classifier, ExternalClassifier, LinearClassifier};
use crate::config::Settings;
use crate::corpus::{load_dataset, save_dataset, Dataset, DatasetKind, Format, SentimentLabel};
use crate::curriculum::{self, Fraction};
use crate::evaluation::{self, probe_ood, MetricsReport};
use crate::langid::{Detector, Lexicon, Script};
use crate::pipeline::{self, DetectorSpec, Method, RunConfig, RunReport};
use crate::synthgen;
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "progst", version, about = "Progressive self-training for code-switched sentiment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Resource-rich word list, one word per line.
    #[arg(long, conflicts_with = "script_detector")]
    pub lexicon: Option<PathBuf>,
    /// Count words written in this script as resource-rich.
    #[arg(long)]
    pub script_detector: Option<Script>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Shell command of an external classifier process.
    #[arg(long)]
    pub external: Option<String>,
    /// Any configuration key, as KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the synthetic benchmark.
    Synth(Common),
    /// Train the source model and report its dev metrics.
    Pretrain(Common),
    /// Run one method and write its report and metrics.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "progressive")]
        method: Method,
    },
    /// Run a grid over k, delta and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "progressive")]
        method: Method,
        /// Comma-separated bucket counts.
        #[arg(long)]
        ks: Option<String>,
        /// Comma-separated selection fractions.
        #[arg(long)]
        deltas: Option<String>,
        /// Comma-separated seeds.
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Out-of-distribution fractions per bucket.
    ProbeOod {
        #[command(flatten)]
        common: Common,
        /// Comma-separated alpha levels.
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Resource-rich fraction statistics per bucket.
    BucketStats {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Score a run report against gold labels.
    Eval {
        #[arg(long)]
        report: PathBuf,
        /// Dataset carrying the gold labels.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn settings(common: &Common) -> Result<Settings> {
    let mut s = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for kv in &common.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        s.set(key.trim(), value)?;
    }
    if let Some(seed) = common.seed {
        s.set("seed", &seed.to_string())?;
    }
    if let Some(k) = common.k {
        s.run.k = k;
    }
    if let Some(delta) = common.delta {
        s.run.delta = delta;
    }
    if let Some(p) = &common.lexicon {
        s.lexicon = Some(p.clone());
        s.script = None;
    }
    if let Some(script) = common.script_detector {
        s.script = Some(script);
        s.lexicon = None;
    }
    for (slot, flag) in [(&mut s.source, &common.source), (&mut s.target, &common.target), (&mut s.out, &common.out)] {
        if let Some(p) = flag {
            *slot = Some(p.clone());
        }
    }
    if let Some(cmd) = &common.external {
        s.external_command = Some(cmd.clone());
    }
    Ok(s)
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Config(format!("missing {key} (set it in the config file or with --{key})")))
}

fn format_of(path: &Path) -> Result<Format> {
    Format::from_path(path).ok_or_else(|| Error::Config(format!("cannot tell dataset format of {}", path.display())))
}

pub fn load_source(path: &Path) -> Result<Dataset> {
    load_dataset(path, format_of(path)?, DatasetKind::SourceLabeled)
}

/// Loads the target; gold labels, when present, are kept for evaluation.
pub fn load_target(path: &Path) -> Result<Dataset> {
    load_dataset(path, format_of(path)?, DatasetKind::TargetWithHiddenGold)
}

pub fn detector(spec: &DetectorSpec) -> Result<Detector> {
    Ok(match spec {
        DetectorSpec::Lexicon(path) => Detector::Lexicon(Lexicon::load(Path::new(path))?),
        DetectorSpec::Script(script) => Detector::Script(*script),
    })
}

pub fn classifier(run: &RunConfig, external: Option<&str>) -> Result<Box<dyn Classifier>> {
    Ok(match external {
        Some(cmd) => Box::new(ExternalClassifier::from_shell(cmd)?),
        None => Box::new(LinearClassifier::new(run.classifier.clone())?),
    })
}

fn out_dir(s: &Settings) -> Result<PathBuf> {
    let dir = required(&s.out, "out")?.to_path_buf();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write(path, &s)
}

fn parse_list<T: std::str::FromStr>(flag: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|e| Error::Config(format!("--{flag}: cannot parse {v:?}: {e}"))))
        .collect()
}

/// Gold labels for every target id, or `None` when any are missing.
fn full_golds(target: &Dataset) -> Option<IndexMap<String, SentimentLabel>> {
    let golds = target.golds();
    (golds.len() == target.len()).then_some(golds)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub method: Method,
    pub global: MetricsReport,
    pub per_bucket: Vec<evaluation::BucketMetrics>,
}

pub fn report_metrics(method: Method, report: &RunReport, golds: &IndexMap<String, SentimentLabel>) -> Result<RunMetrics> {
    Ok(RunMetrics {
        method,
        global: evaluation::evaluate(&report.final_predictions, golds)?,
        per_bucket: evaluation::per_bucket_metrics(report, golds)?,
    })
}

struct Inputs {
    source: Dataset,
    target: Dataset,
    detector: Detector,
}

fn inputs(s: &mut Settings, need_source: bool) -> Result<Inputs> {
    s.resolve_detector()?;
    s.run.validate()?;
    let source = if need_source {
        load_source(required(&s.source, "source")?)?
    } else {
        Dataset::new("unused", DatasetKind::SourceLabeled, Vec::new())?
    };
    let target = load_target(required(&s.target, "target")?)?;
    let detector = detector(&s.run.detector)?;
    Ok(Inputs { source, target, detector })
}

fn cmd_synth(common: &Common) -> Result<()> {
    let s = settings(common)?;
    let dir = out_dir(&s)?;
    let corpus = synthgen::generate(&s.synth)?;
    save_dataset(&corpus.source, &dir.join("source.tsv"), Format::Tsv)?;
    save_dataset(&corpus.target, &dir.join("target.tsv"), Format::Tsv)?;
    corpus.lexicon_a.save(&dir.join("lexicon_a.txt"))?;
    write_json(&dir.join("synth.json"), &json!({"config": s.synth, "digest": corpus.digest()}))?;
    println!("{}", synthgen::describe(&corpus));
    Ok(())
}

fn cmd_pretrain(common: &Common) -> Result<()> {
    let s = settings(common)?;
    s.run.validate()?;
    let dir = out_dir(&s)?;
    let source = load_source(required(&s.source, "source")?)?;
    let mut clf = classifier(&s.run, s.external_command.as_deref())?;
    let (record, split) = pipeline::pretrain_source(&source, &s.run, clf.as_mut())?;
    let texts: Vec<&str> = split.dev.examples().iter().map(|e| e.text.as_str()).collect();
    let preds = clf.predict_all(&texts)?;
    let preds: IndexMap<String, _> = split.dev.examples().iter().map(|e| e.id.clone()).zip(preds).collect();
    let dev = evaluation::evaluate(&preds, &split.dev.golds())?;
    println!("dev macro-F1 {:.4}", dev.macro_f1);
    write_json(
        &dir.join("pretrain.json"),
        &json!({"model": record, "train_size": split.train.len(), "dev_size": split.dev.len(), "dev_metrics": dev}),
    )
}

fn cmd_run(common: &Common, method: Method) -> Result<()> {
    let mut s = settings(common)?;
    let dir = out_dir(&s)?;
    let inp = inputs(&mut s, method != Method::Supervised)?;
    let mut clf = classifier(&s.run, s.external_command.as_deref())?;
    let report = pipeline::run_method(method, &inp.source, &inp.target, &inp.detector, &s.run, clf.as_mut())?;
    write(&dir.join("report.json"), &report.to_json())?;
    if let Some(golds) = full_golds(&inp.target) {
        let metrics = report_metrics(method, &report, &golds)?;
        println!("{method}: macro-F1 {:.4}", metrics.global.macro_f1);
        write_json(&dir.join("metrics.json"), &metrics)?;
    }
    Ok(())
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cmd_sweep(common: &Common, method: Method, ks: &Option<String>, deltas: &Option<String>, seeds: &Option<String>) -> Result<()> {
    let mut s = settings(common)?;
    if let Some(v) = ks {
        s.sweep_k = parse_list("ks", v)?;
    }
    if let Some(v) = deltas {
        s.sweep_delta = parse_list("deltas", v)?;
    }
    if let Some(v) = seeds {
        s.sweep_seeds = parse_list("seeds", v)?;
    }
    if s.sweep_k.is_empty() || s.sweep_delta.is_empty() || s.sweep_seeds.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let dir = out_dir(&s)?;
    let inp = inputs(&mut s, method != Method::Supervised)?;
    let golds = full_golds(&inp.target).ok_or_else(|| Error::Invalid("sweep needs gold labels on the target".into()))?;
    let mut jobs = Vec::new();
    for &k in &s.sweep_k {
        for &delta in &s.sweep_delta {
            for &seed in &s.sweep_seeds {
                jobs.push((k, delta, seed));
            }
        }
    }
    let results: Vec<std::result::Result<MetricsReport, String>> = jobs
        .par_iter()
        .map(|&(k, delta, seed)| {
            let run = RunConfig { k, delta, seed, ..s.run.clone() };
            let go = || -> Result<MetricsReport> {
                let mut clf = classifier(&run, s.external_command.as_deref())?;
                let report = pipeline::run_method(method, &inp.source, &inp.target, &inp.detector, &run, clf.as_mut())?;
                evaluation::evaluate(&report.final_predictions, &golds)
            };
            go().map_err(|e| format!("{}: {e}", e.kind()))
        })
        .collect();

    let mut runs = String::from("k,delta,seed,macro_f1,micro_f1,weighted_f1,error\n");
    for (&(k, delta, seed), r) in jobs.iter().zip(&results) {
        match r {
            Ok(m) => runs.push_str(&format!("{k},{delta},{seed},{},{},{},\n", m.macro_f1, m.micro_f1, m.weighted_f1)),
            Err(e) => runs.push_str(&format!("{k},{delta},{seed},,,,{}\n", csv_field(e))),
        }
    }
    let mut cells = String::from(
        "k,delta,seeds,failed,macro_f1_mean,macro_f1_std,micro_f1_mean,micro_f1_std,weighted_f1_mean,weighted_f1_std\n",
    );
    let mut failed_total = 0;
    for &k in &s.sweep_k {
        for &delta in &s.sweep_delta {
            let ok: Vec<&MetricsReport> = jobs
                .iter()
                .zip(&results)
                .filter(|((jk, jd, _), _)| *jk == k && *jd == delta)
                .filter_map(|(_, r)| r.as_ref().ok())
                .collect();
            let failed = s.sweep_seeds.len() - ok.len();
            failed_total += failed;
            cells.push_str(&format!("{k},{delta},{},{failed}", s.sweep_seeds.len()));
            for get in [|m: &MetricsReport| m.macro_f1, |m: &MetricsReport| m.micro_f1, |m: &MetricsReport| m.weighted_f1] {
                if ok.is_empty() {
                    cells.push_str(",,");
                } else {
                    let (mean, std) = mean_std(&ok.iter().map(|m| get(m)).collect::<Vec<_>>());
                    cells.push_str(&format!(",{mean},{std}"));
                }
            }
            cells.push('\n');
        }
    }
    write(&dir.join("sweep_runs.csv"), &runs)?;
    write(&dir.join("sweep.csv"), &cells)?;
    print!("{cells}");
    if failed_total > 0 {
        return Err(Error::Invalid(format!("{failed_total} sweep run(s) failed; see sweep_runs.csv")));
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
}

fn cmd_probe_ood(common: &Common, alphas: &Option<String>) -> Result<()> {
    let mut s = settings(common)?;
    if let Some(v) = alphas {
        s.alphas = parse_list("alphas", v)?;
    }
    let dir = out_dir(&s)?;
    let inp = inputs(&mut s, true)?;
    let mut clf = classifier(&s.run, s.external_command.as_deref())?;
    let probe = pipeline::collect_probe_inputs(&inp.source, &inp.target, &inp.detector, &s.run, clf.as_mut())?;
    let report = probe_ood(&probe, &s.alphas)?;
    write_json(&dir.join("ood.json"), &json!({"seed": s.run.seed, "k": s.run.k, "delta": s.run.delta, "report": report}))?;
    write(&dir.join("ood.csv"), &report.to_csv())?;
    print!("{}", report.to_csv());
    Ok(())
}

fn cmd_bucket_stats(common: &Common, bins: usize) -> Result<()> {
    let mut s = settings(common)?;
    let dir = out_dir(&s)?;
    let inp = inputs(&mut s, false)?;
    let fractions: Vec<Fraction> = inp
        .target
        .examples()
        .iter()
        .map(|e| Fraction { id: e.id.clone(), f_eng: inp.detector.fraction(&e.text).value })
        .collect();
    let counts = curriculum::histogram(fractions.iter().map(|f| f.f_eng), bins);
    let buckets = curriculum::make_buckets(fractions, s.run.k)?;
    let stats = curriculum::bucket_stats(&buckets);
    let rendered = curriculum::render_histogram(&counts);
    write_json(&dir.join("bucket_stats.json"), &json!({"k": s.run.k, "buckets": stats, "histogram": counts}))?;
    write(&dir.join("histogram.txt"), &rendered)?;
    for st in &stats {
        println!(
            "B_{}: n={} mean={:.4} std={:.4} min={:.4} max={:.4}",
            st.bucket, st.size, st.f_eng_mean, st.f_eng_std, st.f_eng_min, st.f_eng_max
        );
    }
    print!("{rendered}");
    Ok(())
}

fn cmd_eval(report: &Path, gold: &Path, out: &Option<PathBuf>) -> Result<()> {
    let text = fs::read_to_string(report).map_err(|e| Error::io(report, e))?;
    let report: RunReport = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: report.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let golds = load_target(gold)?.golds();
    let metrics = json!({
        "global": evaluation::evaluate(&report.final_predictions, &golds)?,
        "per_bucket": evaluation::per_bucket_metrics(&report, &golds)?,
    });
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            write_json(&dir.join("metrics.json"), &metrics)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&metrics).unwrap());
            Ok(())
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(c) => cmd_synth(c),
        Command::Pretrain(c) => cmd_pretrain(c),
        Command::Run { common, method } => cmd_run(common, *method),
        Command::Sweep { common, method, ks, deltas, seeds } => cmd_sweep(common, *method, ks, deltas, seeds),
        Command::ProbeOod { common, alphas } => cmd_probe_ood(common, alphas),
        Command::BucketStats { common, bins } => cmd_bucket_stats(common, *bins),
        Command::Eval { report, gold, out } => cmd_eval(report, gold, out),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            1
        }
    }
}
