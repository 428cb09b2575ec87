//! Labeled and unlabeled text datasets.
//!
//! Three on-disk formats are supported. TSV and CSV carry a header row
//! naming the `id`, `text` and (optional) `label` columns; TSV is read
//! without quoting, so texts may not contain tabs or newlines. JSONL holds
//! one object per line with keys `id`, `text` and `label`. A missing id is
//! synthesized from the 0-based row index.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Negative,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 2] = [SentimentLabel::Positive, SentimentLabel::Negative];

    /// Index into per-class arrays: Positive = 0, Negative = 1.
    pub fn index(self) -> usize {
        match self {
            SentimentLabel::Positive => 0,
            SentimentLabel::Negative => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            SentimentLabel::Positive => SentimentLabel::Negative,
            SentimentLabel::Negative => SentimentLabel::Positive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "positive",
            SentimentLabel::Negative => "negative",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "positive" | "pos" => Ok(SentimentLabel::Positive),
            "negative" | "neg" => Ok(SentimentLabel::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub gold: Option<SentimentLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    SourceLabeled,
    TargetUnlabeled,
    TargetWithHiddenGold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Csv,
    Jsonl,
}

impl Format {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "tsv" | "txt" => Some(Format::Tsv),
            "csv" => Some(Format::Csv),
            "jsonl" | "ndjson" => Some(Format::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Format::Tsv),
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown dataset format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub kind: DatasetKind,
    examples: Vec<Example>,
}

impl Dataset {
    /// Validates ids, texts and the label requirements of `kind`.
    ///
    /// `TargetUnlabeled` datasets have any gold labels stripped.
    pub fn new(name: impl Into<String>, kind: DatasetKind, mut examples: Vec<Example>) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::with_capacity(examples.len());
        for (row, ex) in examples.iter_mut().enumerate() {
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::Invalid(format!("{name}: duplicate id {:?} at row {row}", ex.id)));
            }
            if ex.text.trim().is_empty() {
                return Err(Error::Invalid(format!("{name}: empty text for id {:?}", ex.id)));
            }
            match kind {
                DatasetKind::SourceLabeled if ex.gold.is_none() => {
                    return Err(Error::Invalid(format!(
                        "{name}: id {:?} has no label in a labeled dataset",
                        ex.id
                    )))
                }
                DatasetKind::TargetUnlabeled => ex.gold = None,
                _ => {}
            }
        }
        Ok(Dataset { name, kind, examples })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Class counts as `[positive, negative]`, ignoring unlabeled examples.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for label in self.examples.iter().filter_map(|e| e.gold) {
            counts[label.index()] += 1;
        }
        counts
    }

    /// Gold labels keyed by id, for evaluation only.
    pub fn golds(&self) -> indexmap::IndexMap<String, SentimentLabel> {
        self.examples
            .iter()
            .filter_map(|e| e.gold.map(|g| (e.id.clone(), g)))
            .collect()
    }

    /// Same examples with every gold label removed.
    pub fn without_gold(&self) -> Dataset {
        Dataset {
            name: self.name.clone(),
            kind: DatasetKind::TargetUnlabeled,
            examples: self
                .examples
                .iter()
                .map(|e| Example { gold: None, ..e.clone() })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    id: Option<serde_json::Value>,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

fn parse_label(raw: &str, path: &str, line: usize) -> Result<Option<SentimentLabel>> {
    if raw.trim().is_empty() {
        return Ok(None);
    }
    raw.parse().map(Some).map_err(|message| Error::Parse {
        path: path.to_string(),
        line,
        message,
    })
}

pub fn load_dataset(path: &Path, format: Format, kind: DatasetKind) -> Result<Dataset> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let examples = match format {
        Format::Jsonl => read_jsonl(BufReader::new(file), &shown)?,
        Format::Tsv => read_delimited(file, b'\t', false, &shown)?,
        Format::Csv => read_delimited(file, b',', true, &shown)?,
    };
    if examples.is_empty() {
        return Err(Error::Parse {
            path: shown,
            line: 1,
            message: "empty file".into(),
        });
    }
    Dataset::new(name, kind, examples)
}

fn read_jsonl(reader: impl BufRead, path: &str) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_string(),
            line: lineno + 1,
            message,
        };
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let row = out.len();
        let id = match rec.id {
            None | Some(serde_json::Value::Null) => row.to_string(),
            Some(serde_json::Value::String(s)) => s,
            Some(serde_json::Value::Number(n)) => n.to_string(),
            Some(other) => return Err(parse_err(format!("id must be a string, got {other}"))),
        };
        let gold = match rec.label {
            Some(l) => parse_label(&l, path, lineno + 1)?,
            None => None,
        };
        out.push(Example { id, text: rec.text, gold });
    }
    Ok(out)
}

fn read_delimited(file: File, delimiter: u8, quoting: bool, path: &str) -> Result<Vec<Example>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .quoting(quoting)
        .flexible(false)
        .from_reader(file);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let text_col = column("text").ok_or_else(|| parse_err(1, "missing `text` column".into()))?;
    let id_col = column("id");
    let label_col = column("label");

    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let id = id_col
            .and_then(|c| record.get(c))
            .filter(|s| !s.is_empty())
            .map_or_else(|| row.to_string(), str::to_string);
        let text = record
            .get(text_col)
            .ok_or_else(|| parse_err(line, "missing text field".into()))?
            .to_string();
        let gold = match label_col.and_then(|c| record.get(c)) {
            Some(raw) => parse_label(raw, path, line)?,
            None => None,
        };
        out.push(Example { id, text, gold });
    }
    Ok(out)
}

/// Writes a dataset in `format`. Gold labels are written when present.
pub fn save_dataset(dataset: &Dataset, path: &Path, format: Format) -> Result<()> {
    let mut file = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e: std::io::Error| Error::io(path, e);
    let has_labels = dataset.examples.iter().any(|e| e.gold.is_some());
    match format {
        Format::Jsonl => {
            for ex in &dataset.examples {
                let mut obj = serde_json::Map::new();
                obj.insert("id".into(), ex.id.clone().into());
                obj.insert("text".into(), ex.text.clone().into());
                if let Some(g) = ex.gold {
                    obj.insert("label".into(), g.as_str().into());
                }
                writeln!(file, "{}", serde_json::Value::Object(obj)).map_err(io)?;
            }
        }
        Format::Tsv => {
            writeln!(file, "{}", if has_labels { "id\ttext\tlabel" } else { "id\ttext" }).map_err(io)?;
            for ex in &dataset.examples {
                if [&ex.id, &ex.text].iter().any(|s| s.contains(['\t', '\n', '\r'])) {
                    return Err(Error::Invalid(format!(
                        "id {:?}: tabs and newlines cannot be stored in TSV",
                        ex.id
                    )));
                }
                let label = ex.gold.map_or("", SentimentLabel::as_str);
                if has_labels {
                    writeln!(file, "{}\t{}\t{}", ex.id, ex.text, label).map_err(io)?;
                } else {
                    writeln!(file, "{}\t{}", ex.id, ex.text).map_err(io)?;
                }
            }
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(&mut file);
            let csv_err = |e: csv::Error| Error::Invalid(e.to_string());
            if has_labels {
                writer.write_record(["id", "text", "label"]).map_err(csv_err)?;
            } else {
                writer.write_record(["id", "text"]).map_err(csv_err)?;
            }
            for ex in &dataset.examples {
                let label = ex.gold.map_or("", SentimentLabel::as_str);
                if has_labels {
                    writer.write_record([ex.id.as_str(), &ex.text, label]).map_err(csv_err)?;
                } else {
                    writer.write_record([ex.id.as_str(), &ex.text]).map_err(csv_err)?;
                }
            }
            writer.flush().map_err(io)?;
        }
    }
    file.flush().map_err(io)
}

/// Round-half-up of a non-negative product, computed in f64.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Label-stratified split into `(train, dev)`.
///
/// Each class contributes `round_half_up(fraction * class_size)` examples
/// to dev. Both splits keep the original file order.
pub fn train_dev_split(d: &Dataset, dev_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if d.kind != DatasetKind::SourceLabeled {
        return Err(Error::Invalid(format!("{}: split requires a labeled source dataset", d.name)));
    }
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(Error::Invalid(format!("dev fraction {dev_fraction} outside (0, 1)")));
    }
    let mut in_dev = vec![false; d.len()];
    for label in SentimentLabel::ALL {
        let mut members: Vec<usize> = (0..d.len()).filter(|&i| d.examples[i].gold == Some(label)).collect();
        let take = round_half_up(dev_fraction * members.len() as f64).min(members.len());
        members.shuffle(&mut seed::rng(seed, "split", label.index() as u64));
        for &i in &members[..take] {
            in_dev[i] = true;
        }
    }
    let (dev, train): (Vec<_>, Vec<_>) = d.examples.iter().cloned().zip(in_dev).partition(|(_, dev)| *dev);
    if dev.is_empty() || train.is_empty() {
        return Err(Error::Invalid(format!(
            "{}: dev fraction {dev_fraction} leaves an empty split ({} examples)",
            d.name,
            d.len()
        )));
    }
    let strip = |v: Vec<(Example, bool)>| v.into_iter().map(|(e, _)| e).collect();
    Ok((
        Dataset { name: format!("{}-train", d.name), kind: d.kind, examples: strip(train) },
        Dataset { name: format!("{}-dev", d.name), kind: d.kind, examples: strip(dev) },
    ))
}

/// Duplicates minority-class examples (with replacement) until both classes
/// have the majority count. Duplicates get ids `<id>#dup<n>`, `n` counting
/// from 1, and are appended after the original examples.
pub fn upsample_minority(d: &Dataset, seed: u64) -> Result<Dataset> {
    if d.examples.iter().any(|e| e.gold.is_none()) {
        return Err(Error::Invalid(format!("{}: upsampling needs gold labels on every example", d.name)));
    }
    let counts = d.class_counts();
    if counts.contains(&0) {
        return Err(Error::Invalid(format!("{}: upsampling needs both classes, got {counts:?}", d.name)));
    }
    let minority = if counts[0] < counts[1] { SentimentLabel::Positive } else { SentimentLabel::Negative };
    let deficit = counts[0].abs_diff(counts[1]);
    let pool: Vec<&Example> = d.examples.iter().filter(|e| e.gold == Some(minority)).collect();
    let mut rng = seed::rng(seed, "upsample", 0);
    let mut examples = d.examples.clone();
    examples.reserve(deficit);
    for n in 1..=deficit {
        let src = pool[rng.gen_range(0..pool.len())];
        examples.push(Example {
            id: format!("{}#dup{n}", src.id),
            ..src.clone()
        });
    }
    Dataset::new(d.name.clone(), d.kind, examples)
}
