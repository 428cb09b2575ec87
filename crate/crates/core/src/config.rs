//! Flat `key = value` configuration files.
//!
//! Lines starting with `#` and blank lines are ignored. Every key must be
//! known; lists are comma-separated. Values are applied on top of the
//! defaults in file order, and command-line flags are applied last through
//! the same [`Settings::set`] entry point.
//!
//! | key | meaning |
//! |-----|---------|
//! | `source`, `target` | dataset paths (format from the extension) |
//! | `out` | output directory |
//! | `lexicon` / `script` | resource-rich word detector (one of the two) |
//! | `external_command` | shell command of an external classifier |
//! | `k`, `delta`, `seed` | buckets, selection fraction, root seed |
//! | `selection_mode` | `per_class` or `global` |
//! | `use_source_in_training`, `upsample_source`, `upsample_pseudo` | booleans |
//! | `dev_fraction` | pretraining dev share |
//! | `feature_dims`, `word_ngrams`, `char_ngrams`, `epochs`, `batch_size`, `learning_rate`, `l2` | classifier |
//! | `alphas` | OOD probe levels |
//! | `sweep_k`, `sweep_delta`, `sweep_seeds` | sweep grid |
//! | `synth_*` | synthetic benchmark fields (`synth_mix_ratios = 0.7:1, 0.15:1`) |

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::langid::Script;
use crate::pipeline::{DetectorSpec, RunConfig};
use crate::synthgen::SynthConfig;
use crate::{Error, Result};

pub const DEFAULT_ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub run: RunConfig,
    pub synth: SynthConfig,
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub script: Option<Script>,
    pub external_command: Option<String>,
    pub alphas: Vec<f64>,
    pub sweep_k: Vec<usize>,
    pub sweep_delta: Vec<f64>,
    pub sweep_seeds: Vec<u64>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            run: RunConfig::default(),
            synth: SynthConfig::default(),
            source: None,
            target: None,
            out: None,
            lexicon: None,
            script: None,
            external_command: None,
            alphas: DEFAULT_ALPHAS.to_vec(),
            sweep_k: vec![2, 3, 4],
            sweep_delta: vec![0.5],
            sweep_seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

impl Settings {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let clf = &mut self.run.classifier;
        let synth = &mut self.synth;
        match key {
            "source" => self.source = Some(value.into()),
            "target" => self.target = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "lexicon" => self.lexicon = Some(value.into()),
            "script" => self.script = Some(parse(key, value)?),
            "external_command" => self.external_command = Some(value.to_string()),
            "k" => self.run.k = parse(key, value)?,
            "delta" => self.run.delta = parse(key, value)?,
            "seed" => {
                self.run.seed = parse(key, value)?;
                synth.seed = self.run.seed;
            }
            "selection_mode" => self.run.selection_mode = parse(key, value)?,
            "use_source_in_training" => self.run.use_source_in_training = parse_bool(key, value)?,
            "upsample_source" => self.run.upsample_source = parse_bool(key, value)?,
            "upsample_pseudo" => self.run.upsample_pseudo = parse_bool(key, value)?,
            "dev_fraction" => self.run.dev_fraction = parse(key, value)?,
            "feature_dims" => clf.feature_dims = parse(key, value)?,
            "word_ngrams" => clf.word_ngrams = parse_list(key, value)?,
            "char_ngrams" => clf.char_ngrams = parse_list(key, value)?,
            "epochs" => clf.epochs = parse(key, value)?,
            "batch_size" => clf.batch_size = parse(key, value)?,
            "learning_rate" => clf.learning_rate = parse(key, value)?,
            "l2" => clf.l2 = parse(key, value)?,
            "alphas" => self.alphas = parse_list(key, value)?,
            "sweep_k" => self.sweep_k = parse_list(key, value)?,
            "sweep_delta" => self.sweep_delta = parse_list(key, value)?,
            "sweep_seeds" => self.sweep_seeds = parse_list(key, value)?,
            "synth_vocab_size_per_lang" => synth.vocab_size_per_lang = parse(key, value)?,
            "synth_sentiment_word_fraction" => synth.sentiment_word_fraction = parse(key, value)?,
            "synth_polarity_agreement" => synth.polarity_agreement = parse(key, value)?,
            "synth_sentence_length" => match parse_list::<usize>(key, value)?[..] {
                [lo, hi] => synth.sentence_length = (lo, hi),
                _ => return Err(Error::Config(format!("{key}: expected \"min, max\", got {value:?}"))),
            },
            "synth_mix_ratios" => {
                synth.mix_ratio_distribution = value
                    .split(',')
                    .map(|pair| {
                        let (r, w) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::Config(format!("{key}: expected ratio:weight, got {pair:?}")))?;
                        Ok((parse(key, r.trim())?, parse(key, w.trim())?))
                    })
                    .collect::<Result<_>>()?
            }
            "synth_n_source" => synth.n_source = parse(key, value)?,
            "synth_n_target" => synth.n_target = parse(key, value)?,
            "synth_label_noise" => synth.label_noise = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key.trim(), value).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Settings::default();
        s.apply_text(&text, &path.display().to_string())?;
        Ok(s)
    }

    /// Settles the detector choice into the run config.
    pub fn resolve_detector(&mut self) -> Result<()> {
        self.run.detector = match (&self.lexicon, self.script) {
            (Some(_), Some(_)) => return Err(Error::Config("set either lexicon or script, not both".into())),
            (Some(path), None) => DetectorSpec::Lexicon(path.display().to_string()),
            (None, Some(script)) => DetectorSpec::Script(script),
            (None, None) => return Err(Error::Config("no detector: set lexicon or script".into())),
        };
        Ok(())
    }

    /// Writes the settings back in the file format.
    pub fn render(&self) -> String {
        let r = &self.run;
        let c = &r.classifier;
        let s = &self.synth;
        let join = |v: Vec<String>| v.join(", ");
        let mut lines = Vec::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        for (key, value) in [
            ("source", path(&self.source)),
            ("target", path(&self.target)),
            ("out", path(&self.out)),
            ("lexicon", path(&self.lexicon)),
            ("script", self.script.map(|s| s.as_str().to_string())),
            ("external_command", self.external_command.clone()),
        ] {
            if let Some(v) = value {
                lines.push(format!("{key} = {v}"));
            }
        }
        let selection = serde_json::to_value(r.selection_mode).unwrap();
        lines.extend([
            format!("k = {}", r.k),
            format!("delta = {}", r.delta),
            format!("seed = {}", r.seed),
            format!("selection_mode = {}", selection.as_str().unwrap()),
            format!("use_source_in_training = {}", r.use_source_in_training),
            format!("upsample_source = {}", r.upsample_source),
            format!("upsample_pseudo = {}", r.upsample_pseudo),
            format!("dev_fraction = {}", r.dev_fraction),
            format!("feature_dims = {}", c.feature_dims),
            format!("word_ngrams = {}", join(c.word_ngrams.iter().map(|n| n.to_string()).collect())),
            format!("char_ngrams = {}", join(c.char_ngrams.iter().map(|n| n.to_string()).collect())),
            format!("epochs = {}", c.epochs),
            format!("batch_size = {}", c.batch_size),
            format!("learning_rate = {}", c.learning_rate),
            format!("l2 = {}", c.l2),
            format!("alphas = {}", join(self.alphas.iter().map(|a| a.to_string()).collect())),
            format!("sweep_k = {}", join(self.sweep_k.iter().map(|a| a.to_string()).collect())),
            format!("sweep_delta = {}", join(self.sweep_delta.iter().map(|a| a.to_string()).collect())),
            format!("sweep_seeds = {}", join(self.sweep_seeds.iter().map(|a| a.to_string()).collect())),
            format!("synth_vocab_size_per_lang = {}", s.vocab_size_per_lang),
            format!("synth_sentiment_word_fraction = {}", s.sentiment_word_fraction),
            format!("synth_polarity_agreement = {}", s.polarity_agreement),
            format!("synth_sentence_length = {}, {}", s.sentence_length.0, s.sentence_length.1),
            format!(
                "synth_mix_ratios = {}",
                join(s.mix_ratio_distribution.iter().map(|(r, w)| format!("{r}:{w}")).collect())
            ),
            format!("synth_n_source = {}", s.n_source),
            format!("synth_n_target = {}", s.n_target),
            format!("synth_label_noise = {}", s.label_noise),
        ]);
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::SelectionMode;

    #[test]
    fn defaults_follow_the_method() {
        let s = Settings::default();
        assert_eq!(s.run.k, 2);
        assert_eq!(s.run.delta, 0.5);
        assert_eq!(s.run.classifier.epochs, 4);
        assert_eq!(s.alphas, vec![0.01, 0.05, 0.10]);
    }

    #[test]
    fn file_values_and_comments() {
        let mut s = Settings::default();
        s.apply_text("# comment\n\nk = 3\nselection_mode = global\nword_ngrams = 1, 2\n", "cfg").unwrap();
        assert_eq!(s.run.k, 3);
        assert_eq!(s.run.selection_mode, SelectionMode::Global);
        assert_eq!(s.run.classifier.word_ngrams, vec![1, 2]);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = Settings::default().apply_text("k = 2\nbogus = 1\n", "cfg").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn render_round_trips() {
        let mut s = Settings::default();
        s.apply_text("lexicon = lex.txt\nsynth_mix_ratios = 0.9:1, 0.1:3\nseed = 9\n", "cfg").unwrap();
        let mut again = Settings::default();
        again.apply_text(&s.render(), "rendered").unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn detector_needs_exactly_one_choice() {
        let mut s = Settings::default();
        assert!(s.resolve_detector().is_err());
        s.script = Some(Script::Devanagari);
        s.resolve_detector().unwrap();
        assert_eq!(s.run.detector, DetectorSpec::Script(Script::Devanagari));
        s.lexicon = Some("x".into());
        assert!(s.resolve_detector().is_err());
    }
}
