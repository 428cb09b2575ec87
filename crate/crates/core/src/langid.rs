//! Word-level resource-rich language detection.
//!
//! Words are whitespace-separated tokens with surrounding punctuation
//! removed. Only tokens containing at least one alphabetic character are
//! counted as words; numbers, emoji and punctuation never enter `n_words`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    Latin,
    Devanagari,
    Tamil,
    Other,
}

impl Script {
    const ORDER: [Script; 4] = [Script::Latin, Script::Devanagari, Script::Tamil, Script::Other];

    pub fn of_char(c: char) -> Script {
        match u32::from(c) {
            0x0041..=0x005A | 0x0061..=0x007A | 0x00C0..=0x024F | 0x1E00..=0x1EFF => Script::Latin,
            0x0900..=0x097F | 0xA8E0..=0xA8FF => Script::Devanagari,
            0x0B80..=0x0BFF => Script::Tamil,
            _ => Script::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Script::Latin => "latin",
            Script::Devanagari => "devanagari",
            Script::Tamil => "tamil",
            Script::Other => "other",
        }
    }

    fn slot(self) -> usize {
        Script::ORDER.iter().position(|&s| s == self).unwrap()
    }
}

impl FromStr for Script {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "latin" => Ok(Script::Latin),
            "devanagari" => Ok(Script::Devanagari),
            "tamil" => Ok(Script::Tamil),
            other => Err(format!("unknown script detector {other:?} (expected latin, devanagari or tamil)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub script: Script,
    pub counted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedText {
    pub tokens: Vec<Token>,
}

impl TokenizedText {
    pub fn counted(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.counted)
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(u32::from(c),
            0x00A1..=0x00BF | 0x2010..=0x2027 | 0x2030..=0x205E | 0x3001..=0x3003 | 0x0964..=0x0965)
            && !c.is_alphanumeric()
}

pub fn tokenize(text: &str) -> TokenizedText {
    let tokens = text
        .split_whitespace()
        .filter_map(|raw| {
            let surface = raw.trim_matches(is_punctuation);
            if surface.is_empty() {
                return None;
            }
            let mut votes = [0usize; 4];
            for c in surface.chars().filter(|c| c.is_alphabetic()) {
                votes[Script::of_char(c).slot()] += 1;
            }
            let counted = votes.iter().any(|&v| v > 0);
            // First script with the highest vote wins.
            let script = Script::ORDER
                .into_iter()
                .zip(votes)
                .fold((Script::Other, 0), |best, (s, v)| if v > best.1 { (s, v) } else { best })
                .0;
            Some(Token { surface: surface.to_string(), script, counted })
        })
        .collect();
    TokenizedText { tokens }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub name: String,
    words: BTreeSet<String>,
}

impl Lexicon {
    pub fn new<I, S>(name: impl Into<String>, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::Invalid("lexicon is empty".into()));
        }
        Ok(Lexicon { name: name.into(), words })
    }

    /// One word per line; `#` starts a comment line, blank lines are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("lexicon");
        Lexicon::new(
            name,
            content.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = format!("# lexicon: {}\n", self.name);
        for w in &self.words {
            out.push_str(w);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

pub fn is_resource_rich(token: &Token, lexicon: &Lexicon) -> bool {
    lexicon.contains(&token.surface)
}

/// Resource-rich word fraction of a text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordFraction {
    pub value: f64,
    pub matched: usize,
    pub words: usize,
    /// No counted tokens; `value` is 0.0 by convention.
    pub degenerate: bool,
}

impl WordFraction {
    fn from_counts(matched: usize, words: usize) -> Self {
        if words == 0 {
            WordFraction { value: 0.0, matched: 0, words: 0, degenerate: true }
        } else {
            WordFraction { value: matched as f64 / words as f64, matched, words, degenerate: false }
        }
    }
}

pub fn f_eng(text: &str, lexicon: &Lexicon) -> WordFraction {
    let tokens = tokenize(text);
    let (mut matched, mut words) = (0, 0);
    for tok in tokens.counted() {
        words += 1;
        if is_resource_rich(tok, lexicon) {
            matched += 1;
        }
    }
    WordFraction::from_counts(matched, words)
}

pub fn script_fraction(text: &str, script: Script) -> WordFraction {
    let tokens = tokenize(text);
    let (mut matched, mut words) = (0, 0);
    for tok in tokens.counted() {
        words += 1;
        if tok.script == script {
            matched += 1;
        }
    }
    WordFraction::from_counts(matched, words)
}

/// Which test decides that a word belongs to the resource-rich language.
#[derive(Debug, Clone)]
pub enum Detector {
    Lexicon(Lexicon),
    Script(Script),
}

impl Detector {
    pub fn fraction(&self, text: &str) -> WordFraction {
        match self {
            Detector::Lexicon(lex) => f_eng(text, lex),
            Detector::Script(script) => script_fraction(text, *script),
        }
    }
}
