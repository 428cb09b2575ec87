//! Hashed n-gram features.
//!
//! Every n-gram is rendered as a key string and hashed with 64-bit FNV-1a
//! (see [`crate::seed::fnv1a64`]); the bucket is the hash masked to
//! `feature_dims - 1`. Keys are
//!
//! * word n-grams: `"w{n}\u{1f}"` followed by the lower-cased tokens joined
//!   with `\u{1f}`;
//! * character n-grams: `"c{n}\u{1f}"` followed by `n` consecutive
//!   characters of a single lower-cased token (no boundary markers).
//!
//! Tokens come from [`crate::langid::tokenize`], so surrounding punctuation
//! is stripped. Bucket counts are L2-normalized.

use std::collections::BTreeMap;

use super::ClassifierSpec;
use crate::langid::tokenize;
use crate::seed::fnv1a64;

const SEP: char = '\u{1f}';

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| dense[i] * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub(crate) fn bucket(key: &str, dims: usize) -> usize {
    (fnv1a64(key.as_bytes()) as usize) & (dims - 1)
}

/// Raw (unnormalized) bucket counts.
pub(crate) fn raw_counts(text: &str, spec: &ClassifierSpec) -> BTreeMap<usize, f64> {
    let words: Vec<String> = tokenize(text).tokens.into_iter().map(|t| t.surface.to_lowercase()).collect();
    let mut counts = BTreeMap::new();
    let mut key = String::new();
    for &n in &spec.word_ngrams {
        for gram in words.windows(n) {
            key.clear();
            key.push('w');
            key.push_str(&n.to_string());
            for w in gram {
                key.push(SEP);
                key.push_str(w);
            }
            *counts.entry(bucket(&key, spec.feature_dims)).or_insert(0.0) += 1.0;
        }
    }
    for &n in &spec.char_ngrams {
        for word in &words {
            let chars: Vec<char> = word.chars().collect();
            for gram in chars.windows(n) {
                key.clear();
                key.push('c');
                key.push_str(&n.to_string());
                key.push(SEP);
                key.extend(gram);
                *counts.entry(bucket(&key, spec.feature_dims)).or_insert(0.0) += 1.0;
            }
        }
    }
    counts
}

pub fn featurize(text: &str, spec: &ClassifierSpec) -> SparseVector {
    let counts = raw_counts(text, spec);
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return SparseVector::default();
    }
    let (indices, values) = counts.into_iter().map(|(i, v)| (i, v / norm)).unzip();
    SparseVector { indices, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(word: &[usize], chars: &[usize], dims: usize) -> ClassifierSpec {
        ClassifierSpec {
            feature_dims: dims,
            word_ngrams: word.to_vec(),
            char_ngrams: chars.to_vec(),
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_normalized() {
        let s = ClassifierSpec { char_ngrams: vec![3], ..Default::default() };
        let a = featurize("Loved every minute of it!", &s);
        assert_eq!(a, featurize("Loved every minute of it!", &s));
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert!(a.indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_text_is_zero_vector() {
        assert_eq!(featurize("", &ClassifierSpec::default()).nnz(), 0);
        assert_eq!(featurize("  !! ", &ClassifierSpec::default()).nnz(), 0);
    }

    #[test]
    fn single_char_bigram_hand_trace() {
        // FNV-1a by hand over the key bytes "c2" 0x1f "ab".
        let mut h: u64 = 0xcbf29ce484222325;
        for b in [b'c', b'2', 0x1f, b'a', b'b'] {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        let expected = (h & 15) as usize;
        // dims 16 is below the trainable minimum but fine for featurizing.
        let counts = raw_counts("ab", &spec(&[], &[2], 16));
        assert_eq!(counts.len(), 1);
        assert_eq!(counts.get(&expected), Some(&1.0));
    }

    #[test]
    fn case_and_punctuation_do_not_matter() {
        let s = ClassifierSpec::default();
        assert_eq!(featurize("Great movie!", &s), featurize("great MOVIE", &s));
    }
}
