//! Book ingestion, sentence segmentation, tokenization, chunking, and
//! stratified splits.
//!
//! Segmentation is rule-based and dependency-free: a sentence ends at a run
//! of `.?!` (plus trailing closing quotes) followed by whitespace and an
//! uppercase letter or opening quote, unless the word before the period is a
//! known abbreviation or a single initial. A blank line always ends a
//! sentence. Deterministic by construction; concatenating the output
//! preserves every non-whitespace character in order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RngFactory, StreamPurpose};

/// Binary success label from the dataset metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuccessLabel {
    Successful,
    Unsuccessful,
}

impl SuccessLabel {
    pub fn from_metadata(raw: &str) -> Option<Self> {
        match raw {
            "success" => Some(SuccessLabel::Successful),
            "failure" => Some(SuccessLabel::Unsuccessful),
            _ => None,
        }
    }

    /// Target value for the sigmoid head: Successful = 1.
    pub fn as_target(self) -> f64 {
        match self {
            SuccessLabel::Successful => 1.0,
            SuccessLabel::Unsuccessful => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SuccessLabel::Successful => "successful",
            SuccessLabel::Unsuccessful => "unsuccessful",
        }
    }
}

impl fmt::Display for SuccessLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct BookRecord {
    pub id: String,
    pub genre: String,
    pub success: SuccessLabel,
    pub text: String,
}

/// Disjoint, jointly covering id lists for one (seed, corpus) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
}

/// Read the metadata CSV (`id,genre,label` with label in {success, failure})
/// and one `<corpus_dir>/<id>.txt` per row. Fails atomically: any missing
/// file or bad label aborts the whole ingest.
pub fn ingest(corpus_dir: &Path, metadata: &Path) -> Result<Vec<BookRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(metadata)
        .map_err(|e| Error::Data(format!("cannot open metadata {}: {e}", metadata.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("metadata {}: {e}", metadata.display())))?
        .clone();
    let expected = ["id", "genre", "label"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Data(format!(
            "metadata {} must have header id,genre,label, got {:?}",
            metadata.display(),
            headers
        )));
    }

    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| {
            Error::parse(metadata.display().to_string(), idx + 2, e.to_string())
        })?;
        if row.len() != 3 {
            return Err(Error::parse(
                metadata.display().to_string(),
                idx + 2,
                format!("expected 3 fields, got {}", row.len()),
            ));
        }
        let id = row[0].to_string();
        let genre = row[1].to_string();
        let label = SuccessLabel::from_metadata(&row[2]).ok_or_else(|| {
            Error::Data(format!(
                "book {id}: unknown success label {:?} (expected success|failure)",
                &row[2]
            ))
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::Data(format!("duplicate book id {id} in metadata")));
        }
        rows.push((id, genre, label));
    }

    let mut records = Vec::with_capacity(rows.len());
    for (id, genre, success) in rows {
        let path = corpus_dir.join(format!("{id}.txt"));
        let text = fs::read_to_string(&path)
            .map_err(|_| Error::Data(format!("missing text file for book id {id} ({})", path.display())))?;
        records.push(BookRecord { id, genre, success, text });
    }
    Ok(records)
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "prof", "rev", "hon", "gen", "col", "capt", "lt", "sgt",
    "maj", "jr", "sr", "messrs", "mme", "mlle", "mt", "vs",
];

fn is_sentence_punct(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing_trailer(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201d}' | '\u{2019}' | ')' | ']')
}

fn is_opening_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201c}' | '\u{2018}')
}

/// The lowercased word immediately before position `i` (exclusive), if any.
fn word_before(chars: &[char], i: usize) -> Option<String> {
    let mut end = i;
    while end > 0 && !chars[end - 1].is_alphabetic() {
        if chars[end - 1].is_whitespace() {
            return None;
        }
        end -= 1;
    }
    if end == 0 {
        return None;
    }
    let mut start = end;
    while start > 0 && chars[start - 1].is_alphabetic() {
        start -= 1;
    }
    if start == end {
        None
    } else {
        Some(chars[start..end].iter().collect::<String>().to_lowercase())
    }
}

/// Split text into sentences. Empty text yields an empty list.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    let flush = |from: usize, to: usize, out: &mut Vec<String>| {
        let s: String = chars[from..to].iter().collect();
        let trimmed = s.trim();
        if !trimmed.is_empty() {
            out.push(trimmed.to_string());
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if is_sentence_punct(c) {
            let punct_start = i;
            let mut j = i;
            while j < chars.len() && is_sentence_punct(chars[j]) {
                j += 1;
            }
            while j < chars.len() && is_closing_trailer(chars[j]) {
                j += 1;
            }
            // Needs whitespace, then an uppercase letter or opening quote.
            let mut k = j;
            while k < chars.len() && chars[k].is_whitespace() {
                k += 1;
            }
            let at_end = k >= chars.len();
            let starts_new = !at_end
                && k > j
                && (chars[k].is_uppercase() || is_opening_quote(chars[k]));
            let abbreviation = chars[punct_start] == '.'
                && j == punct_start + 1
                && word_before(&chars, punct_start).is_some_and(|w| {
                    ABBREVIATIONS.contains(&w.as_str()) || w.chars().count() == 1
                });
            if (at_end || starts_new) && !abbreviation {
                flush(start, j, &mut sentences);
                start = j;
                i = j;
                continue;
            }
            i = j.max(i + 1);
            continue;
        }
        if c == '\n' {
            // A blank line ends the sentence regardless of punctuation.
            let mut k = i + 1;
            let mut newlines = 1;
            while k < chars.len() && chars[k].is_whitespace() {
                if chars[k] == '\n' {
                    newlines += 1;
                }
                k += 1;
            }
            if newlines >= 2 {
                flush(start, i, &mut sentences);
                start = k;
                i = k;
                continue;
            }
        }
        i += 1;
    }
    flush(start, chars.len(), &mut sentences);
    sentences
}

/// Lowercased tokens: maximal alphabetic runs, apostrophes kept when they sit
/// between letters. Digits and punctuation never enter a token.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphabetic() {
            current.push(c);
        } else if matches!(c, '\'' | '\u{2019}')
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphabetic())
        {
            current.push('\'');
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current).to_lowercase());
        }
    }
    if !current.is_empty() {
        tokens.push(current.to_lowercase());
    }
    tokens
}

/// Partition `[0, num_sentences)` into `n` contiguous ranges whose sizes
/// differ by at most one; the first `num_sentences % n` ranges take the extra
/// sentence.
pub fn chunk_indices(num_sentences: usize, n: usize) -> Result<Vec<Range<usize>>> {
    if n == 0 {
        return Err(Error::Data("chunk count must be at least 1".into()));
    }
    if num_sentences < n {
        return Err(Error::Data(format!(
            "book too short: {num_sentences} sentences cannot fill {n} chunks"
        )));
    }
    let base = num_sentences / n;
    let remainder = num_sentences % n;
    let mut ranges = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let size = base + usize::from(i < remainder);
        ranges.push(start..start + size);
        start += size;
    }
    Ok(ranges)
}

/// Stratified train/val/test split by success label.
///
/// Per class (ids sorted, then shuffled with a class-indexed stream): the
/// test set takes `round((1 - train_frac) * m)` books, validation takes
/// `floor(val_frac_of_train * remaining)`, and every leftover book lands in
/// train. Deterministic given (ids, seed).
pub fn stratified_split(
    records: &[(String, SuccessLabel)],
    train_frac: f64,
    val_frac_of_train: f64,
    seed: u64,
) -> Result<SplitSpec> {
    if !(0.0..1.0).contains(&(1.0 - train_frac)) || !(0.0..1.0).contains(&val_frac_of_train) {
        return Err(Error::Config(format!(
            "split fractions out of range: train_frac={train_frac}, val_frac_of_train={val_frac_of_train}"
        )));
    }
    let mut by_class: HashMap<SuccessLabel, Vec<String>> = HashMap::new();
    for (id, label) in records {
        by_class.entry(*label).or_default().push(id.clone());
    }
    for label in [SuccessLabel::Successful, SuccessLabel::Unsuccessful] {
        if by_class.get(&label).is_none_or(|v| v.is_empty()) {
            return Err(Error::Data(format!("success class {label} has no books")));
        }
    }

    let factory = RngFactory::new(seed);
    let mut train_ids = Vec::new();
    let mut val_ids = Vec::new();
    let mut test_ids = Vec::new();
    for (class_idx, label) in [SuccessLabel::Successful, SuccessLabel::Unsuccessful]
        .into_iter()
        .enumerate()
    {
        let mut ids = by_class.remove(&label).unwrap_or_default();
        ids.sort();
        let mut rng = factory.stream(StreamPurpose::Split, class_idx as u64);
        ids.shuffle(&mut rng);

        let m = ids.len();
        let n_test = ((1.0 - train_frac) * m as f64 + 0.5).floor() as usize;
        let pool = m - n_test;
        let n_val = (val_frac_of_train * pool as f64).floor() as usize;

        test_ids.extend(ids.drain(..n_test));
        val_ids.extend(ids.drain(..n_val));
        train_ids.extend(ids);
    }
    train_ids.sort();
    val_ids.sort();
    test_ids.sort();
    Ok(SplitSpec { train_ids, val_ids, test_ids, seed })
}
