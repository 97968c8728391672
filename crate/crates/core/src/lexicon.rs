//! NRC emotion lexicon: token -> 10-dim binary association vectors.
//!
//! The ten categories are eight elementary emotions plus the two polarities.
//! Their index order is canonical across the whole crate: feature vectors,
//! analysis tables, and output files all use it.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_CATEGORIES: usize = 10;

/// Fixed category order: eight emotions, then the two polarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionCategory {
    Anger = 0,
    Anticipation = 1,
    Disgust = 2,
    Fear = 3,
    Joy = 4,
    Sadness = 5,
    Surprise = 6,
    Trust = 7,
    Positive = 8,
    Negative = 9,
}

pub const ALL_CATEGORIES: [EmotionCategory; NUM_CATEGORIES] = [
    EmotionCategory::Anger,
    EmotionCategory::Anticipation,
    EmotionCategory::Disgust,
    EmotionCategory::Fear,
    EmotionCategory::Joy,
    EmotionCategory::Sadness,
    EmotionCategory::Surprise,
    EmotionCategory::Trust,
    EmotionCategory::Positive,
    EmotionCategory::Negative,
];

impl EmotionCategory {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionCategory::Anger => "anger",
            EmotionCategory::Anticipation => "anticipation",
            EmotionCategory::Disgust => "disgust",
            EmotionCategory::Fear => "fear",
            EmotionCategory::Joy => "joy",
            EmotionCategory::Sadness => "sadness",
            EmotionCategory::Surprise => "surprise",
            EmotionCategory::Trust => "trust",
            EmotionCategory::Positive => "positive",
            EmotionCategory::Negative => "negative",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ALL_CATEGORIES.iter().copied().find(|c| c.name() == name)
    }
}

impl fmt::Display for EmotionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How `sentence_vector` counts lexicon hits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresenceMode {
    /// Every occurrence counts; a word appearing twice counts twice.
    #[default]
    Occurrences,
    /// Each category is capped at 1 per sentence.
    BinaryPerSentence,
}

impl PresenceMode {
    pub fn name(self) -> &'static str {
        match self {
            PresenceMode::Occurrences => "occurrences",
            PresenceMode::BinaryPerSentence => "binary_per_sentence",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "occurrences" => Some(PresenceMode::Occurrences),
            "binary_per_sentence" | "binary-per-sentence" => Some(PresenceMode::BinaryPerSentence),
            _ => None,
        }
    }
}

/// Word -> 10-dim binary emotion associations. Immutable after load; lookup
/// of an absent token yields the all-zero vector.
#[derive(Debug, Clone, Default)]
pub struct EmotionLexicon {
    entries: HashMap<String, [u8; NUM_CATEGORIES]>,
}

impl EmotionLexicon {
    pub fn word_count(&self) -> usize {
        self.entries.len()
    }

    pub fn lookup(&self, token: &str) -> [u8; NUM_CATEGORIES] {
        self.entries.get(token).copied().unwrap_or_default()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    /// Build from explicit (word, category) associations; used by tests and
    /// synthetic corpora.
    pub fn from_associations<I>(assocs: I) -> Self
    where
        I: IntoIterator<Item = (String, EmotionCategory)>,
    {
        let mut entries: HashMap<String, [u8; NUM_CATEGORIES]> = HashMap::new();
        for (word, cat) in assocs {
            entries.entry(word).or_default()[cat.index()] = 1;
        }
        Self { entries }
    }
}

/// Parse the NRC tab-separated format: `word<TAB>category<TAB>flag` per line,
/// flag in {0,1}. Empty lines are skipped; anything else malformed is an
/// error naming the line number.
pub fn load_lexicon(path: &Path) -> Result<EmotionLexicon> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut entries: HashMap<String, [u8; NUM_CATEGORIES]> = HashMap::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (word, category, flag) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(w), Some(c), Some(f), None) => (w, c, f),
            _ => {
                return Err(Error::parse(
                    &file,
                    lineno,
                    format!("expected 3 tab-separated fields, got {:?}", line),
                ))
            }
        };
        let category = EmotionCategory::from_name(category).ok_or_else(|| {
            Error::parse(&file, lineno, format!("unknown category {:?}", category))
        })?;
        let flag = match flag {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::parse(
                    &file,
                    lineno,
                    format!("flag must be 0 or 1, got {:?}", other),
                ))
            }
        };
        entries.entry(word.to_lowercase()).or_default()[category.index()] = flag;
    }

    Ok(EmotionLexicon { entries })
}

/// Count, per category, how many tokens carry that association.
///
/// Tokens are assumed lowercased already (the tokenizer's contract). Absent
/// tokens contribute zero, so this never fails.
pub fn sentence_vector(tokens: &[String], lexicon: &EmotionLexicon) -> [u32; NUM_CATEGORIES] {
    sentence_vector_mode(tokens, lexicon, PresenceMode::Occurrences)
}

pub fn sentence_vector_mode(
    tokens: &[String],
    lexicon: &EmotionLexicon,
    mode: PresenceMode,
) -> [u32; NUM_CATEGORIES] {
    let mut counts = [0u32; NUM_CATEGORIES];
    for token in tokens {
        let assoc = lexicon.lookup(token);
        for (count, &bit) in counts.iter_mut().zip(assoc.iter()) {
            *count += u32::from(bit);
        }
    }
    if mode == PresenceMode::BinaryPerSentence {
        for count in counts.iter_mut() {
            *count = (*count).min(1);
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_lexicon(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{}", line).unwrap();
        }
        f
    }

    fn abandon_file() -> tempfile::NamedTempFile {
        write_lexicon(&[
            "abandon\tanger\t0",
            "abandon\tanticipation\t0",
            "abandon\tdisgust\t0",
            "abandon\tfear\t1",
            "abandon\tjoy\t0",
            "abandon\tsadness\t0",
            "abandon\tsurprise\t0",
            "abandon\ttrust\t0",
            "abandon\tpositive\t0",
            "abandon\tnegative\t0",
        ])
    }

    #[test]
    fn load_captures_associations() {
        let f = abandon_file();
        let lex = load_lexicon(f.path()).unwrap();
        assert_eq!(lex.word_count(), 1);
        let v = lex.lookup("abandon");
        let mut expected = [0u8; NUM_CATEGORIES];
        expected[EmotionCategory::Fear.index()] = 1;
        assert_eq!(v, expected);
    }

    #[test]
    fn empty_file_is_empty_lexicon() {
        let f = write_lexicon(&[]);
        let lex = load_lexicon(f.path()).unwrap();
        assert_eq!(lex.word_count(), 0);
        assert_eq!(lex.lookup("anything"), [0u8; NUM_CATEGORIES]);
    }

    #[test]
    fn malformed_line_names_line_number() {
        let f = write_lexicon(&["abandon\tfear\t1", "broken line without tabs"]);
        let err = load_lexicon(f.path()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_category_rejected() {
        let f = write_lexicon(&["abandon\tboredom\t1"]);
        assert!(matches!(load_lexicon(f.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn bad_flag_rejected() {
        let f = write_lexicon(&["abandon\tfear\t2"]);
        assert!(matches!(load_lexicon(f.path()), Err(Error::Parse { line: 1, .. })));
    }

    /// Gated on the real NRC v0.92 file; set NRC_LEXICON_PATH to run.
    #[test]
    fn real_nrc_word_count() {
        let Ok(path) = std::env::var("NRC_LEXICON_PATH") else {
            eprintln!("real_nrc_word_count: SKIP (NRC_LEXICON_PATH not set)");
            return;
        };
        let lex = load_lexicon(Path::new(&path)).unwrap();
        assert_eq!(lex.word_count(), 14_182);
    }

    #[test]
    fn sentence_vector_counts_occurrences() {
        let f = abandon_file();
        let lex = load_lexicon(f.path()).unwrap();
        let tokens = vec!["abandon".to_string(), "abandon".to_string()];
        let v = sentence_vector(&tokens, &lex);
        assert_eq!(v[EmotionCategory::Fear.index()], 2);
        assert_eq!(v.iter().sum::<u32>(), 2);
    }

    #[test]
    fn binary_mode_caps_at_one() {
        let f = abandon_file();
        let lex = load_lexicon(f.path()).unwrap();
        let tokens = vec!["abandon".to_string(), "abandon".to_string()];
        let v = sentence_vector_mode(&tokens, &lex, PresenceMode::BinaryPerSentence);
        assert_eq!(v[EmotionCategory::Fear.index()], 1);
    }

    #[test]
    fn empty_and_unknown_tokens_are_zero() {
        let lex = EmotionLexicon::default();
        assert_eq!(sentence_vector(&[], &lex), [0u32; NUM_CATEGORIES]);
        let tokens = vec!["nothing".to_string(), "here".to_string()];
        assert_eq!(sentence_vector(&tokens, &lex), [0u32; NUM_CATEGORIES]);
    }

    proptest::proptest! {
        /// vector(A ++ B) = vector(A) + vector(B), and components never
        /// exceed the token count.
        #[test]
        fn additive_and_bounded(
            a in proptest::collection::vec("[a-d]{1,3}", 0..8),
            b in proptest::collection::vec("[a-d]{1,3}", 0..8),
        ) {
            let lex = EmotionLexicon::from_associations(vec![
                ("a".to_string(), EmotionCategory::Joy),
                ("ab".to_string(), EmotionCategory::Fear),
                ("ab".to_string(), EmotionCategory::Negative),
                ("abc".to_string(), EmotionCategory::Trust),
            ]);
            let va = sentence_vector(&a, &lex);
            let vb = sentence_vector(&b, &lex);
            let mut joined = a.clone();
            joined.extend(b.clone());
            let vab = sentence_vector(&joined, &lex);
            for i in 0..NUM_CATEGORIES {
                proptest::prop_assert_eq!(vab[i], va[i] + vb[i]);
                proptest::prop_assert!((vab[i] as usize) <= joined.len());
            }
        }
    }
}
