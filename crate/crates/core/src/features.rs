//! Chunk emotion vectors and per-book sequences.
//!
//! A chunk vector concatenates the componentwise mean and population standard
//! deviation of the sentence emotion vectors inside the chunk (20 values).
//! A book becomes an ordered sequence of `n` such vectors. Sequences are
//! persisted to a CSV cache keyed by (n, content mode) with a JSON sidecar
//! recording the extraction configuration hash.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, BookRecord, SuccessLabel};
use crate::error::{Error, Result};
use crate::lexicon::{sentence_vector_mode, EmotionLexicon, PresenceMode, NUM_CATEGORIES};

pub const CHUNK_DIM: usize = 2 * NUM_CATEGORIES;
pub const FIRST_1K: usize = 1000;

/// Whether featurization reads the whole book or only its first 1K sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentMode {
    First1k,
    All,
}

impl ContentMode {
    pub fn name(self) -> &'static str {
        match self {
            ContentMode::First1k => "first1k",
            ContentMode::All => "all",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "first1k" => Some(ContentMode::First1k),
            "all" => Some(ContentMode::All),
            _ => None,
        }
    }
}

/// Mean and population standard deviation of a chunk's sentence vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkEmotionVector {
    pub mean: [f64; NUM_CATEGORIES],
    pub std: [f64; NUM_CATEGORIES],
}

impl ChunkEmotionVector {
    /// The 20 values in storage order: means, then standard deviations.
    pub fn flat(&self) -> [f64; CHUNK_DIM] {
        let mut out = [0.0; CHUNK_DIM];
        out[..NUM_CATEGORIES].copy_from_slice(&self.mean);
        out[NUM_CATEGORIES..].copy_from_slice(&self.std);
        out
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != CHUNK_DIM {
            return Err(Error::Data(format!(
                "chunk vector needs {CHUNK_DIM} values, got {}",
                flat.len()
            )));
        }
        let mut mean = [0.0; NUM_CATEGORIES];
        let mut std = [0.0; NUM_CATEGORIES];
        mean.copy_from_slice(&flat[..NUM_CATEGORIES]);
        std.copy_from_slice(&flat[NUM_CATEGORIES..]);
        Ok(Self { mean, std })
    }
}

/// Ordered chunk vectors for one book; length fixed at the configured `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookEmotionSequence {
    pub book_id: String,
    pub chunks: Vec<ChunkEmotionVector>,
}

impl BookEmotionSequence {
    pub fn n(&self) -> usize {
        self.chunks.len()
    }

    /// The n x 20 input matrix for the encoder.
    pub fn rows(&self) -> Vec<[f64; CHUNK_DIM]> {
        self.chunks.iter().map(ChunkEmotionVector::flat).collect()
    }
}

/// Aggregate sentence vectors into a chunk vector: componentwise mean and
/// population (divide by N) standard deviation.
pub fn chunk_vector(sentence_vectors: &[[u32; NUM_CATEGORIES]]) -> Result<ChunkEmotionVector> {
    let n = sentence_vectors.len();
    if n == 0 {
        return Err(Error::Data("chunk has no sentences".into()));
    }
    let nf = n as f64;
    let mut mean = [0.0; NUM_CATEGORIES];
    for v in sentence_vectors {
        for (m, &x) in mean.iter_mut().zip(v.iter()) {
            *m += f64::from(x);
        }
    }
    for m in mean.iter_mut() {
        *m /= nf;
    }
    let mut std = [0.0; NUM_CATEGORIES];
    for v in sentence_vectors {
        for ((s, &x), &m) in std.iter_mut().zip(v.iter()).zip(mean.iter()) {
            let d = f64::from(x) - m;
            *s += d * d;
        }
    }
    for s in std.iter_mut() {
        *s = (*s / nf).sqrt();
    }
    Ok(ChunkEmotionVector { mean, std })
}

/// Full extraction pipeline for one book: segment, optionally truncate to the
/// first 1K sentences, tokenize, count emotion associations, and aggregate
/// per chunk. Errors when the book has fewer than `n` sentences.
pub fn book_sequence(
    record: &BookRecord,
    lexicon: &EmotionLexicon,
    n: usize,
    content: ContentMode,
    presence: PresenceMode,
) -> Result<BookEmotionSequence> {
    let mut sentences = corpus::segment_sentences(&record.text);
    if content == ContentMode::First1k {
        sentences.truncate(FIRST_1K);
    }
    let vectors: Vec<[u32; NUM_CATEGORIES]> = sentences
        .iter()
        .map(|s| sentence_vector_mode(&corpus::tokenize(s), lexicon, presence))
        .collect();
    let ranges = corpus::chunk_indices(vectors.len(), n).map_err(|_| {
        Error::Data(format!(
            "book {}: {} sentences cannot fill {} chunks",
            record.id,
            vectors.len(),
            n
        ))
    })?;
    let chunks = ranges
        .into_iter()
        .map(|r| chunk_vector(&vectors[r]))
        .collect::<Result<Vec<_>>>()?;
    Ok(BookEmotionSequence { book_id: record.id.clone(), chunks })
}

/// Extract sequences for a whole corpus, in id order. Books too short for
/// `n` chunks are dropped with a warning and reported in the second list.
pub fn featurize_corpus(
    records: &[BookRecord],
    lexicon: &EmotionLexicon,
    n: usize,
    content: ContentMode,
    presence: PresenceMode,
) -> (Vec<BookEmotionSequence>, Vec<String>) {
    let mut sorted: Vec<&BookRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let results: Vec<(String, Result<BookEmotionSequence>)> = sorted
        .par_iter()
        .map(|r| (r.id.clone(), book_sequence(r, lexicon, n, content, presence)))
        .collect();

    let mut sequences = Vec::new();
    let mut dropped = Vec::new();
    for (id, result) in results {
        match result {
            Ok(seq) => sequences.push(seq),
            Err(e) => {
                log::warn!("dropping book {id}: {e}");
                dropped.push(id);
            }
        }
    }
    (sequences, dropped)
}

/// Concatenate the chunk vectors in order; length is 20n.
pub fn flatten_sequence(seq: &BookEmotionSequence) -> Vec<f64> {
    let mut out = Vec::with_capacity(seq.n() * CHUNK_DIM);
    for chunk in &seq.chunks {
        out.extend_from_slice(&chunk.flat());
    }
    out
}

/// Rebuild a sequence from its flattened form.
pub fn unflatten_sequence(book_id: String, flat: &[f64]) -> Result<BookEmotionSequence> {
    if flat.is_empty() || !flat.len().is_multiple_of(CHUNK_DIM) {
        return Err(Error::Data(format!(
            "flattened sequence length {} is not a positive multiple of {CHUNK_DIM}",
            flat.len()
        )));
    }
    let chunks = flat
        .chunks_exact(CHUNK_DIM)
        .map(ChunkEmotionVector::from_flat)
        .collect::<Result<Vec<_>>>()?;
    Ok(BookEmotionSequence { book_id, chunks })
}

/// Sidecar metadata stored next to each feature cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCacheMeta {
    pub n_chunks: usize,
    pub content: ContentMode,
    pub presence: PresenceMode,
    pub config_hash: String,
    pub num_books: usize,
    pub dropped_ids: Vec<String>,
}

pub fn cache_file_name(n: usize, content: ContentMode) -> String {
    format!("features_n{n}_{}.csv", content.name())
}

pub fn sidecar_path(cache_path: &Path) -> std::path::PathBuf {
    cache_path.with_extension("json")
}

/// Write the cache: one CSV record per book, `id, n, content_mode,` then the
/// 20n values. Floats use shortest round-trip formatting so a read-back is
/// bit-exact.
pub fn write_feature_cache(
    path: &Path,
    sequences: &[BookEmotionSequence],
    content: ContentMode,
    meta: &FeatureCacheMeta,
) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot write cache {}: {e}", path.display())))?;
    for seq in sequences {
        let mut record = vec![seq.book_id.clone(), seq.n().to_string(), content.name().to_string()];
        record.extend(flatten_sequence(seq).iter().map(|v| format!("{v}")));
        writer
            .write_record(&record)
            .map_err(|e| Error::Data(format!("cache write failed: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))?;
    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Data(format!("sidecar encode failed: {e}")))?;
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))?;
    Ok(())
}

pub fn read_cache_meta(cache_path: &Path) -> Result<FeatureCacheMeta> {
    let sidecar = sidecar_path(cache_path);
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("sidecar {} invalid: {e}", sidecar.display())))
}

pub fn read_feature_cache(path: &Path) -> Result<Vec<BookEmotionSequence>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot read cache {}: {e}", path.display())))?;
    let file = path.display().to_string();
    let mut sequences = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let lineno = idx + 1;
        let record = record.map_err(|e| Error::parse(&file, lineno, e.to_string()))?;
        if record.len() < 3 {
            return Err(Error::parse(&file, lineno, "expected id, n, content_mode, values"));
        }
        let id = record[0].to_string();
        let n: usize = record[1]
            .parse()
            .map_err(|_| Error::parse(&file, lineno, format!("bad chunk count {:?}", &record[1])))?;
        if ContentMode::from_name(&record[2]).is_none() {
            return Err(Error::parse(&file, lineno, format!("bad content mode {:?}", &record[2])));
        }
        let values = record
            .iter()
            .skip(3)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(&file, lineno, format!("bad float {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != n * CHUNK_DIM {
            return Err(Error::parse(
                &file,
                lineno,
                format!("expected {} values for n={n}, got {}", n * CHUNK_DIM, values.len()),
            ));
        }
        sequences.push(unflatten_sequence(id, &values)?);
    }
    Ok(sequences)
}

/// Convenience bundle for downstream stages: a sequence plus its labels.
#[derive(Debug, Clone)]
pub struct LabeledSequence {
    pub seq: BookEmotionSequence,
    pub success: SuccessLabel,
    pub genre: String,
}
