//! Run manifests: the resolved config, seed, and input hashes that pin down
//! exactly what a stage consumed, plus the files it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use emoflow_core::{Error, Result};

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hash of a whole book corpus: sha256 over (id, sha256(text)) pairs in id
/// order, so it is independent of directory iteration order.
pub fn corpus_sha256(corpus_dir: &Path, ids: &[String]) -> Result<String> {
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    let mut outer = Sha256::new();
    for id in sorted {
        let path = corpus_dir.join(format!("{id}.txt"));
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        outer.update(id.as_bytes());
        outer.update([0u8]);
        outer.update(Sha256::digest(&bytes));
    }
    Ok(hex::encode(outer.finalize()))
}

/// Short hash of an extraction configuration; stored in feature-cache
/// sidecars so stale caches are detected.
pub fn extraction_config_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(&Sha256::finalize(hasher)[..16])
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        let mut hasher = Sha256::new();
        for (key, value) in &config {
            hasher.update(key.as_bytes());
            hasher.update([0u8]);
            hasher.update(value.as_bytes());
            hasher.update([0u8]);
        }
        Self {
            command: command.to_string(),
            config_hash: hex::encode(&Sha256::finalize(hasher)[..16]),
            config,
            input_hashes: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.input_hashes
            .insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    pub fn record_input_hash(&mut self, name: &str, hash: String) {
        self.input_hashes.insert(name.to_string(), hash);
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(format!("manifest_{}.json", self.command.replace(' ', "_")));
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("manifest encode failed: {e}")))?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }
}
