//! Run configuration: a flat key=value file merged with command-line flags.
//! Flags win. Unknown keys in the file are rejected before any work starts.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use emoflow_core::features::ContentMode;
use emoflow_core::lexicon::PresenceMode;
use emoflow_core::nn::TaskKind;
use emoflow_core::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus_dir: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub chunks: usize,
    pub content: ContentMode,
    pub task: TaskKind,
    pub seed: u64,
    pub trials: usize,
    pub presence: PresenceMode,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_dir: None,
            metadata: None,
            lexicon: None,
            out_dir: PathBuf::from("runs"),
            chunks: 50,
            content: ContentMode::All,
            task: TaskKind::St,
            seed: 13,
            trials: 20,
            presence: PresenceMode::Occurrences,
            max_epochs: 100,
            patience: 5,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "corpus_dir",
    "metadata",
    "lexicon",
    "out_dir",
    "chunks",
    "content",
    "task",
    "seed",
    "trials",
    "presence",
    "max_epochs",
    "patience",
];

impl RunConfig {
    /// Apply one key=value pair (from file or flag).
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus_dir" => self.corpus_dir = Some(PathBuf::from(value)),
            "metadata" => self.metadata = Some(PathBuf::from(value)),
            "lexicon" => self.lexicon = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "chunks" => {
                self.chunks = value
                    .parse()
                    .map_err(|_| Error::Config(format!("chunks must be a positive integer, got {value:?}")))?
            }
            "content" => {
                self.content = ContentMode::from_name(value)
                    .ok_or_else(|| Error::Config(format!("content must be first1k|all, got {value:?}")))?
            }
            "task" => {
                self.task = TaskKind::from_name(value)
                    .ok_or_else(|| Error::Config(format!("task must be st|mt, got {value:?}")))?
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("seed must be an integer, got {value:?}")))?
            }
            "trials" => {
                self.trials = value
                    .parse()
                    .map_err(|_| Error::Config(format!("trials must be a positive integer, got {value:?}")))?
            }
            "presence" => {
                self.presence = PresenceMode::from_name(value)
                    .ok_or_else(|| Error::Config(format!("presence must be occurrences|binary_per_sentence, got {value:?}")))?
            }
            "max_epochs" => {
                self.max_epochs = value
                    .parse()
                    .map_err(|_| Error::Config(format!("max_epochs must be an integer, got {value:?}")))?
            }
            "patience" => {
                self.patience = value
                    .parse()
                    .map_err(|_| Error::Config(format!("patience must be an integer, got {value:?}")))?
            }
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &PathBuf) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(path.display().to_string(), idx + 1, "expected key = value")
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::parse(
                    path.display().to_string(),
                    idx + 1,
                    format!("unknown config key {key:?}"),
                ));
            }
            self.set(key, value.trim())?;
        }
        Ok(())
    }

    pub fn require_corpus(&self) -> Result<(&PathBuf, &PathBuf)> {
        let corpus = self
            .corpus_dir
            .as_ref()
            .ok_or_else(|| Error::Config("corpus_dir is required (flag or config file)".into()))?;
        let metadata = self
            .metadata
            .as_ref()
            .ok_or_else(|| Error::Config("metadata is required (flag or config file)".into()))?;
        Ok((corpus, metadata))
    }

    pub fn require_lexicon(&self) -> Result<&PathBuf> {
        self.lexicon
            .as_ref()
            .ok_or_else(|| Error::Config("lexicon is required (flag or config file)".into()))
    }

    /// The resolved configuration as flat strings, for the run manifest.
    pub fn as_map(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        if let Some(p) = &self.corpus_dir {
            map.insert("corpus_dir".into(), p.display().to_string());
        }
        if let Some(p) = &self.metadata {
            map.insert("metadata".into(), p.display().to_string());
        }
        if let Some(p) = &self.lexicon {
            map.insert("lexicon".into(), p.display().to_string());
        }
        map.insert("out_dir".into(), self.out_dir.display().to_string());
        map.insert("chunks".into(), self.chunks.to_string());
        map.insert("content".into(), self.content.name().into());
        map.insert("task".into(), self.task.name().into());
        map.insert("seed".into(), self.seed.to_string());
        map.insert("trials".into(), self.trials.to_string());
        map.insert("presence".into(), self.presence.name().into());
        map.insert("max_epochs".into(), self.max_epochs.to_string());
        map.insert("patience".into(), self.patience.to_string());
        map
    }
}
