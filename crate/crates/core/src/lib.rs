//! Emotion-flow modeling for book success prediction.
//!
//! The pipeline turns raw book text into sequences of chunk-level emotion
//! vectors (NRC lexicon counts summarized per chunk), feeds them to a
//! bidirectional GRU encoder with additive attention, and trains single-task
//! (success) or multitask (success + genre) classifiers. Classical baselines
//! (majority class, linear SVM over flattened features), evaluation metrics
//! (weighted F1, McNemar), and post-hoc analyses (attention heatmaps,
//! information gain, emotion statistics, trajectory clustering) round out the
//! toolkit.

pub mod analysis;
pub mod baselines;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod lexicon;
pub mod linalg;
pub mod nn;
pub mod rng;
pub mod stats;
pub mod training;

pub use error::{Error, Result};
