//! Training loops, early stopping, and the random hyperparameter search.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{success_class_index, success_class_names};
use crate::corpus::{SplitSpec, SuccessLabel};
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::features::{BookEmotionSequence, ContentMode};
use crate::nn::{
    adam_step, batch_gradients, dropout_mask, forward, init_params, item_loss, AdamState,
    BatchItem, HyperConfig, InitScheme, ModelDims, ModelParams, TaskKind,
};
use crate::rng::{RngFactory, StreamPurpose};

/// One featurized, labeled book ready for the encoder.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub id: String,
    pub seq: Vec<Vec<f64>>,
    pub success: SuccessLabel,
    pub genre: Option<usize>,
}

impl TrainItem {
    pub fn from_sequence(seq: &BookEmotionSequence, success: SuccessLabel, genre: Option<usize>) -> Self {
        Self {
            id: seq.book_id.clone(),
            seq: seq.rows().into_iter().map(|row| row.to_vec()).collect(),
            success,
            genre,
        }
    }
}

/// Partition items by a split's id lists; every listed id must be present.
pub fn partition_items(
    items: Vec<TrainItem>,
    split: &SplitSpec,
) -> Result<(Vec<TrainItem>, Vec<TrainItem>, Vec<TrainItem>)> {
    let mut by_id: HashMap<String, TrainItem> = items.into_iter().map(|i| (i.id.clone(), i)).collect();
    let mut take = |ids: &[String]| -> Result<Vec<TrainItem>> {
        ids.iter()
            .map(|id| {
                by_id
                    .remove(id)
                    .ok_or_else(|| Error::Data(format!("split references missing book id {id}")))
            })
            .collect()
    };
    let train = take(&split.train_ids)?;
    let val = take(&split.val_ids)?;
    let test = take(&split.test_ids)?;
    Ok((train, val, test))
}

#[derive(Debug, Clone)]
pub struct DataSplit {
    pub train: Vec<TrainItem>,
    pub val: Vec<TrainItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self { max_epochs: 100, patience: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Index of the epoch with the lowest validation loss, if any ran.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn best_stats(&self) -> Option<&EpochStats> {
        self.best_epoch.map(|e| &self.epochs[e])
    }
}

fn validate_items(items: &[TrainItem], config: &HyperConfig, genres: usize, what: &str) -> Result<()> {
    if items.is_empty() {
        return Err(Error::Data(format!("{what} set is empty")));
    }
    for item in items {
        if item.seq.len() != config.n_chunks {
            return Err(Error::Data(format!(
                "{what} item {} has {} chunks, config expects {}",
                item.id,
                item.seq.len(),
                config.n_chunks
            )));
        }
        if config.task == TaskKind::Mt {
            match item.genre {
                None => {
                    return Err(Error::Data(format!(
                        "{what} item {} is missing a genre label in multitask mode",
                        item.id
                    )))
                }
                Some(g) if g >= genres => {
                    return Err(Error::Data(format!(
                        "{what} item {} has genre index {g} out of {genres}",
                        item.id
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Mean validation loss, success predictions, and weighted F1 (no dropout).
fn validate_pass(params: &ModelParams, items: &[TrainItem]) -> Result<(f64, f64)> {
    let mut total = 0.0;
    let mut y_true = Vec::with_capacity(items.len());
    let mut y_pred = Vec::with_capacity(items.len());
    for item in items {
        let (pred, cache) = forward(params, &item.seq, None);
        total += item_loss(params, &cache, item.success.as_target(), item.genre)?;
        y_true.push(success_class_index(item.success));
        y_pred.push(usize::from(!pred.success_label_is_successful()));
    }
    let loss = total / items.len() as f64;
    let f1 = crate::evaluation::weighted_f1(&y_true, &y_pred)?;
    Ok((loss, f1))
}

/// Epochs of shuffled mini-batches with Adam; validation after each epoch;
/// stop after `patience` epochs without a validation-loss improvement and
/// restore the best epoch's parameters.
pub fn train(
    config: &HyperConfig,
    data: &DataSplit,
    genres: usize,
    settings: &TrainSettings,
) -> Result<(ModelParams, TrainHistory)> {
    validate_items(&data.train, config, genres, "train")?;
    validate_items(&data.val, config, genres, "validation")?;
    let input = data.train[0].seq[0].len();
    let dims = ModelDims {
        input,
        hidden: config.hidden_units,
        attention: config.attention_units,
        genres: if config.task == TaskKind::Mt { genres } else { 0 },
    };

    let factory = RngFactory::new(config.seed);
    let mut params = init_params(config, dims)?;
    let mut state = AdamState::new(&params);
    let annotation = 2 * config.hidden_units;

    let mut history = TrainHistory { epochs: Vec::new(), best_epoch: None, stopped_early: false };
    let mut best_params = params.clone();
    let mut best_val_loss = f64::INFINITY;
    let mut epochs_since_best = 0usize;

    for epoch in 0..settings.max_epochs {
        let mut order: Vec<usize> = (0..data.train.len()).collect();
        let mut shuffle_rng = factory.stream(StreamPurpose::Shuffle, epoch as u64);
        order.shuffle(&mut shuffle_rng);
        let mut dropout_rng = factory.stream(StreamPurpose::Dropout, epoch as u64);

        let mut epoch_loss = 0.0;
        for batch_indices in order.chunks(config.batch_size.max(1)) {
            let masks: Vec<Option<Vec<f64>>> = batch_indices
                .iter()
                .map(|_| {
                    if config.dropout > 0.0 {
                        dropout_mask(annotation, config.dropout, &mut dropout_rng).map(Some)
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<_>>()?;
            let batch: Vec<BatchItem> = batch_indices
                .iter()
                .zip(&masks)
                .map(|(&i, mask)| {
                    let item = &data.train[i];
                    BatchItem {
                        seq: &item.seq,
                        success_target: item.success.as_target(),
                        genre: item.genre,
                        mask: mask.as_deref(),
                    }
                })
                .collect();
            let (loss, grads) = batch_gradients(&params, &batch).map_err(|e| {
                Error::Numerical(format!(
                    "epoch {epoch}: {e} (config: task={}, lr={}, h={}, seed={})",
                    config.task.name(),
                    config.learning_rate,
                    config.hidden_units,
                    config.seed
                ))
            })?;
            epoch_loss += loss * batch.len() as f64;
            adam_step(&mut params, &grads, &mut state, config.learning_rate);
        }
        let train_loss = epoch_loss / data.train.len() as f64;

        let (val_loss, val_f1) = validate_pass(&params, &data.val)?;
        if !val_loss.is_finite() || !train_loss.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite loss at epoch {epoch} (config: task={}, lr={}, seed={})",
                config.task.name(),
                config.learning_rate,
                config.seed
            )));
        }
        history.epochs.push(EpochStats { train_loss, val_loss, val_weighted_f1: val_f1 });

        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_params = params.clone();
            history.best_epoch = Some(epoch);
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= settings.patience {
                history.stopped_early = true;
                break;
            }
        }
    }

    Ok((best_params, history))
}

/// Success-task evaluation of a trained model; also returns each book's
/// attention weights for the post-hoc analyses.
pub fn evaluate_success(params: &ModelParams, items: &[TrainItem]) -> Result<(EvalReport, Vec<Vec<f64>>)> {
    if items.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty set".into()));
    }
    let mut ids = Vec::with_capacity(items.len());
    let mut y_true = Vec::with_capacity(items.len());
    let mut y_pred = Vec::with_capacity(items.len());
    let mut alphas = Vec::with_capacity(items.len());
    for item in items {
        let (pred, _) = forward(params, &item.seq, None);
        ids.push(item.id.clone());
        y_true.push(success_class_index(item.success));
        y_pred.push(usize::from(!pred.success_label_is_successful()));
        alphas.push(pred.attention);
    }
    let report = EvalReport::from_predictions(success_class_names(), ids, y_true, y_pred)?;
    Ok((report, alphas))
}

/// Domains the random search samples from. Learning rate is log-uniform over
/// its bracket; everything else is a uniform categorical choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub init: Vec<InitScheme>,
    pub learning_rate: (f64, f64),
    pub dropout: Vec<f64>,
    pub hidden_units: Vec<usize>,
    pub attention_units: Vec<usize>,
    pub batch_size: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            init: vec![InitScheme::GlorotUniform, InitScheme::LecunUniform],
            learning_rate: (1e-4, 1e-1),
            dropout: vec![0.2, 0.4, 0.5],
            hidden_units: vec![32, 64],
            attention_units: vec![32, 64],
            batch_size: vec![1, 4, 8],
        }
    }
}

impl SearchSpace {
    fn validate(&self) -> Result<()> {
        if self.init.is_empty()
            || self.dropout.is_empty()
            || self.hidden_units.is_empty()
            || self.attention_units.is_empty()
            || self.batch_size.is_empty()
        {
            return Err(Error::Config("search space has an empty domain".into()));
        }
        if !(self.learning_rate.0 > 0.0 && self.learning_rate.1 >= self.learning_rate.0) {
            return Err(Error::Config(format!(
                "bad learning-rate bracket {:?}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

fn choose<T: Copy>(rng: &mut impl Rng, options: &[T]) -> T {
    options[rng.gen_range(0..options.len())]
}

/// The config for trial `index`, a pure function of (space, fixed knobs,
/// master seed, index) so interrupted searches can be replayed.
pub fn sample_config(
    space: &SearchSpace,
    task: TaskKind,
    n_chunks: usize,
    content: ContentMode,
    master_seed: u64,
    index: usize,
) -> HyperConfig {
    let factory = RngFactory::new(master_seed);
    let mut rng = factory.stream(StreamPurpose::Search, index as u64);
    let (lo, hi) = space.learning_rate;
    let learning_rate = if lo == hi {
        lo
    } else {
        (rng.gen_range(lo.ln()..hi.ln())).exp()
    };
    HyperConfig {
        init: choose(&mut rng, &space.init),
        learning_rate,
        dropout: choose(&mut rng, &space.dropout),
        hidden_units: choose(&mut rng, &space.hidden_units),
        attention_units: choose(&mut rng, &space.attention_units),
        batch_size: choose(&mut rng, &space.batch_size),
        n_chunks,
        task,
        content,
        seed: factory.child_seed(StreamPurpose::Search, index as u64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Completed {
        epochs_run: usize,
        best_epoch: usize,
        best_val_loss: f64,
        val_weighted_f1: f64,
        stopped_early: bool,
    },
    Diverged {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub config: HyperConfig,
    pub outcome: TrialOutcome,
}

#[derive(Debug)]
pub struct SearchResult {
    pub best_trial: usize,
    pub best_params: ModelParams,
    pub records: Vec<TrialRecord>,
}

/// Run `trials` random configurations and keep the one with the best
/// validation weighted F1 (ties: lower validation loss, then earlier trial).
/// Trials already present in `completed` are not re-run; their parameters are
/// reproduced deterministically only if they end up selected.
pub fn random_search(
    space: &SearchSpace,
    trials: usize,
    data: &DataSplit,
    genres: usize,
    task: TaskKind,
    n_chunks: usize,
    content: ContentMode,
    master_seed: u64,
    settings: &TrainSettings,
    completed: &[TrialRecord],
) -> Result<SearchResult> {
    space.validate()?;
    if trials == 0 {
        return Err(Error::Config("search needs at least one trial".into()));
    }
    let prior: HashMap<usize, &TrialRecord> = completed.iter().map(|r| (r.trial, r)).collect();

    let runs: Vec<(TrialRecord, Option<ModelParams>)> = (0..trials)
        .into_par_iter()
        .map(|index| {
            let config = sample_config(space, task, n_chunks, content, master_seed, index);
            if let Some(record) = prior.get(&index) {
                if record.config != config {
                    return Err(Error::Config(format!(
                        "trial {index} in the ledger was sampled under a different seed or space"
                    )));
                }
                return Ok(((*record).clone(), None));
            }
            let outcome = match train(&config, data, genres, settings) {
                Ok((params, history)) => {
                    let best_epoch = history.best_epoch.unwrap_or(0);
                    let stats = history.best_stats();
                    let record = TrialRecord {
                        trial: index,
                        config,
                        outcome: TrialOutcome::Completed {
                            epochs_run: history.epochs.len(),
                            best_epoch,
                            best_val_loss: stats.map_or(f64::INFINITY, |s| s.val_loss),
                            val_weighted_f1: stats.map_or(0.0, |s| s.val_weighted_f1),
                            stopped_early: history.stopped_early,
                        },
                    };
                    return Ok((record, Some(params)));
                }
                Err(Error::Numerical(message)) => TrialOutcome::Diverged { message },
                Err(other) => return Err(other),
            };
            Ok((TrialRecord { trial: index, config, outcome }, None))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, f64, f64)> = None; // (trial, f1, val_loss)
    for (record, _) in &runs {
        if let TrialOutcome::Completed { best_val_loss, val_weighted_f1, .. } = record.outcome {
            let better = match best {
                None => true,
                Some((_, f1, loss)) => {
                    val_weighted_f1 > f1 || (val_weighted_f1 == f1 && best_val_loss < loss)
                }
            };
            if better {
                best = Some((record.trial, val_weighted_f1, best_val_loss));
            }
        }
    }
    let (best_trial, _, _) = best.ok_or_else(|| Error::Numerical("every search trial diverged".into()))?;

    let best_params = match runs.iter().find(|(r, _)| r.trial == best_trial) {
        Some((_, Some(params))) => params.clone(),
        _ => {
            // Selected trial came from the replayed ledger: retrain it
            // (training is deterministic given the config).
            let config = sample_config(space, task, n_chunks, content, master_seed, best_trial);
            train(&config, data, genres, settings)?.0
        }
    };

    Ok(SearchResult {
        best_trial,
        best_params,
        records: runs.into_iter().map(|(r, _)| r).collect(),
    })
}

/// JSON-lines trial ledger, one record per line in trial order.
pub fn write_trial_ledger(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Data(format!("ledger encode failed: {e}")))?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_trial_ledger(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TrialRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path.display().to_string(), idx + 1, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

/// A trained model with everything needed to run it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: HyperConfig,
    pub genre_names: Vec<String>,
    pub params: ModelParams,
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let json = serde_json::to_string_pretty(checkpoint)
        .map_err(|e| Error::Data(format!("checkpoint encode failed: {e}")))?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("checkpoint {} invalid: {e}", path.display())))
}
