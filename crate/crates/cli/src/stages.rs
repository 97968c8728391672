//! Implementations of the pipeline subcommands. Each stage reads the outputs
//! of earlier stages (feature cache, checkpoints, reports), writes its own
//! declared files plus a manifest, and prints a one-line summary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use emoflow_core::analysis::{
    attention_by_genre, cluster_books, emotion_stats, info_gain, joy_trajectories,
    MIN_CLUSTER_BOOKS, SMOOTHING_WINDOW,
};
use emoflow_core::baselines::{
    majority_baseline, one_vs_rest_train, success_class_index, success_class_names, svm_select_c,
    svm_train, C_GRID,
};
use emoflow_core::corpus::{ingest, stratified_split, BookRecord, SplitSpec, SuccessLabel};
use emoflow_core::evaluation::{mcnemar, EvalReport};
use emoflow_core::features::{
    cache_file_name, featurize_corpus, read_cache_meta, read_feature_cache,
    write_feature_cache, BookEmotionSequence, ContentMode, FeatureCacheMeta,
};
use emoflow_core::lexicon::{load_lexicon, EmotionLexicon};
use emoflow_core::nn::{HyperConfig, InitScheme, TaskKind};
use emoflow_core::training::{
    evaluate_success, partition_items, random_search, read_checkpoint, read_trial_ledger, train,
    write_checkpoint, write_trial_ledger, Checkpoint, DataSplit, SearchSpace, TrainItem,
    TrainSettings,
};
use emoflow_core::{Error, Result};

use crate::config::RunConfig;
use crate::manifest::{corpus_sha256, extraction_config_hash, file_sha256, Manifest};

pub const TRAIN_FRACTION: f64 = 0.70;
pub const VAL_FRACTION_OF_TRAIN: f64 = 0.20;
pub const COMPARISON_CHUNK_GRID: [usize; 4] = [10, 20, 30, 50];

/// Reported figures for the out-of-scope SentiWordNet+SVM baseline (20
/// chunks over the first 1K sentences); shown in comparison output only.
pub const SENTIWORDNET_REPORTED: [(TaskKind, f64); 2] =
    [(TaskKind::St, 0.582), (TaskKind::Mt, 0.610)];

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("json encode failed: {e}")))?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))
}

fn load_corpus(cfg: &RunConfig) -> Result<Vec<BookRecord>> {
    let (corpus_dir, metadata) = cfg.require_corpus()?;
    ingest(corpus_dir, metadata)
}

/// Sorted unique genre list; index order is the genre-class encoding.
fn genre_names(records: &[BookRecord]) -> Vec<String> {
    let mut names: Vec<String> = records.iter().map(|r| r.genre.clone()).collect();
    names.sort();
    names.dedup();
    names
}

struct FeatureSet {
    sequences: Vec<BookEmotionSequence>,
    cache_path: PathBuf,
    cache_hit: bool,
    dropped: Vec<String>,
}

/// Featurize through the on-disk cache: reuse it when the extraction config
/// hash matches, otherwise extract and (re)write it.
fn ensure_features(
    cfg: &RunConfig,
    records: &[BookRecord],
    lexicon: &EmotionLexicon,
    chunks: usize,
    content: ContentMode,
) -> Result<FeatureSet> {
    let (corpus_dir, metadata) = cfg.require_corpus()?;
    let lexicon_path = cfg.require_lexicon()?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let config_hash = extraction_config_hash(&[
        &chunks.to_string(),
        content.name(),
        cfg.presence.name(),
        &file_sha256(lexicon_path)?,
        &file_sha256(metadata)?,
        &corpus_sha256(corpus_dir, &ids)?,
    ]);

    let cache_path = cfg.out_dir.join(cache_file_name(chunks, content));
    if cache_path.exists() {
        if let Ok(meta) = read_cache_meta(&cache_path) {
            if meta.config_hash == config_hash {
                let sequences = read_feature_cache(&cache_path)?;
                return Ok(FeatureSet { sequences, cache_path, cache_hit: true, dropped: meta.dropped_ids });
            }
        }
    }

    let (sequences, dropped) = featurize_corpus(records, lexicon, chunks, content, cfg.presence);
    if sequences.is_empty() {
        return Err(Error::Data(format!(
            "no book has enough sentences for {chunks} chunks"
        )));
    }
    let meta = FeatureCacheMeta {
        n_chunks: chunks,
        content,
        presence: cfg.presence,
        config_hash,
        num_books: sequences.len(),
        dropped_ids: dropped.clone(),
    };
    write_feature_cache(&cache_path, &sequences, content, &meta)?;
    Ok(FeatureSet { sequences, cache_path, cache_hit: false, dropped })
}

/// Stratified split over the books that survived featurization.
fn split_features(records: &[BookRecord], sequences: &[BookEmotionSequence], seed: u64) -> Result<SplitSpec> {
    let labels: BTreeMap<&str, SuccessLabel> =
        records.iter().map(|r| (r.id.as_str(), r.success)).collect();
    let labeled: Vec<(String, SuccessLabel)> = sequences
        .iter()
        .map(|s| {
            labels
                .get(s.book_id.as_str())
                .map(|&l| (s.book_id.clone(), l))
                .ok_or_else(|| Error::Data(format!("featurized book {} missing from metadata", s.book_id)))
        })
        .collect::<Result<_>>()?;
    stratified_split(&labeled, TRAIN_FRACTION, VAL_FRACTION_OF_TRAIN, seed)
}

fn build_items(
    records: &[BookRecord],
    sequences: &[BookEmotionSequence],
    task: TaskKind,
    genres: &[String],
) -> Result<Vec<TrainItem>> {
    let by_id: BTreeMap<&str, &BookRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    sequences
        .iter()
        .map(|seq| {
            let record = by_id
                .get(seq.book_id.as_str())
                .ok_or_else(|| Error::Data(format!("featurized book {} missing from metadata", seq.book_id)))?;
            let genre = match task {
                TaskKind::Mt => Some(
                    genres
                        .iter()
                        .position(|g| g == &record.genre)
                        .ok_or_else(|| Error::Data(format!("genre {} not in genre list", record.genre)))?,
                ),
                TaskKind::St => None,
            };
            Ok(TrainItem::from_sequence(seq, record.success, genre))
        })
        .collect()
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let records = load_corpus(cfg)?;
    let successful = records.iter().filter(|r| r.success == SuccessLabel::Successful).count();
    let mut genres: BTreeMap<String, usize> = BTreeMap::new();
    for r in &records {
        *genres.entry(r.genre.clone()).or_insert(0) += 1;
    }

    #[derive(Serialize)]
    struct IngestSummary {
        books: usize,
        successful: usize,
        unsuccessful: usize,
        genres: BTreeMap<String, usize>,
    }
    let summary = IngestSummary {
        books: records.len(),
        successful,
        unsuccessful: records.len() - successful,
        genres,
    };
    let out = cfg.out_dir.join("ingest_summary.json");
    write_json(&out, &summary)?;

    let (corpus_dir, metadata) = cfg.require_corpus()?;
    let mut manifest = Manifest::new("ingest", cfg.as_map());
    manifest.record_input(metadata)?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    manifest.record_input_hash("corpus", corpus_sha256(corpus_dir, &ids)?);
    manifest.record_output(&out);
    manifest.write(&cfg.out_dir)?;

    println!(
        "ingested {} books ({} successful / {} unsuccessful, {} genres) -> {}",
        summary.books,
        summary.successful,
        summary.unsuccessful,
        summary.genres.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_featurize(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let records = load_corpus(cfg)?;
    let lexicon = load_lexicon(cfg.require_lexicon()?)?;
    let features = ensure_features(cfg, &records, &lexicon, cfg.chunks, cfg.content)?;

    let mut manifest = Manifest::new("featurize", cfg.as_map());
    manifest.record_input(cfg.require_lexicon()?)?;
    manifest.record_input(cfg.require_corpus()?.1)?;
    manifest.record_output(&features.cache_path);
    manifest.write(&cfg.out_dir)?;

    println!(
        "featurized {} books (n={}, {}) -> {} [{}{}]",
        features.sequences.len(),
        cfg.chunks,
        cfg.content.name(),
        features.cache_path.display(),
        if features.cache_hit { "cache hit" } else { "extracted" },
        if features.dropped.is_empty() {
            String::new()
        } else {
            format!(", {} dropped", features.dropped.len())
        }
    );
    Ok(())
}

fn run_suffix(task: TaskKind, chunks: usize, content: ContentMode) -> String {
    format!("{}_n{}_{}", task.name(), chunks, content.name())
}

/// Featurize, split, and partition into train/val/test item sets.
struct PreparedData {
    train: Vec<TrainItem>,
    val: Vec<TrainItem>,
    test: Vec<TrainItem>,
    genres: Vec<String>,
    cache_path: PathBuf,
    /// genre of each test item, aligned to `test`
    test_genres: Vec<String>,
}

fn prepare(cfg: &RunConfig, task: TaskKind, chunks: usize, content: ContentMode) -> Result<PreparedData> {
    let records = load_corpus(cfg)?;
    let lexicon = load_lexicon(cfg.require_lexicon()?)?;
    let features = ensure_features(cfg, &records, &lexicon, chunks, content)?;
    let genres = genre_names(&records);
    let items = build_items(&records, &features.sequences, task, &genres)?;
    let split = split_features(&records, &features.sequences, cfg.seed)?;
    let (train, val, test) = partition_items(items, &split)?;
    let genre_of: BTreeMap<&str, &str> =
        records.iter().map(|r| (r.id.as_str(), r.genre.as_str())).collect();
    let test_genres = test
        .iter()
        .map(|item| genre_of.get(item.id.as_str()).copied().unwrap_or("").to_string())
        .collect();
    Ok(PreparedData { train, val, test, genres, cache_path: features.cache_path, test_genres })
}

pub struct TrainArgs {
    pub learning_rate: f64,
    pub dropout: f64,
    pub hidden_units: usize,
    pub attention_units: usize,
    pub batch_size: usize,
    pub init: InitScheme,
}

pub fn cmd_train(cfg: &RunConfig, args: &TrainArgs) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = prepare(cfg, cfg.task, cfg.chunks, cfg.content)?;
    let config = HyperConfig {
        init: args.init,
        learning_rate: args.learning_rate,
        dropout: args.dropout,
        hidden_units: args.hidden_units,
        attention_units: args.attention_units,
        batch_size: args.batch_size,
        n_chunks: cfg.chunks,
        task: cfg.task,
        content: cfg.content,
        seed: cfg.seed,
    };
    let settings = TrainSettings { max_epochs: cfg.max_epochs, patience: cfg.patience };
    let split = DataSplit { train: data.train, val: data.val };
    let (params, history) = train(&config, &split, data.genres.len(), &settings)?;

    let suffix = run_suffix(cfg.task, cfg.chunks, cfg.content);
    let checkpoint_path = cfg.out_dir.join(format!("checkpoint_{suffix}.json"));
    let genre_names = if cfg.task == TaskKind::Mt { data.genres.clone() } else { vec![] };
    write_checkpoint(&checkpoint_path, &Checkpoint { config, genre_names, params: params.clone() })?;
    let history_path = cfg.out_dir.join(format!("history_{suffix}.json"));
    write_json(&history_path, &history)?;

    let (report, _) = evaluate_success(&params, &data.test)?;
    let eval_path = cfg.out_dir.join(format!("eval_emotionflow_{suffix}.json"));
    write_json(&eval_path, &report)?;

    let mut manifest = Manifest::new("train", cfg.as_map());
    manifest.record_input(&data.cache_path)?;
    manifest.record_output(&checkpoint_path);
    manifest.record_output(&history_path);
    manifest.record_output(&eval_path);
    manifest.write(&cfg.out_dir)?;

    println!(
        "trained {} epochs (best {}), test weighted F1 {:.4} -> {}",
        history.epochs.len(),
        history.best_epoch.map_or("-".into(), |e| e.to_string()),
        report.weighted_f1,
        checkpoint_path.display()
    );
    Ok(())
}

pub fn cmd_search(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let data = prepare(cfg, cfg.task, cfg.chunks, cfg.content)?;
    let suffix = run_suffix(cfg.task, cfg.chunks, cfg.content);
    let ledger_path = cfg.out_dir.join(format!("trials_{suffix}.jsonl"));
    let completed = if ledger_path.exists() {
        read_trial_ledger(&ledger_path)?
    } else {
        Vec::new()
    };

    let settings = TrainSettings { max_epochs: cfg.max_epochs, patience: cfg.patience };
    let split = DataSplit { train: data.train, val: data.val };
    let result = random_search(
        &SearchSpace::default(),
        cfg.trials,
        &split,
        data.genres.len(),
        cfg.task,
        cfg.chunks,
        cfg.content,
        cfg.seed,
        &settings,
        &completed,
    )?;
    write_trial_ledger(&ledger_path, &result.records)?;

    let best_config = result.records[result.best_trial].config.clone();
    let checkpoint_path = cfg.out_dir.join(format!("best_checkpoint_{suffix}.json"));
    let genre_names = if cfg.task == TaskKind::Mt { data.genres.clone() } else { vec![] };
    write_checkpoint(
        &checkpoint_path,
        &Checkpoint { config: best_config, genre_names, params: result.best_params.clone() },
    )?;

    let (report, _) = evaluate_success(&result.best_params, &data.test)?;
    let eval_path = cfg.out_dir.join(format!("eval_emotionflow_{suffix}.json"));
    write_json(&eval_path, &report)?;

    let mut manifest = Manifest::new("search", cfg.as_map());
    manifest.record_input(&data.cache_path)?;
    manifest.record_output(&ledger_path);
    manifest.record_output(&checkpoint_path);
    manifest.record_output(&eval_path);
    manifest.write(&cfg.out_dir)?;

    println!(
        "search done: best trial {} of {}, test weighted F1 {:.4} -> {}",
        result.best_trial,
        cfg.trials,
        report.weighted_f1,
        checkpoint_path.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Majority,
    Svm,
}

/// Train/validation pools merge for the SVM: C is grid-searched with 3-fold
/// CV on the full training side, then the model is refit on all of it.
fn svm_success_eval(
    train: &[TrainItem],
    val: &[TrainItem],
    test: &[TrainItem],
    seed: u64,
) -> Result<(EvalReport, f64)> {
    let pool: Vec<&TrainItem> = train.iter().chain(val).collect();
    let features: Vec<Vec<f64>> = pool.iter().map(|i| flat_features(i)).collect();
    let labels: Vec<f64> = pool
        .iter()
        .map(|i| if i.success == SuccessLabel::Successful { 1.0 } else { -1.0 })
        .collect();
    let c = svm_select_c(&features, &labels, &C_GRID, 3, seed)?;
    let model = svm_train(&features, &labels, c)?;

    let ids: Vec<String> = test.iter().map(|i| i.id.clone()).collect();
    let y_true: Vec<usize> = test.iter().map(|i| success_class_index(i.success)).collect();
    let y_pred: Vec<usize> = test
        .iter()
        .map(|i| usize::from(model.predict(&flat_features(i)) < 0.0))
        .collect();
    let report = EvalReport::from_predictions(success_class_names(), ids, y_true, y_pred)?;
    Ok((report, c))
}

fn flat_features(item: &TrainItem) -> Vec<f64> {
    item.seq.iter().flatten().copied().collect()
}

pub fn cmd_baseline(cfg: &RunConfig, method: BaselineMethod) -> Result<()> {
    ensure_out_dir(cfg)?;
    let suffix = run_suffix(cfg.task, cfg.chunks, cfg.content);
    let mut manifest = Manifest::new("baseline", cfg.as_map());

    let summary = match method {
        BaselineMethod::Majority => {
            let data = prepare(cfg, TaskKind::St, cfg.chunks, cfg.content)?;
            let train_labels: Vec<SuccessLabel> = data
                .train
                .iter()
                .chain(&data.val)
                .map(|i| i.success)
                .collect();
            let test_ids: Vec<String> = data.test.iter().map(|i| i.id.clone()).collect();
            let test_labels: Vec<SuccessLabel> = data.test.iter().map(|i| i.success).collect();
            let report = majority_baseline(&train_labels, &test_ids, &test_labels)?;
            let out = cfg.out_dir.join(format!("eval_majority_{suffix}.json"));
            write_json(&out, &report)?;
            manifest.record_input(&data.cache_path)?;
            manifest.record_output(&out);
            format!("majority baseline: test weighted F1 {:.4} -> {}", report.weighted_f1, out.display())
        }
        BaselineMethod::Svm => {
            // Success classifier; in multitask mode a second, independent
            // one-vs-rest classifier predicts genre from the same features.
            let data = prepare(cfg, cfg.task, cfg.chunks, cfg.content)?;
            let (report, c) = svm_success_eval(&data.train, &data.val, &data.test, cfg.seed)?;
            let out = cfg.out_dir.join(format!("eval_nrc_svm_{suffix}.json"));
            write_json(&out, &report)?;
            manifest.record_input(&data.cache_path)?;
            manifest.record_output(&out);

            if cfg.task == TaskKind::Mt {
                let pool: Vec<&TrainItem> = data.train.iter().chain(&data.val).collect();
                let features: Vec<Vec<f64>> = pool.iter().map(|i| flat_features(i)).collect();
                let genre_ids: Vec<usize> = pool
                    .iter()
                    .map(|i| i.genre.ok_or_else(|| Error::Data("missing genre label".into())))
                    .collect::<Result<_>>()?;
                let ovr = one_vs_rest_train(&features, &genre_ids, data.genres.clone(), c)?;
                let ids: Vec<String> = data.test.iter().map(|i| i.id.clone()).collect();
                let y_true: Vec<usize> = data
                    .test
                    .iter()
                    .map(|i| i.genre.ok_or_else(|| Error::Data("missing genre label".into())))
                    .collect::<Result<_>>()?;
                let y_pred: Vec<usize> =
                    data.test.iter().map(|i| ovr.predict(&flat_features(i))).collect();
                let genre_report =
                    EvalReport::from_predictions(data.genres.clone(), ids, y_true, y_pred)?;
                let genre_out = cfg.out_dir.join(format!("eval_nrc_svm_genre_{suffix}.json"));
                write_json(&genre_out, &genre_report)?;
                manifest.record_output(&genre_out);
            }
            format!(
                "nrc+svm baseline (C={c}): test weighted F1 {:.4} -> {}",
                report.weighted_f1,
                out.display()
            )
        }
    };
    manifest.write(&cfg.out_dir)?;
    println!("{summary}");
    Ok(())
}

pub fn cmd_evaluate(cfg: &RunConfig, checkpoint_path: &Path) -> Result<()> {
    ensure_out_dir(cfg)?;
    let checkpoint = read_checkpoint(checkpoint_path)?;
    let task = checkpoint.config.task;
    let data = prepare(cfg, task, checkpoint.config.n_chunks, checkpoint.config.content)?;
    let (report, _) = evaluate_success(&checkpoint.params, &data.test)?;
    let out = cfg.out_dir.join("eval_checkpoint.json");
    write_json(&out, &report)?;

    let mut manifest = Manifest::new("evaluate", cfg.as_map());
    manifest.record_input(checkpoint_path)?;
    manifest.record_input(&data.cache_path)?;
    manifest.record_output(&out);
    manifest.write(&cfg.out_dir)?;

    println!("evaluated {}: test weighted F1 {:.4} -> {}", checkpoint_path.display(), report.weighted_f1, out.display());
    Ok(())
}

pub fn cmd_compare(cfg: &RunConfig, path_a: &Path, path_b: &Path) -> Result<()> {
    ensure_out_dir(cfg)?;
    let read_report = |path: &Path| -> Result<EvalReport> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{} is not an EvalReport: {e}", path.display())))
    };
    let a = read_report(path_a)?;
    let b = read_report(path_b)?;
    if a.ids != b.ids || a.y_true != b.y_true {
        return Err(Error::Data(
            "reports cover different test sets; McNemar needs aligned predictions".into(),
        ));
    }
    let result = mcnemar(&a.y_pred, &b.y_pred, &a.y_true)?;

    let name = |p: &Path| {
        p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
    };
    let out = cfg.out_dir.join("mcnemar.csv");
    let mut writer = csv::Writer::from_path(&out).map_err(|e| Error::Data(format!("cannot write {}: {e}", out.display())))?;
    writer
        .write_record(["classifier_a", "classifier_b", "b", "c", "statistic", "p_value"])
        .and_then(|()| {
            writer.write_record([
                name(path_a),
                name(path_b),
                result.b.to_string(),
                result.c.to_string(),
                result.statistic.to_string(),
                result.p_value.to_string(),
            ])
        })
        .map_err(|e| Error::Data(format!("mcnemar csv write failed: {e}")))?;
    writer.flush().map_err(|e| Error::io(&out, e))?;

    let mut manifest = Manifest::new("compare", cfg.as_map());
    manifest.record_input(path_a)?;
    manifest.record_input(path_b)?;
    manifest.record_output(&out);
    manifest.write(&cfg.out_dir)?;

    println!(
        "mcnemar {} vs {}: b={}, c={}, statistic={:.4}, p={:.4} -> {}",
        name(path_a),
        name(path_b),
        result.b,
        result.c,
        result.statistic,
        result.p_value,
        out.display()
    );
    Ok(())
}

pub fn cmd_analyze(cfg: &RunConfig, checkpoint_path: &Path) -> Result<()> {
    ensure_out_dir(cfg)?;
    let checkpoint = read_checkpoint(checkpoint_path)?;
    let data = prepare(cfg, checkpoint.config.task, checkpoint.config.n_chunks, checkpoint.config.content)?;

    // Attention heatmap over the test books.
    let (_, alphas) = evaluate_success(&checkpoint.params, &data.test)?;
    let heatmap = attention_by_genre(&data.test_genres, &alphas)?;
    let heatmap_path = cfg.out_dir.join("attention_heatmap.csv");
    {
        let mut writer = csv::Writer::from_path(&heatmap_path)
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", heatmap_path.display())))?;
        let n = heatmap.weights.first().map_or(0, Vec::len);
        let header: Vec<String> = std::iter::once("genre".to_string())
            .chain((1..=n).map(|i| format!("chunk_{i}")))
            .collect();
        writer
            .write_record(&header)
            .map_err(|e| Error::Data(format!("heatmap csv write failed: {e}")))?;
        for (genre, row) in heatmap.genres.iter().zip(&heatmap.weights) {
            let record: Vec<String> = std::iter::once(genre.clone())
                .chain(row.iter().map(ToString::to_string))
                .collect();
            writer
                .write_record(&record)
                .map_err(|e| Error::Data(format!("heatmap csv write failed: {e}")))?;
        }
        writer.flush().map_err(|e| Error::io(&heatmap_path, e))?;
    }

    // Last-chunk features over the whole corpus for ranking and stats.
    let all_items: Vec<&TrainItem> = data.train.iter().chain(&data.val).chain(&data.test).collect();
    let last_chunk: Vec<Vec<f64>> = all_items.iter().map(|i| i.seq.last().unwrap().clone()).collect();
    let class_labels: Vec<usize> = all_items.iter().map(|i| success_class_index(i.success)).collect();
    let success_labels: Vec<SuccessLabel> = all_items.iter().map(|i| i.success).collect();

    let ranking = info_gain(&last_chunk, &class_labels)?;
    let ranking_path = cfg.out_dir.join("feature_ranking.csv");
    {
        let mut file = fs::File::create(&ranking_path).map_err(|e| Error::io(&ranking_path, e))?;
        writeln!(file, "feature,info_gain").map_err(|e| Error::io(&ranking_path, e))?;
        for entry in &ranking.entries {
            writeln!(file, "{},{}", entry.feature, entry.info_gain).map_err(|e| Error::io(&ranking_path, e))?;
        }
    }

    let stats = emotion_stats(&last_chunk, &success_labels)?;
    let stats_path = cfg.out_dir.join("emotion_stats.csv");
    {
        let mut file = fs::File::create(&stats_path).map_err(|e| Error::io(&stats_path, e))?;
        writeln!(
            file,
            "category,corpus_mean,corpus_std,successful_mean,successful_std,unsuccessful_mean,unsuccessful_std,t_statistic,p_value"
        )
        .map_err(|e| Error::io(&stats_path, e))?;
        for row in &stats.rows {
            writeln!(
                file,
                "{},{},{},{},{},{},{},{},{}",
                row.category,
                row.corpus_mean,
                row.corpus_std,
                row.successful_mean,
                row.successful_std,
                row.unsuccessful_mean,
                row.unsuccessful_std,
                row.t_statistic,
                row.p_value
            )
            .map_err(|e| Error::io(&stats_path, e))?;
        }
    }

    let mut manifest = Manifest::new("analyze", cfg.as_map());
    manifest.record_input(checkpoint_path)?;
    manifest.record_input(&data.cache_path)?;
    manifest.record_output(&heatmap_path);
    manifest.record_output(&ranking_path);
    manifest.record_output(&stats_path);
    manifest.write(&cfg.out_dir)?;

    println!(
        "analyzed {} test books across {} genres -> {}, {}, {}",
        data.test.len(),
        heatmap.genres.len(),
        heatmap_path.display(),
        ranking_path.display(),
        stats_path.display()
    );
    Ok(())
}

pub struct ClusterArgs {
    pub k: usize,
    pub min_books: usize,
    pub window: usize,
}

impl Default for ClusterArgs {
    fn default() -> Self {
        Self { k: 100, min_books: MIN_CLUSTER_BOOKS, window: SMOOTHING_WINDOW }
    }
}

pub fn cmd_cluster(cfg: &RunConfig, args: &ClusterArgs) -> Result<()> {
    ensure_out_dir(cfg)?;
    let records = load_corpus(cfg)?;
    let lexicon = load_lexicon(cfg.require_lexicon()?)?;
    let features = ensure_features(cfg, &records, &lexicon, cfg.chunks, cfg.content)?;
    let labels_by_id: BTreeMap<&str, SuccessLabel> =
        records.iter().map(|r| (r.id.as_str(), r.success)).collect();

    let ids: Vec<String> = features.sequences.iter().map(|s| s.book_id.clone()).collect();
    let labels: Vec<SuccessLabel> = features
        .sequences
        .iter()
        .map(|s| {
            labels_by_id
                .get(s.book_id.as_str())
                .copied()
                .ok_or_else(|| Error::Data(format!("book {} missing from metadata", s.book_id)))
        })
        .collect::<Result<_>>()?;
    let trajectories = joy_trajectories(&features.sequences);
    let result = cluster_books(&ids, &labels, &trajectories, args.k, cfg.seed, args.min_books, args.window)?;

    let out = cfg.out_dir.join("clusters.json");
    write_json(&out, &result)?;

    let mut manifest = Manifest::new("cluster", cfg.as_map());
    manifest.record_input(&features.cache_path)?;
    manifest.record_output(&out);
    manifest.write(&cfg.out_dir)?;

    println!(
        "clustered {} joy trajectories into {} clusters ({} retained with >= {} books) -> {}",
        ids.len(),
        args.k,
        result.retained.len(),
        args.min_books,
        out.display()
    );
    Ok(())
}

/// One row of the comparison table.
#[derive(Debug, Serialize)]
struct TableRow {
    method: String,
    chunks: String,
    task: String,
    content: String,
    weighted_f1: f64,
}

/// Run the whole comparison grid: majority, NRC+SVM, and the emotion-flow
/// search at every (chunks, task, content) cell, plus the reported
/// SentiWordNet figures, into one long-format CSV.
pub fn cmd_reproduce_table1(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let mut rows: Vec<TableRow> = Vec::new();
    let mut reports: BTreeMap<String, EvalReport> = BTreeMap::new();

    for content in [ContentMode::First1k, ContentMode::All] {
        for task in [TaskKind::St, TaskKind::Mt] {
            // Majority does not depend on chunks; reuse the coarsest cell.
            let mut cell = cfg.clone();
            cell.chunks = COMPARISON_CHUNK_GRID[0];
            cell.content = content;
            cell.task = task;
            let data = prepare(&cell, TaskKind::St, cell.chunks, content)?;
            let train_labels: Vec<SuccessLabel> =
                data.train.iter().chain(&data.val).map(|i| i.success).collect();
            let test_ids: Vec<String> = data.test.iter().map(|i| i.id.clone()).collect();
            let test_labels: Vec<SuccessLabel> = data.test.iter().map(|i| i.success).collect();
            let report = majority_baseline(&train_labels, &test_ids, &test_labels)?;
            rows.push(TableRow {
                method: "majority".into(),
                chunks: "-".into(),
                task: task.name().into(),
                content: content.name().into(),
                weighted_f1: report.weighted_f1,
            });
        }
    }

    for (task, f1) in SENTIWORDNET_REPORTED {
        rows.push(TableRow {
            method: "sentiwordnet+svm (reported)".into(),
            chunks: "20".into(),
            task: task.name().into(),
            content: ContentMode::First1k.name().into(),
            weighted_f1: f1,
        });
    }

    for content in [ContentMode::First1k, ContentMode::All] {
        for &chunks in &COMPARISON_CHUNK_GRID {
            for task in [TaskKind::St, TaskKind::Mt] {
                let mut cell = cfg.clone();
                cell.chunks = chunks;
                cell.content = content;
                cell.task = task;

                let data = prepare(&cell, task, chunks, content)?;
                let (svm_report, _) = svm_success_eval(&data.train, &data.val, &data.test, cell.seed)?;
                rows.push(TableRow {
                    method: "nrc+svm".into(),
                    chunks: chunks.to_string(),
                    task: task.name().into(),
                    content: content.name().into(),
                    weighted_f1: svm_report.weighted_f1,
                });
                reports.insert(
                    format!("nrc+svm_{}", run_suffix(task, chunks, content)),
                    svm_report,
                );

                let settings = TrainSettings { max_epochs: cell.max_epochs, patience: cell.patience };
                let split = DataSplit { train: data.train, val: data.val };
                let result = random_search(
                    &SearchSpace::default(),
                    cell.trials,
                    &split,
                    data.genres.len(),
                    task,
                    chunks,
                    content,
                    cell.seed,
                    &settings,
                    &[],
                )?;
                let (flow_report, _) = evaluate_success(&result.best_params, &data.test)?;
                rows.push(TableRow {
                    method: "emotion_flow".into(),
                    chunks: chunks.to_string(),
                    task: task.name().into(),
                    content: content.name().into(),
                    weighted_f1: flow_report.weighted_f1,
                });
                reports.insert(
                    format!("emotion_flow_{}", run_suffix(task, chunks, content)),
                    flow_report,
                );
            }
        }
    }

    let table_path = cfg.out_dir.join("table1.csv");
    {
        let mut file = fs::File::create(&table_path).map_err(|e| Error::io(&table_path, e))?;
        writeln!(file, "method,chunks,task,content,weighted_f1").map_err(|e| Error::io(&table_path, e))?;
        for row in &rows {
            writeln!(
                file,
                "{},{},{},{},{}",
                row.method, row.chunks, row.task, row.content, row.weighted_f1
            )
            .map_err(|e| Error::io(&table_path, e))?;
        }
    }

    // The headline significance test: emotion flow (50, MT, All) against
    // NRC+SVM (10, MT, All).
    let flow_key = format!("emotion_flow_{}", run_suffix(TaskKind::Mt, 50, ContentMode::All));
    let svm_key = format!("nrc+svm_{}", run_suffix(TaskKind::Mt, 10, ContentMode::All));
    let mut mcnemar_path = None;
    if let (Some(flow), Some(svm)) = (reports.get(&flow_key), reports.get(&svm_key)) {
        if flow.ids == svm.ids && flow.y_true == svm.y_true {
            let result = mcnemar(&flow.y_pred, &svm.y_pred, &flow.y_true)?;
            let path = cfg.out_dir.join("mcnemar_table1.json");
            write_json(&path, &result)?;
            mcnemar_path = Some(path);
        }
    }

    let mut manifest = Manifest::new("reproduce-table1", cfg.as_map());
    manifest.record_output(&table_path);
    if let Some(p) = &mcnemar_path {
        manifest.record_output(p);
    }
    manifest.write(&cfg.out_dir)?;

    println!("comparison grid complete: {} rows -> {}", rows.len(), table_path.display());
    Ok(())
}
