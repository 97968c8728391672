//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS line (or SKIP for the dataset-dependent checks when no corpus is
//! configured). Run with `cargo test --test acceptance -- --nocapture`.
//!
//! Dataset-dependent checks activate when these point at the real corpus:
//!   EMOFLOW_CORPUS_DIR, EMOFLOW_METADATA, EMOFLOW_LEXICON

use std::time::Instant;

use rand::Rng;

use emoflow_core::analysis::{cluster_books, kmeans};
use emoflow_core::baselines::{majority_baseline, svm_select_c, svm_train, C_GRID};
use emoflow_core::corpus::{stratified_split, SuccessLabel};
use emoflow_core::evaluation::{mcnemar, weighted_f1};
use emoflow_core::features::{chunk_vector, BookEmotionSequence, ChunkEmotionVector, ContentMode, CHUNK_DIM};
use emoflow_core::lexicon::NUM_CATEGORIES;
use emoflow_core::nn::{
    attention, batch_gradients, binary_cross_entropy, categorical_cross_entropy, forward,
    init_params, item_loss, AttentionParams, BatchItem, HyperConfig, InitScheme, ModelDims,
    ModelParams, TaskKind,
};
use emoflow_core::rng::{RngFactory, StreamPurpose};
use emoflow_core::training::{
    evaluate_success, random_search, train, write_checkpoint, write_trial_ledger, Checkpoint,
    DataSplit, SearchSpace, TrainItem, TrainSettings,
};

fn hyper(task: TaskKind, seed: u64, hidden: usize, attention_units: usize, lr: f64) -> HyperConfig {
    HyperConfig {
        init: InitScheme::GlorotUniform,
        learning_rate: lr,
        dropout: 0.0,
        hidden_units: hidden,
        attention_units,
        batch_size: 4,
        n_chunks: 10,
        task,
        content: ContentMode::All,
        seed,
    }
}

// ---------------------------------------------------------------------------
// Gradient correctness: 20 random small configurations (H=A=3, n=4, D=20),
// both tasks; central differences at 1e-5; relative error < 1e-4; < 1 minute.
// ---------------------------------------------------------------------------

fn batch_loss(params: &ModelParams, items: &[BatchItem]) -> f64 {
    let total: f64 = items
        .iter()
        .map(|item| {
            let (_, cache) = forward(params, item.seq, item.mask);
            item_loss(params, &cache, item.success_target, item.genre).unwrap()
        })
        .sum();
    total / items.len() as f64
}

fn max_fd_relative_error(params: &ModelParams, items: &[BatchItem]) -> f64 {
    let (_, grads) = batch_gradients(params, items).unwrap();
    let eps = 1e-5;
    // Central differences on an O(1) loss carry ~1e-11 of roundoff noise, so
    // gradients below this floor are compared absolutely at floor * tol.
    let floor = 1e-6;
    let mut worst: f64 = 0.0;
    for tensor_idx in 0..params.tensors().len() {
        let len = params.tensors()[tensor_idx].1.len();
        for k in 0..len {
            let mut plus = params.clone();
            plus.tensors_mut()[tensor_idx].1[k] += eps;
            let mut minus = params.clone();
            minus.tensors_mut()[tensor_idx].1[k] -= eps;
            let fd = (batch_loss(&plus, items) - batch_loss(&minus, items)) / (2.0 * eps);
            let analytic = grads.tensors()[tensor_idx].1[k];
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn gradient_correctness() {
    let started = Instant::now();
    let mut overall: f64 = 0.0;
    for config_idx in 0..20u64 {
        let task = if config_idx % 2 == 0 { TaskKind::St } else { TaskKind::Mt };
        let genres = if task == TaskKind::Mt { 5 } else { 0 };
        let dims = ModelDims { input: 20, hidden: 3, attention: 3, genres };
        let config = hyper(task, 1000 + config_idx, 3, 3, 1e-3);
        let params = init_params(&config, dims).unwrap();

        let mut rng = RngFactory::new(2000 + config_idx).stream(StreamPurpose::Init, 1);
        let seq: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..20).map(|_| rng.gen_range(0.0..3.0)).collect())
            .collect();
        let genre = (task == TaskKind::Mt).then(|| rng.gen_range(0..5));
        let items = [BatchItem {
            seq: &seq,
            success_target: f64::from(u8::from(config_idx % 3 == 0)),
            genre,
            mask: None,
        }];
        let worst = max_fd_relative_error(&params, &items);
        assert!(worst < 1e-4, "config {config_idx} ({task:?}): max relative error {worst}");
        overall = overall.max(worst);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "gradient check took {elapsed:?}");
    println!("ACCEPTANCE gradient_correctness: PASS (max rel err {overall:.2e}, {elapsed:?})");
}

// ---------------------------------------------------------------------------
// Chunk aggregation oracle: chunk_vector vs an independent brute-force
// transcription of the mean / population-sigma formulas, 1,000 random inputs,
// 1e-12 relative tolerance.
// ---------------------------------------------------------------------------

fn brute_force_chunk(vectors: &[[u32; NUM_CATEGORIES]]) -> ([f64; NUM_CATEGORIES], [f64; NUM_CATEGORIES]) {
    let n = vectors.len();
    let mut mean = [0.0; NUM_CATEGORIES];
    let mut std = [0.0; NUM_CATEGORIES];
    for c in 0..NUM_CATEGORIES {
        let mut sum = 0.0;
        for v in vectors {
            sum += f64::from(v[c]);
        }
        mean[c] = sum / n as f64;
        let mut sq = 0.0;
        for v in vectors {
            let d = f64::from(v[c]) - mean[c];
            sq += d * d;
        }
        std[c] = (sq / n as f64).sqrt();
    }
    (mean, std)
}

#[test]
fn chunk_vector_oracle() {
    let mut rng = RngFactory::new(31).stream(StreamPurpose::Init, 7);
    for trial in 0..1000 {
        let len = rng.gen_range(1..40);
        let vectors: Vec<[u32; NUM_CATEGORIES]> = (0..len)
            .map(|_| {
                let mut v = [0u32; NUM_CATEGORIES];
                for x in v.iter_mut() {
                    *x = rng.gen_range(0..60);
                }
                v
            })
            .collect();
        let got = chunk_vector(&vectors).unwrap();
        let (mean, std) = brute_force_chunk(&vectors);
        for c in 0..NUM_CATEGORIES {
            let m_tol = 1e-12 * mean[c].abs().max(got.mean[c].abs()).max(1e-300);
            assert!(
                (got.mean[c] - mean[c]).abs() <= m_tol || got.mean[c] == mean[c],
                "trial {trial} mean[{c}]: {} vs {}",
                got.mean[c],
                mean[c]
            );
            let s_tol = 1e-12 * std[c].abs().max(got.std[c].abs()).max(1e-300);
            assert!(
                (got.std[c] - std[c]).abs() <= s_tol || got.std[c] == std[c],
                "trial {trial} std[{c}]: {} vs {}",
                got.std[c],
                std[c]
            );
        }
    }
    println!("ACCEPTANCE chunk_vector_oracle: PASS (1000 random chunks)");
}

// ---------------------------------------------------------------------------
// Attention simplex: 1,000 random inputs; weights sum to 1 within 1e-12 and
// stay positive; a single annotation gets weight exactly 1.
// ---------------------------------------------------------------------------

#[test]
fn attention_simplex() {
    let mut rng = RngFactory::new(77).stream(StreamPurpose::Init, 3);
    let mut a = AttentionParams::zeros(4, 6);
    for v in a.proj.data.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    for v in a.proj_bias.iter_mut().chain(a.score_weight.iter_mut()) {
        *v = rng.gen_range(-1.0..1.0);
    }
    for _ in 0..1000 {
        let n = rng.gen_range(1..40);
        let annotations: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..6).map(|_| rng.gen_range(-50.0..50.0)).collect())
            .collect();
        let (_, alpha) = attention(&a, &annotations);
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(alpha.iter().all(|&w| w > 0.0));
    }
    let single = vec![vec![0.3, -0.1, 2.0, 0.5, -0.7, 1.1]];
    let (r, alpha) = attention(&a, &single);
    assert_eq!(alpha, vec![1.0]);
    assert_eq!(r, single[0]);
    println!("ACCEPTANCE attention_simplex: PASS (1000 random inputs)");
}

// ---------------------------------------------------------------------------
// Majority baseline: closed form q*(2q/(q+1)) within 1e-9 on arbitrary
// stratified test sets; the reference corpus proportions (654 successful /
// 349 unsuccessful) give 0.506 +- 0.01.
// ---------------------------------------------------------------------------

#[test]
fn majority_baseline_closed_form() {
    let train = vec![
        SuccessLabel::Successful,
        SuccessLabel::Successful,
        SuccessLabel::Unsuccessful,
    ];
    // stratified test sets mirror the training majority, so q >= 0.5
    for (n_s, n_u) in [(6usize, 4usize), (196, 105), (33, 21), (75, 25), (50, 50)] {
        let mut test = vec![SuccessLabel::Successful; n_s];
        test.extend(vec![SuccessLabel::Unsuccessful; n_u]);
        let ids: Vec<String> = (0..test.len()).map(|i| format!("b{i}")).collect();
        let report = majority_baseline(&train, &ids, &test).unwrap();
        let q = n_s as f64 / (n_s + n_u) as f64;
        let expected = q * (2.0 * q / (q + 1.0));
        assert!(
            (report.weighted_f1 - expected).abs() < 1e-9,
            "q={q}: got {}, closed form {}",
            report.weighted_f1,
            expected
        );
    }

    // Reference corpus proportions: 654 successful / 349 unsuccessful, 70:30.
    let records: Vec<(String, SuccessLabel)> = (0..654)
        .map(|i| (format!("s{i:04}"), SuccessLabel::Successful))
        .chain((0..349).map(|i| (format!("u{i:04}"), SuccessLabel::Unsuccessful)))
        .collect();
    let split = stratified_split(&records, 0.70, 0.20, 13).unwrap();
    let label_of = |id: &String| {
        if id.starts_with('s') {
            SuccessLabel::Successful
        } else {
            SuccessLabel::Unsuccessful
        }
    };
    let train_labels: Vec<SuccessLabel> =
        split.train_ids.iter().chain(&split.val_ids).map(label_of).collect();
    let test_labels: Vec<SuccessLabel> = split.test_ids.iter().map(label_of).collect();
    let report = majority_baseline(&train_labels, &split.test_ids, &test_labels).unwrap();
    assert!(
        (report.weighted_f1 - 0.506).abs() <= 0.01,
        "reference-proportion majority F1 {} not within 0.506 +- 0.01",
        report.weighted_f1
    );
    println!(
        "ACCEPTANCE majority_baseline_closed_form: PASS (reference-proportion F1 {:.4})",
        report.weighted_f1
    );
}

// ---------------------------------------------------------------------------
// Weighted F1 and McNemar hand-computed example values.
// ---------------------------------------------------------------------------

#[test]
fn metric_hand_values() {
    let y_true = [1usize, 1, 1, 0];
    let y_pred = [1usize, 1, 0, 0];
    let f1 = weighted_f1(&y_true, &y_pred).unwrap();
    assert!((f1 - (0.75 * 0.8 + 0.25 * (2.0 / 3.0))).abs() < 1e-12);

    let perfect = weighted_f1(&y_true, &y_true).unwrap();
    assert_eq!(perfect, 1.0);

    // b = c = 10 -> statistic 0.05, p ~ 0.8231; b=15,c=5 -> 4.05, p ~ 0.0442
    let build = |b: usize, c: usize| {
        let n = 40;
        let y = vec![0usize; n];
        let mut a_pred = vec![0usize; n];
        let mut b_pred = vec![0usize; n];
        for i in 0..b {
            b_pred[i] = 1;
        }
        for i in b..b + c {
            a_pred[i] = 1;
        }
        (a_pred, b_pred, y)
    };
    let (a, b, y) = build(10, 10);
    let r = mcnemar(&a, &b, &y).unwrap();
    assert!((r.statistic - 0.05).abs() < 1e-12);
    assert!((r.p_value - 0.8230632737581214).abs() < 1e-6);

    let (a, b, y) = build(15, 5);
    let r = mcnemar(&a, &b, &y).unwrap();
    assert!((r.statistic - 4.05).abs() < 1e-12);
    assert!((r.p_value - 0.0441713449084426).abs() < 1e-6);

    let (a, _, y) = build(10, 10);
    let same = mcnemar(&a, &a, &y).unwrap();
    assert_eq!((same.statistic, same.p_value), (0.0, 1.0));

    println!("ACCEPTANCE metric_hand_values: PASS");
}

// ---------------------------------------------------------------------------
// Overfit oracle: 8 separable synthetic books reach 100% training accuracy
// within 200 epochs in under 30 seconds.
// ---------------------------------------------------------------------------

fn separable_books(n_books: usize, n_chunks: usize) -> Vec<TrainItem> {
    let joy = 4;
    (0..n_books)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let mut row = vec![0.0; CHUNK_DIM];
            row[joy] = sign;
            TrainItem {
                id: format!("synth{i:02}"),
                seq: vec![row; n_chunks],
                success: if sign > 0.0 { SuccessLabel::Successful } else { SuccessLabel::Unsuccessful },
                genre: Some(i % 2),
            }
        })
        .collect()
}

#[test]
fn overfit_oracle() {
    let started = Instant::now();
    let items = separable_books(8, 10);
    let config = hyper(TaskKind::St, 3, 8, 8, 1e-2);
    let data = DataSplit { train: items.clone(), val: items.clone() };
    let settings = TrainSettings { max_epochs: 200, patience: 200 };
    let (params, history) = train(&config, &data, 0, &settings).unwrap();
    let (report, _) = evaluate_success(&params, &items).unwrap();
    let elapsed = started.elapsed();
    assert_eq!(report.weighted_f1, 1.0, "training accuracy below 100%");
    assert!(history.epochs.len() <= 200);
    assert!(elapsed.as_secs() < 30, "overfit oracle took {elapsed:?}");
    println!(
        "ACCEPTANCE overfit_oracle: PASS ({} epochs, {elapsed:?})",
        history.epochs.len()
    );
}

// ---------------------------------------------------------------------------
// Multitask loss decomposition: L_total = L_suc + L_gen to 1e-12.
// ---------------------------------------------------------------------------

#[test]
fn multitask_loss_decomposition() {
    let mut rng = RngFactory::new(5).stream(StreamPurpose::Init, 9);
    for trial in 0..50u64 {
        let dims = ModelDims { input: 20, hidden: 4, attention: 3, genres: 6 };
        let config = hyper(TaskKind::Mt, 400 + trial, 4, 3, 1e-3);
        let params = init_params(&config, dims).unwrap();
        let seq: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..20).map(|_| rng.gen_range(0.0..2.0)).collect())
            .collect();
        let genre = rng.gen_range(0..6);
        let y = f64::from(u8::from(trial % 2 == 0));

        let (pred, cache) = forward(&params, &seq, None);
        let total = item_loss(&params, &cache, y, Some(genre)).unwrap();
        let suc = binary_cross_entropy(pred.success_prob, y);
        let gen = categorical_cross_entropy(pred.genre_probs.as_ref().unwrap(), genre);
        assert!(
            (total - (suc + gen)).abs() < 1e-12,
            "trial {trial}: {total} vs {suc} + {gen}"
        );
    }
    println!("ACCEPTANCE multitask_loss_decomposition: PASS");
}

// ---------------------------------------------------------------------------
// Determinism: identical search runs produce bit-identical ledgers and
// checkpoints.
// ---------------------------------------------------------------------------

#[test]
fn search_determinism() {
    let items = separable_books(8, 10);
    let data = DataSplit { train: items.clone(), val: items };
    let settings = TrainSettings { max_epochs: 3, patience: 3 };

    let run = |dir: &std::path::Path| {
        let result = random_search(
            &SearchSpace::default(),
            4,
            &data,
            0,
            TaskKind::St,
            10,
            ContentMode::All,
            99,
            &settings,
            &[],
        )
        .unwrap();
        let ledger = dir.join("trials.jsonl");
        write_trial_ledger(&ledger, &result.records).unwrap();
        let checkpoint = dir.join("checkpoint.json");
        write_checkpoint(
            &checkpoint,
            &Checkpoint {
                config: result.records[result.best_trial].config.clone(),
                genre_names: vec![],
                params: result.best_params.clone(),
            },
        )
        .unwrap();
        (std::fs::read(ledger).unwrap(), std::fs::read(checkpoint).unwrap())
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (ledger_a, ckpt_a) = run(dir_a.path());
    let (ledger_b, ckpt_b) = run(dir_b.path());
    assert_eq!(ledger_a, ledger_b, "trial ledgers differ");
    assert_eq!(ckpt_a, ckpt_b, "checkpoints differ");
    println!("ACCEPTANCE search_determinism: PASS (bit-identical ledger and checkpoint)");
}

// ---------------------------------------------------------------------------
// K-means: blob recovery within 1e-6, monotone inertia, and the >=20-member
// retention filter against a brute-force count.
// ---------------------------------------------------------------------------

#[test]
fn kmeans_criteria() {
    let mut rng = RngFactory::new(17).stream(StreamPurpose::Cluster, 3);
    let blob = |center: &[f64], count: usize, rng: &mut rand_chacha::ChaCha20Rng| -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| center.iter().map(|&c| c + rng.gen_range(-0.4..0.4)).collect())
            .collect()
    };

    let mut vectors = blob(&[6.0, 6.0, 6.0], 40, &mut rng);
    vectors.extend(blob(&[-6.0, -6.0, -6.0], 40, &mut rng));
    let fit = kmeans(&vectors, 2, 5).unwrap();
    let exact_mean = |range: std::ops::Range<usize>| -> Vec<f64> {
        let mut m = vec![0.0; 3];
        for i in range.clone() {
            for (mi, vi) in m.iter_mut().zip(&vectors[i]) {
                *mi += vi;
            }
        }
        m.into_iter().map(|v| v / range.len() as f64).collect()
    };
    let blob_a = exact_mean(0..40);
    let blob_b = exact_mean(40..80);
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-6);
    assert!(
        (close(&fit.centroids[0], &blob_a) && close(&fit.centroids[1], &blob_b))
            || (close(&fit.centroids[0], &blob_b) && close(&fit.centroids[1], &blob_a)),
        "centroids missed blob means"
    );
    for w in fit.inertia_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "inertia rose: {} -> {}", w[0], w[1]);
    }

    // retention filter vs brute force, on a 3-blob set with one small blob
    let mut trajectories = blob(&[4.0, 4.0, 4.0], 25, &mut rng);
    trajectories.extend(blob(&[-4.0, -4.0, -4.0], 25, &mut rng));
    trajectories.extend(blob(&[0.0, 10.0, 0.0], 4, &mut rng));
    let ids: Vec<String> = (0..54).map(|i| format!("b{i:03}")).collect();
    let labels = vec![SuccessLabel::Successful; 27]
        .into_iter()
        .chain(vec![SuccessLabel::Unsuccessful; 27])
        .collect::<Vec<_>>();
    let result = cluster_books(&ids, &labels, &trajectories, 3, 11, 20, 3).unwrap();
    let mut counts = std::collections::HashMap::new();
    for a in &result.assignments {
        *counts.entry(a.cluster).or_insert(0usize) += 1;
    }
    let mut expected: Vec<usize> = counts.iter().filter(|(_, &c)| c >= 20).map(|(&k, _)| k).collect();
    expected.sort();
    let got: Vec<usize> = result.retained.iter().map(|r| r.cluster).collect();
    assert_eq!(got, expected, "retention filter disagrees with brute-force count");
    println!("ACCEPTANCE kmeans_criteria: PASS");
}

// ---------------------------------------------------------------------------
// Dataset-dependent criteria. These need the real corpus; they SKIP when
// EMOFLOW_CORPUS_DIR / EMOFLOW_METADATA / EMOFLOW_LEXICON are not set.
// ---------------------------------------------------------------------------

struct Dataset {
    records: Vec<emoflow_core::corpus::BookRecord>,
    lexicon: emoflow_core::lexicon::EmotionLexicon,
}

fn load_dataset() -> Option<Dataset> {
    let corpus_dir = std::env::var("EMOFLOW_CORPUS_DIR").ok()?;
    let metadata = std::env::var("EMOFLOW_METADATA").ok()?;
    let lexicon_path = std::env::var("EMOFLOW_LEXICON").ok()?;
    let records = emoflow_core::corpus::ingest(
        std::path::Path::new(&corpus_dir),
        std::path::Path::new(&metadata),
    )
    .expect("failed to ingest the configured corpus");
    let lexicon = emoflow_core::lexicon::load_lexicon(std::path::Path::new(&lexicon_path))
        .expect("failed to load the configured lexicon");
    Some(Dataset { records, lexicon })
}

fn featurize_50_all(data: &Dataset) -> Vec<BookEmotionSequence> {
    let (seqs, _) = emoflow_core::features::featurize_corpus(
        &data.records,
        &data.lexicon,
        50,
        ContentMode::All,
        emoflow_core::lexicon::PresenceMode::Occurrences,
    );
    seqs
}

#[test]
fn dataset_directional_comparison() {
    let Some(data) = load_dataset() else {
        println!("ACCEPTANCE dataset_directional_comparison: SKIP (dataset not configured)");
        return;
    };
    let sequences = featurize_50_all(&data);
    let genre_names: Vec<String> = {
        let mut v: Vec<String> = data.records.iter().map(|r| r.genre.clone()).collect();
        v.sort();
        v.dedup();
        v
    };
    let by_id: std::collections::BTreeMap<&str, &emoflow_core::corpus::BookRecord> =
        data.records.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut wins_vs_majority = 0;
    let mut wins_mt_vs_st = 0;
    let mut wins_vs_svm = 0;
    let seeds = [13u64, 17, 23];
    for &seed in &seeds {
        let labeled: Vec<(String, SuccessLabel)> = sequences
            .iter()
            .map(|s| (s.book_id.clone(), by_id[s.book_id.as_str()].success))
            .collect();
        let split = stratified_split(&labeled, 0.70, 0.20, seed).unwrap();

        let items_mt: Vec<TrainItem> = sequences
            .iter()
            .map(|s| {
                let r = by_id[s.book_id.as_str()];
                let genre = genre_names.iter().position(|g| g == &r.genre);
                TrainItem::from_sequence(s, r.success, genre)
            })
            .collect();
        let items_st: Vec<TrainItem> = items_mt
            .iter()
            .cloned()
            .map(|mut i| {
                i.genre = None;
                i
            })
            .collect();

        let run_search = |items: Vec<TrainItem>, task: TaskKind| {
            let (train_set, val, test) =
                emoflow_core::training::partition_items(items, &split).unwrap();
            let result = random_search(
                &SearchSpace::default(),
                20,
                &DataSplit { train: train_set, val },
                genre_names.len(),
                task,
                50,
                ContentMode::All,
                seed,
                &TrainSettings::default(),
                &[],
            )
            .unwrap();
            let (report, _) = evaluate_success(&result.best_params, &test).unwrap();
            (report, test)
        };
        let (mt_report, test) = run_search(items_mt.clone(), TaskKind::Mt);
        let (st_report, _) = run_search(items_st.clone(), TaskKind::St);

        let (train_set, val, _) =
            emoflow_core::training::partition_items(items_st.clone(), &split).unwrap();
        let pool: Vec<&TrainItem> = train_set.iter().chain(&val).collect();
        let features: Vec<Vec<f64>> =
            pool.iter().map(|i| i.seq.iter().flatten().copied().collect()).collect();
        let svm_labels: Vec<f64> = pool
            .iter()
            .map(|i| if i.success == SuccessLabel::Successful { 1.0 } else { -1.0 })
            .collect();
        let c = svm_select_c(&features, &svm_labels, &C_GRID, 3, seed).unwrap();
        let model = svm_train(&features, &svm_labels, c).unwrap();
        let y_true: Vec<usize> = test
            .iter()
            .map(|i| usize::from(i.success == SuccessLabel::Unsuccessful))
            .collect();
        let y_pred: Vec<usize> = test
            .iter()
            .map(|i| {
                let x: Vec<f64> = i.seq.iter().flatten().copied().collect();
                usize::from(model.predict(&x) < 0.0)
            })
            .collect();
        let svm_f1 = weighted_f1(&y_true, &y_pred).unwrap();

        let train_labels: Vec<SuccessLabel> = split
            .train_ids
            .iter()
            .chain(&split.val_ids)
            .map(|id| by_id[id.as_str()].success)
            .collect();
        let test_labels: Vec<SuccessLabel> =
            split.test_ids.iter().map(|id| by_id[id.as_str()].success).collect();
        let majority = majority_baseline(&train_labels, &split.test_ids, &test_labels).unwrap();

        println!(
            "  seed {seed}: EF-MT {:.4}, EF-ST {:.4}, NRC+SVM {:.4}, majority {:.4}",
            mt_report.weighted_f1, st_report.weighted_f1, svm_f1, majority.weighted_f1
        );
        if mt_report.weighted_f1 >= majority.weighted_f1 + 0.10 {
            wins_vs_majority += 1;
        }
        if mt_report.weighted_f1 >= st_report.weighted_f1 {
            wins_mt_vs_st += 1;
        }
        if mt_report.weighted_f1 > svm_f1 {
            wins_vs_svm += 1;
        }
    }
    assert!(wins_vs_majority >= 2, "EF-MT beat majority by 0.10 in only {wins_vs_majority}/3 seeds");
    assert!(wins_mt_vs_st >= 2, "MT >= ST in only {wins_mt_vs_st}/3 seeds");
    assert!(wins_vs_svm >= 2, "EF beat NRC+SVM in only {wins_vs_svm}/3 seeds");
    println!("ACCEPTANCE dataset_directional_comparison: PASS ({wins_vs_majority}/{wins_mt_vs_st}/{wins_vs_svm} of 3 seeds)");
}

#[test]
fn dataset_emotion_stats_spot_check() {
    let Some(data) = load_dataset() else {
        println!("ACCEPTANCE dataset_emotion_stats_spot_check: SKIP (dataset not configured)");
        return;
    };
    let sequences = featurize_50_all(&data);
    let anger = emoflow_core::lexicon::EmotionCategory::Anger.index();
    let trust = emoflow_core::lexicon::EmotionCategory::Trust.index();
    let last_means = |idx: usize| -> f64 {
        let values: Vec<f64> = sequences
            .iter()
            .map(|s| s.chunks.last().map(|c: &ChunkEmotionVector| c.mean[idx]).unwrap())
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };
    let anger_mu = last_means(anger);
    let trust_mu = last_means(trust);
    assert!(
        (anger_mu - 0.248).abs() <= 0.05,
        "corpus last-chunk anger mean {anger_mu} not within 0.248 +- 0.05"
    );
    assert!(
        (trust_mu - 0.492).abs() <= 0.05,
        "corpus last-chunk trust mean {trust_mu} not within 0.492 +- 0.05"
    );
    // directional: endings carry more positive than negative vocabulary
    let positive_mu = last_means(emoflow_core::lexicon::EmotionCategory::Positive.index());
    let negative_mu = last_means(emoflow_core::lexicon::EmotionCategory::Negative.index());
    assert!(positive_mu > negative_mu, "positive {positive_mu} <= negative {negative_mu}");
    println!(
        "ACCEPTANCE dataset_emotion_stats_spot_check: PASS (anger {anger_mu:.3}, trust {trust_mu:.3}, positive {positive_mu:.3}, negative {negative_mu:.3})"
    );
}
