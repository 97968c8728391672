//! Post-hoc analyses over a trained model's predictions and the feature
//! store: per-genre attention heatmaps, information-gain feature ranking for
//! the last chunk, emotion statistics with Welch significance tests, and
//! K-means clustering of per-book joy trajectories with smoothed centroids.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SuccessLabel;
use crate::error::{Error, Result};
use crate::features::BookEmotionSequence;
use crate::lexicon::{EmotionCategory, ALL_CATEGORIES};
use crate::rng::{RngFactory, StreamPurpose};
use crate::stats::student_t_two_sided;

/// Mean attention weight per chunk, per genre, over the test books.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionHeatmap {
    pub genres: Vec<String>,
    /// One row per genre, one column per chunk; rows are means of simplex
    /// vectors, so each sums to 1.
    pub weights: Vec<Vec<f64>>,
}

/// Row means over the books of each genre; genres without test books are
/// omitted. Genre order is lexicographic for stable output.
pub fn attention_by_genre(genres: &[String], alphas: &[Vec<f64>]) -> Result<AttentionHeatmap> {
    if genres.len() != alphas.len() {
        return Err(Error::Data("genre/attention count mismatch".into()));
    }
    if alphas.is_empty() {
        return Err(Error::Data("no attention vectors to aggregate".into()));
    }
    let n = alphas[0].len();
    if alphas.iter().any(|a| a.len() != n) {
        return Err(Error::Data("attention vectors have mixed lengths".into()));
    }
    let mut grouped: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for (genre, alpha) in genres.iter().zip(alphas) {
        let entry = grouped.entry(genre).or_insert_with(|| (vec![0.0; n], 0));
        for (acc, &w) in entry.0.iter_mut().zip(alpha) {
            *acc += w;
        }
        entry.1 += 1;
    }
    let mut out_genres = Vec::new();
    let mut weights = Vec::new();
    for (genre, (sums, count)) in grouped {
        out_genres.push(genre.to_string());
        weights.push(sums.into_iter().map(|s| s / count as f64).collect());
    }
    Ok(AttentionHeatmap { genres: out_genres, weights })
}

/// Names for the 20 last-chunk features in storage order: the ten category
/// means, then the ten category standard deviations.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = ALL_CATEGORIES.iter().map(|c| format!("{c}_mean")).collect();
    names.extend(ALL_CATEGORIES.iter().map(|c| format!("{c}_std")));
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub info_gain: f64,
}

/// Features sorted by information gain, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<RankedFeature>,
}

fn entropy_bits(labels: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let total = labels.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Gain of one continuous feature after equal-frequency discretization.
/// Boundary values are rank quantiles (duplicates merged), so tied values
/// always share a bin.
pub fn info_gain_single(values: &[f64], labels: &[usize], bins: usize) -> f64 {
    debug_assert_eq!(values.len(), labels.len());
    let m = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite feature value"));
    let mut boundaries: Vec<f64> = (1..bins).map(|j| sorted[j * m / bins]).collect();
    boundaries.dedup();

    let bin_of = |x: f64| boundaries.iter().take_while(|&&b| x >= b).count();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); boundaries.len() + 1];
    for (&x, &l) in values.iter().zip(labels) {
        groups[bin_of(x)].push(l);
    }
    let conditional: f64 = groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| g.len() as f64 / m as f64 * entropy_bits(g))
        .sum();
    entropy_bits(labels) - conditional
}

pub const INFO_GAIN_BINS: usize = 10;

/// Rank the 20 last-chunk features by information gain with respect to the
/// success label (10 equal-frequency bins).
pub fn info_gain(last_chunk: &[Vec<f64>], labels: &[usize]) -> Result<FeatureRanking> {
    if last_chunk.len() != labels.len() {
        return Err(Error::Data("feature/label count mismatch".into()));
    }
    if last_chunk.len() < 2 {
        return Err(Error::Data("information gain needs at least two samples".into()));
    }
    let names = feature_names();
    let d = names.len();
    if last_chunk.iter().any(|row| row.len() != d) {
        return Err(Error::Data(format!("expected {d} last-chunk features per book")));
    }
    let mut entries: Vec<RankedFeature> = names
        .into_iter()
        .enumerate()
        .map(|(j, feature)| {
            let column: Vec<f64> = last_chunk.iter().map(|row| row[j]).collect();
            RankedFeature { feature, info_gain: info_gain_single(&column, labels, INFO_GAIN_BINS) }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.info_gain
            .partial_cmp(&a.info_gain)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    Ok(FeatureRanking { entries })
}

/// Welch's two-sample t-test, two-sided.
///
/// Degenerate inputs: both samples constant with equal means gives (0, 1);
/// constant samples with different means give p = 0.
pub fn welch_ttest(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Data("welch test needs at least two values per sample".into()));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let var = |s: &[f64], m: f64| s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (s.len() - 1) as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    let sa = va / a.len() as f64;
    let sb = vb / b.len() as f64;
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(ma - mb), 0.0)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2
        / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    Ok((t, student_t_two_sided(t, dof)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionStatsRow {
    pub category: EmotionCategory,
    pub corpus_mean: f64,
    pub corpus_std: f64,
    pub successful_mean: f64,
    pub successful_std: f64,
    pub unsuccessful_mean: f64,
    pub unsuccessful_std: f64,
    pub t_statistic: f64,
    pub p_value: f64,
}

/// Per-category mean and population standard deviation of the last chunk's
/// mean-emotion feature, for the whole corpus and per success class, with a
/// Welch test between the classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionStatsTable {
    pub rows: Vec<EmotionStatsRow>,
}

fn population_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn emotion_stats(last_chunk: &[Vec<f64>], labels: &[SuccessLabel]) -> Result<EmotionStatsTable> {
    if last_chunk.len() != labels.len() {
        return Err(Error::Data("feature/label count mismatch".into()));
    }
    for class in [SuccessLabel::Successful, SuccessLabel::Unsuccessful] {
        if !labels.contains(&class) {
            return Err(Error::Data(format!("success class {class} has no books")));
        }
    }
    let rows = ALL_CATEGORIES
        .iter()
        .map(|&category| {
            let c = category.index();
            let all: Vec<f64> = last_chunk.iter().map(|row| row[c]).collect();
            let succ: Vec<f64> = last_chunk
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == SuccessLabel::Successful)
                .map(|(row, _)| row[c])
                .collect();
            let fail: Vec<f64> = last_chunk
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == SuccessLabel::Unsuccessful)
                .map(|(row, _)| row[c])
                .collect();
            let (corpus_mean, corpus_std) = population_stats(&all);
            let (successful_mean, successful_std) = population_stats(&succ);
            let (unsuccessful_mean, unsuccessful_std) = population_stats(&fail);
            let (t_statistic, p_value) = welch_ttest(&succ, &fail)?;
            Ok(EmotionStatsRow {
                category,
                corpus_mean,
                corpus_std,
                successful_mean,
                successful_std,
                unsuccessful_mean,
                unsuccessful_std,
                t_statistic,
                p_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmotionStatsTable { rows })
}

/// Per-chunk mean joy for each book: the trajectory the shape clustering
/// works on.
pub fn joy_trajectories(sequences: &[BookEmotionSequence]) -> Vec<Vec<f64>> {
    let joy = EmotionCategory::Joy.index();
    sequences
        .iter()
        .map(|seq| seq.chunks.iter().map(|c| c.mean[joy]).collect())
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Total within-cluster squared distance after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

pub const KMEANS_MAX_ITERS: usize = 300;

/// Lloyd's algorithm with k-means++ seeding from the named seed stream.
/// Empty clusters are reseeded to the point farthest from its centroid.
/// Stops when assignments stabilize or after 300 iterations.
pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64) -> Result<KmeansFit> {
    use rand::Rng;
    let m = vectors.len();
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if m < k {
        return Err(Error::Data(format!("cannot form {k} clusters from {m} points")));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Data("ragged trajectory matrix".into()));
    }

    let mut rng = RngFactory::new(seed).stream(StreamPurpose::Cluster, 0);

    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(vectors[rng.gen_range(0..m)].clone());
    let mut best_dist: Vec<f64> = vectors.iter().map(|v| squared_distance(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = best_dist.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen_range(0.0..total);
            let mut chosen = m - 1;
            for (i, &d) in best_dist.iter().enumerate() {
                if u < d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        } else {
            // All remaining points coincide with a centroid; take the first.
            best_dist.iter().position(|&d| d == 0.0).unwrap_or(0)
        };
        centroids.push(vectors[next].clone());
        for (d, v) in best_dist.iter_mut().zip(vectors) {
            *d = d.min(squared_distance(v, centroids.last().unwrap()));
        }
    }

    let assign = |centroids: &[Vec<f64>]| -> Vec<usize> {
        vectors
            .iter()
            .map(|v| {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (c, centroid) in centroids.iter().enumerate() {
                    let d = squared_distance(v, centroid);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };

    let mut assignments = assign(&centroids);
    let mut inertia_trace = Vec::new();
    for _ in 0..KMEANS_MAX_ITERS {
        // Reseed empty clusters to the farthest point in a non-singleton
        // cluster before computing means.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        for cluster in 0..k {
            if counts[cluster] > 0 {
                continue;
            }
            let mut farthest: Option<(usize, f64)> = None;
            for (i, v) in vectors.iter().enumerate() {
                if counts[assignments[i]] <= 1 {
                    continue;
                }
                let d = squared_distance(v, &centroids[assignments[i]]);
                if farthest.is_none_or(|(_, fd)| d > fd) {
                    farthest = Some((i, d));
                }
            }
            if let Some((i, _)) = farthest {
                counts[assignments[i]] -= 1;
                assignments[i] = cluster;
                counts[cluster] += 1;
            }
        }

        // Means.
        for c in centroids.iter_mut() {
            c.iter_mut().for_each(|x| *x = 0.0);
        }
        for (v, &a) in vectors.iter().zip(&assignments) {
            for (ci, &vi) in centroids[a].iter_mut().zip(v) {
                *ci += vi;
            }
        }
        for (c, &count) in centroids.iter_mut().zip(&counts) {
            if count > 0 {
                c.iter_mut().for_each(|x| *x /= count as f64);
            }
        }

        let inertia: f64 = vectors
            .iter()
            .zip(&assignments)
            .map(|(v, &a)| squared_distance(v, &centroids[a]))
            .sum();
        inertia_trace.push(inertia);

        let next = assign(&centroids);
        if next == assignments {
            break;
        }
        assignments = next;
    }

    Ok(KmeansFit { assignments, centroids, inertia_trace })
}

/// Centered moving average with edge truncation: windows shrink near the
/// boundaries instead of padding.
pub fn smooth_centroid(centroid: &[f64], window: usize) -> Result<Vec<f64>> {
    if window.is_multiple_of(2) {
        return Err(Error::Config(format!("smoothing window must be odd, got {window}")));
    }
    if window > centroid.len() {
        return Err(Error::Config(format!(
            "smoothing window {window} exceeds trajectory length {}",
            centroid.len()
        )));
    }
    let half = window / 2;
    Ok((0..centroid.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(centroid.len());
            centroid[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect())
}

/// Heuristic "fall to rise" flag: the minimum sits in the middle third and
/// both endpoints exceed it by at least a quarter of the range.
pub fn fall_to_rise_heuristic(centroid: &[f64]) -> bool {
    let n = centroid.len();
    if n < 3 {
        return false;
    }
    let (min_idx, &min) = centroid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    let max = centroid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return false;
    }
    let in_middle = min_idx * 3 >= n && min_idx * 3 < 2 * n;
    in_middle
        && centroid[0] - min >= 0.25 * range
        && centroid[n - 1] - min >= 0.25 * range
}

pub const MIN_CLUSTER_BOOKS: usize = 20;
pub const SMOOTHING_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub book_id: String,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainedCluster {
    pub cluster: usize,
    pub members: usize,
    pub successful: usize,
    pub unsuccessful: usize,
    pub smoothed_centroid: Vec<f64>,
    pub fall_to_rise_heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub assignments: Vec<ClusterAssignment>,
    pub centroids: Vec<Vec<f64>>,
    pub retained: Vec<RetainedCluster>,
}

/// Cluster per-book trajectories and keep clusters with at least
/// `min_members` books, with smoothed centroids and class counts. Books are
/// processed in id order, so the result does not depend on input order.
pub fn cluster_books(
    ids: &[String],
    labels: &[SuccessLabel],
    trajectories: &[Vec<f64>],
    k: usize,
    seed: u64,
    min_members: usize,
    window: usize,
) -> Result<ClusterResult> {
    if ids.len() != trajectories.len() || ids.len() != labels.len() {
        return Err(Error::Data("id/label/trajectory count mismatch".into()));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    let sorted_vectors: Vec<Vec<f64>> = order.iter().map(|&i| trajectories[i].clone()).collect();
    let fit = kmeans(&sorted_vectors, k, seed)?;

    let assignments: Vec<ClusterAssignment> = order
        .iter()
        .zip(&fit.assignments)
        .map(|(&i, &cluster)| ClusterAssignment { book_id: ids[i].clone(), cluster })
        .collect();

    let mut members = vec![0usize; k];
    let mut successful = vec![0usize; k];
    for (&i, &cluster) in order.iter().zip(&fit.assignments) {
        members[cluster] += 1;
        if labels[i] == SuccessLabel::Successful {
            successful[cluster] += 1;
        }
    }
    let retained = (0..k)
        .filter(|&c| members[c] >= min_members)
        .map(|c| {
            let smoothed = smooth_centroid(&fit.centroids[c], window)?;
            Ok(RetainedCluster {
                cluster: c,
                members: members[c],
                successful: successful[c],
                unsuccessful: members[c] - successful[c],
                fall_to_rise_heuristic: fall_to_rise_heuristic(&smoothed),
                smoothed_centroid: smoothed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ClusterResult { assignments, centroids: fit.centroids, retained })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::NUM_CATEGORIES;

    #[test]
    fn heatmap_single_book_per_genre() {
        let genres = vec!["Poetry".to_string(), "Fiction".to_string()];
        let alphas = vec![vec![0.2, 0.8], vec![0.7, 0.3]];
        let map = attention_by_genre(&genres, &alphas).unwrap();
        assert_eq!(map.genres, vec!["Fiction".to_string(), "Poetry".to_string()]);
        assert_eq!(map.weights[0], vec![0.7, 0.3]);
        assert_eq!(map.weights[1], vec![0.2, 0.8]);
    }

    #[test]
    fn heatmap_rows_sum_to_one() {
        let genres = vec!["A".to_string(), "A".to_string(), "B".to_string()];
        let alphas = vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![0.25, 0.75]];
        let map = attention_by_genre(&genres, &alphas).unwrap();
        for row in &map.weights {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&w| (0.0..=1.0).contains(&w)));
        }
    }

    #[test]
    fn info_gain_hand_example() {
        // feature [1,2,3,4], labels [0,0,1,1], 2 bins -> gain = 1 bit
        let gain = info_gain_single(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1], 2);
        assert!((gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn info_gain_perfect_and_constant_features() {
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i % 3 == 0)).collect();
        let feature: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let gain = info_gain_single(&feature, &labels, INFO_GAIN_BINS);
        assert!((gain - entropy_bits(&labels)).abs() < 1e-12);

        let constant = vec![5.0; labels.len()];
        assert_eq!(info_gain_single(&constant, &labels, INFO_GAIN_BINS), 0.0);
    }

    #[test]
    fn info_gain_is_nonnegative_and_bounded() {
        use rand::Rng;
        let mut rng = RngFactory::new(8).stream(StreamPurpose::Cluster, 5);
        let labels: Vec<usize> = (0..60).map(|_| rng.gen_range(0..2)).collect();
        let h = entropy_bits(&labels);
        for _ in 0..20 {
            let values: Vec<f64> = (0..60).map(|_| rng.gen_range(0.0..2.0)).collect();
            let gain = info_gain_single(&values, &labels, INFO_GAIN_BINS);
            assert!(gain >= -1e-12, "gain {gain}");
            assert!(gain <= h + 1e-12, "gain {gain} above H {h}");
        }
    }

    #[test]
    fn info_gain_ranking_has_all_twenty_features() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| (0..20).map(|j| ((i * j) % 7) as f64).collect())
            .collect();
        let labels: Vec<usize> = (0..30).map(|i| i % 2).collect();
        let ranking = info_gain(&rows, &labels).unwrap();
        assert_eq!(ranking.entries.len(), 20);
        for pair in ranking.entries.windows(2) {
            assert!(pair[0].info_gain >= pair[1].info_gain);
        }
    }

    #[test]
    fn welch_identical_samples() {
        let a = [1.0, 2.0, 3.0];
        let (t, p) = welch_ttest(&a, &a).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn welch_degenerate_constant_samples() {
        let (t, p) = welch_ttest(&[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(t.is_infinite() && t < 0.0);
        assert_eq!(p, 0.0);
        let (t, p) = welch_ttest(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!((t, p), (0.0, 1.0));
    }

    #[test]
    fn welch_hand_example() {
        // a = 1..5, b = 2..6: t = -1, dof = 8, p ~ 0.3466
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 3.0, 4.0, 5.0, 6.0];
        let (t, p) = welch_ttest(&a, &b).unwrap();
        assert!((t + 1.0).abs() < 1e-12);
        assert!((p - 0.34659350708733413).abs() < 1e-10);
    }

    #[test]
    fn welch_needs_two_per_sample() {
        assert!(welch_ttest(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn emotion_stats_identical_groups() {
        // Same feature values in both classes: t = 0, p = 1 everywhere.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..6 {
            let row: Vec<f64> = (0..20).map(|j| (i + j) as f64 * 0.1).collect();
            rows.push(row.clone());
            labels.push(SuccessLabel::Successful);
            rows.push(row);
            labels.push(SuccessLabel::Unsuccessful);
        }
        let table = emotion_stats(&rows, &labels).unwrap();
        assert_eq!(table.rows.len(), NUM_CATEGORIES);
        for row in &table.rows {
            assert_eq!(row.t_statistic, 0.0);
            assert_eq!(row.p_value, 1.0);
            assert!((row.successful_mean - row.unsuccessful_mean).abs() < 1e-15);
            assert!(row.corpus_std >= 0.0);
        }
    }

    #[test]
    fn emotion_stats_requires_both_classes() {
        let rows = vec![vec![0.0; 20]; 3];
        let labels = vec![SuccessLabel::Successful; 3];
        assert!(emotion_stats(&rows, &labels).is_err());
    }

    fn blob(center: &[f64], count: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
        use rand::Rng;
        let mut rng = RngFactory::new(seed).stream(StreamPurpose::Cluster, 1);
        (0..count)
            .map(|_| center.iter().map(|&c| c + rng.gen_range(-spread..spread)).collect())
            .collect()
    }

    #[test]
    fn kmeans_k_equals_m_gives_zero_inertia() {
        let vectors = blob(&[0.0, 0.0], 6, 2.0, 3);
        let fit = kmeans(&vectors, 6, 1).unwrap();
        assert!(fit.inertia_trace.last().unwrap() < &1e-20);
        let mut seen = fit.assignments.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn kmeans_recovers_two_blobs() {
        let mut vectors = blob(&[5.0, 5.0], 30, 0.4, 7);
        vectors.extend(blob(&[-5.0, -5.0], 30, 0.4, 8));
        let fit = kmeans(&vectors, 2, 2).unwrap();
        let mean_of = |which: std::ops::Range<usize>| {
            let mut m = [0.0; 2];
            for i in which.clone() {
                for (mi, vi) in m.iter_mut().zip(&vectors[i]) {
                    *mi += vi;
                }
            }
            m.iter().map(|v| v / which.len() as f64).collect::<Vec<f64>>()
        };
        let blob_a = mean_of(0..30);
        let blob_b = mean_of(30..60);
        let matches = |centroid: &[f64], target: &[f64]| squared_distance(centroid, target) < 1e-12;
        assert!(
            (matches(&fit.centroids[0], &blob_a) && matches(&fit.centroids[1], &blob_b))
                || (matches(&fit.centroids[0], &blob_b) && matches(&fit.centroids[1], &blob_a)),
            "centroids {:?} do not match blob means {:?} / {:?}",
            fit.centroids,
            blob_a,
            blob_b
        );
    }

    #[test]
    fn kmeans_inertia_is_monotone() {
        let mut vectors = blob(&[1.0, 0.0, -1.0], 40, 1.5, 11);
        vectors.extend(blob(&[-2.0, 3.0, 0.5], 40, 1.5, 12));
        let fit = kmeans(&vectors, 7, 5).unwrap();
        for w in fit.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "inertia rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn kmeans_too_few_points_errors() {
        let vectors = blob(&[0.0], 3, 1.0, 1);
        assert!(kmeans(&vectors, 4, 1).is_err());
    }

    #[test]
    fn cluster_books_is_input_order_invariant_and_filters_small_clusters() {
        let mut trajectories = blob(&[4.0, 4.0, 4.0, 4.0, 4.0], 25, 0.3, 21);
        trajectories.extend(blob(&[-4.0, -4.0, -4.0, -4.0, -4.0], 25, 0.3, 22));
        trajectories.extend(blob(&[0.0, 9.0, 0.0, 9.0, 0.0], 3, 0.3, 23));
        let ids: Vec<String> = (0..53).map(|i| format!("b{i:03}")).collect();
        let labels: Vec<SuccessLabel> = (0..53)
            .map(|i| if i % 3 == 0 { SuccessLabel::Unsuccessful } else { SuccessLabel::Successful })
            .collect();

        let forward = cluster_books(&ids, &labels, &trajectories, 3, 9, 20, 3).unwrap();

        let mut reversed_ids = ids.clone();
        reversed_ids.reverse();
        let mut reversed_labels = labels.clone();
        reversed_labels.reverse();
        let mut reversed_traj = trajectories.clone();
        reversed_traj.reverse();
        let backward = cluster_books(&reversed_ids, &reversed_labels, &reversed_traj, 3, 9, 20, 3).unwrap();
        assert_eq!(forward.assignments, backward.assignments);

        // brute-force member counts against the retained filter
        let mut counts = std::collections::HashMap::new();
        for a in &forward.assignments {
            *counts.entry(a.cluster).or_insert(0usize) += 1;
        }
        let expected: Vec<usize> = {
            let mut v: Vec<usize> = counts
                .iter()
                .filter(|(_, &c)| c >= 20)
                .map(|(&k, _)| k)
                .collect();
            v.sort();
            v
        };
        let got: Vec<usize> = forward.retained.iter().map(|r| r.cluster).collect();
        assert_eq!(got, expected);
        for r in &forward.retained {
            assert_eq!(r.successful + r.unsuccessful, r.members);
        }
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth_centroid(&[3.0, 3.0, 3.0, 3.0], 3).unwrap(), vec![3.0; 4]);
        assert_eq!(
            smooth_centroid(&[0.0, 0.0, 3.0, 0.0, 0.0], 3).unwrap(),
            vec![0.0, 1.0, 1.0, 1.0, 0.0]
        );
        let v = [0.4, 0.2, 0.9, 0.5];
        assert_eq!(smooth_centroid(&v, 1).unwrap(), v.to_vec());
        assert!(smooth_centroid(&v, 2).is_err());
        assert!(smooth_centroid(&v, 5).is_err());
    }

    #[test]
    fn smoothing_preserves_interior_mean_for_exact_windows() {
        // On the interior (away from truncated edges) a window-3 average of
        // a linear ramp reproduces the ramp.
        let v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let s = smooth_centroid(&v, 3).unwrap();
        for i in 1..9 {
            assert!((s[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fall_to_rise_flags_a_dip() {
        let dip: Vec<f64> = (0..50)
            .map(|i| {
                let x = i as f64 / 49.0;
                (x - 0.5) * (x - 0.5) * 4.0
            })
            .collect();
        assert!(fall_to_rise_heuristic(&dip));
        let fall: Vec<f64> = (0..50).map(|i| 1.0 - i as f64 / 49.0).collect();
        assert!(!fall_to_rise_heuristic(&fall));
        assert!(!fall_to_rise_heuristic(&[1.0; 50]));
    }
}
