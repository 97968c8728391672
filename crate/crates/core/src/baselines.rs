//! Classical baselines: majority-class predictor and a linear SVM over
//! flattened chunk features.
//!
//! The SVM minimizes 0.5*||w||^2 + C * sum_i hinge(y_i (w.x_i + b)) by
//! deterministic full-batch projected subgradient descent with a fixed
//! iteration budget, keeping the iterate with the lowest objective. Features
//! are standardized to zero mean and unit variance first; a zero-variance
//! column gets scale 1 so standardization never divides by zero.

use serde::{Deserialize, Serialize};

use crate::corpus::SuccessLabel;
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::rng::{RngFactory, StreamPurpose};

/// Canonical class order for success reports: successful first.
pub fn success_class_names() -> Vec<String> {
    vec!["successful".into(), "unsuccessful".into()]
}

pub fn success_class_index(label: SuccessLabel) -> usize {
    match label {
        SuccessLabel::Successful => 0,
        SuccessLabel::Unsuccessful => 1,
    }
}

/// Predict the most frequent training class for every test instance; ties
/// break toward Successful.
pub fn majority_baseline(
    train_labels: &[SuccessLabel],
    test_ids: &[String],
    test_labels: &[SuccessLabel],
) -> Result<EvalReport> {
    if train_labels.is_empty() || test_labels.is_empty() {
        return Err(Error::Data("majority baseline needs non-empty train and test labels".into()));
    }
    let successes = train_labels.iter().filter(|&&l| l == SuccessLabel::Successful).count();
    let majority = if 2 * successes >= train_labels.len() {
        SuccessLabel::Successful
    } else {
        SuccessLabel::Unsuccessful
    };
    let y_true: Vec<usize> = test_labels.iter().map(|&l| success_class_index(l)).collect();
    let y_pred = vec![success_class_index(majority); test_labels.len()];
    EvalReport::from_predictions(success_class_names(), test_ids.to_vec(), y_true, y_pred)
}

pub const SVM_ITERATIONS: usize = 2000;

/// Linear SVM with the standardization transform baked in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
}

impl LinearSvmModel {
    /// Decision value for one raw (unstandardized) feature vector.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut score = self.bias;
        for ((&w, &m), (&s, &xi)) in self
            .weights
            .iter()
            .zip(&self.feature_means)
            .zip(self.feature_scales.iter().zip(x))
        {
            score += w * (xi - m) / s;
        }
        score
    }

    /// Positive class (label +1) when the decision value is >= 0.
    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.decision(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn standardize_stats(features: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = features.len() as f64;
    let d = features[0].len();
    let mut means = vec![0.0; d];
    for x in features {
        for (mean, &v) in means.iter_mut().zip(x) {
            *mean += v;
        }
    }
    for mean in means.iter_mut() {
        *mean /= m;
    }
    let mut scales = vec![0.0; d];
    for x in features {
        for ((s, &v), &mean) in scales.iter_mut().zip(x).zip(&means) {
            let dlt = v - mean;
            *s += dlt * dlt;
        }
    }
    for s in scales.iter_mut() {
        *s = (*s / m).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    (means, scales)
}

/// Train on labels in {-1, +1}. Both classes must be present.
pub fn svm_train(features: &[Vec<f64>], labels: &[f64], c: f64) -> Result<LinearSvmModel> {
    if features.len() != labels.len() {
        return Err(Error::Data("feature/label count mismatch".into()));
    }
    if features.len() < 2 {
        return Err(Error::Data("SVM needs at least two training points".into()));
    }
    if labels.iter().all(|&y| y > 0.0) || labels.iter().all(|&y| y < 0.0) {
        return Err(Error::Data("SVM training set has a single class".into()));
    }
    let d = features[0].len();
    if features.iter().any(|x| x.len() != d) {
        return Err(Error::Data("ragged feature matrix".into()));
    }

    let (means, scales) = standardize_stats(features);
    let standardized: Vec<Vec<f64>> = features
        .iter()
        .map(|x| {
            x.iter()
                .zip(&means)
                .zip(&scales)
                .map(|((&v, &m), &s)| (v - m) / s)
                .collect()
        })
        .collect();

    let objective = |w: &[f64], b: f64| -> f64 {
        let reg: f64 = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        let hinge: f64 = standardized
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let margin = y * (crate::linalg::dot(w, x) + b);
                (1.0 - margin).max(0.0)
            })
            .sum();
        reg + c * hinge
    };

    // ||w*|| <= sqrt(2 C m) since the objective at w = 0 is C * m.
    let radius = (2.0 * c * features.len() as f64).sqrt();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut best_w = w.clone();
    let mut best_b = b;
    let mut best_obj = objective(&w, b);

    for t in 1..=SVM_ITERATIONS {
        let eta = 1.0 / t as f64;
        // Subgradient: w - C * sum_{violators} y_i x_i (bias unregularized).
        let mut gw = w.clone();
        let mut gb = 0.0;
        for (x, &y) in standardized.iter().zip(labels) {
            let margin = y * (crate::linalg::dot(&w, x) + b);
            if margin < 1.0 {
                for (g, &xi) in gw.iter_mut().zip(x) {
                    *g -= c * y * xi;
                }
                gb -= c * y;
            }
        }
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= eta * gi;
        }
        b -= eta * gb;

        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            let shrink = radius / norm;
            for wi in w.iter_mut() {
                *wi *= shrink;
            }
        }

        let obj = objective(&w, b);
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from_slice(&w);
            best_b = b;
        }
    }

    Ok(LinearSvmModel {
        weights: best_w,
        bias: best_b,
        c,
        feature_means: means,
        feature_scales: scales,
    })
}

pub const C_GRID: [f64; 9] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];

/// Stratified fold assignment: per class, shuffle then deal round-robin.
fn stratified_folds(labels: &[f64], folds: usize, seed: u64) -> Result<Vec<usize>> {
    use rand::seq::SliceRandom;
    let factory = RngFactory::new(seed);
    let mut assignment = vec![0usize; labels.len()];
    for (class_idx, sign) in [1.0f64, -1.0].into_iter().enumerate() {
        let mut indices: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == sign)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < folds {
            return Err(Error::Data(format!(
                "stratified {folds}-fold CV needs at least {folds} items per class, got {}",
                indices.len()
            )));
        }
        let mut rng = factory.stream(StreamPurpose::Folds, class_idx as u64);
        indices.shuffle(&mut rng);
        for (k, &i) in indices.iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

/// Pick the C maximizing mean cross-validated weighted F1; ties go to the
/// smaller C.
pub fn svm_select_c(
    features: &[Vec<f64>],
    labels: &[f64],
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Config("empty C grid".into()));
    }
    let assignment = stratified_folds(labels, folds, seed)?;
    let mut best_c = grid[0];
    let mut best_score = f64::NEG_INFINITY;
    for &c in grid {
        let mut total = 0.0;
        for fold in 0..folds {
            let (mut train_x, mut train_y) = (Vec::new(), Vec::new());
            let (mut val_x, mut val_y) = (Vec::new(), Vec::new());
            for i in 0..labels.len() {
                if assignment[i] == fold {
                    val_x.push(features[i].clone());
                    val_y.push(labels[i]);
                } else {
                    train_x.push(features[i].clone());
                    train_y.push(labels[i]);
                }
            }
            let model = svm_train(&train_x, &train_y, c)?;
            let y_true: Vec<usize> = val_y.iter().map(|&y| usize::from(y < 0.0)).collect();
            let y_pred: Vec<usize> = val_x.iter().map(|x| usize::from(model.predict(x) < 0.0)).collect();
            total += crate::evaluation::weighted_f1(&y_true, &y_pred)?;
        }
        let mean = total / folds as f64;
        if mean > best_score {
            best_score = mean;
            best_c = c;
        }
    }
    Ok(best_c)
}

/// One-vs-rest multiclass SVM for the genre task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneVsRestSvm {
    pub class_names: Vec<String>,
    pub models: Vec<LinearSvmModel>,
}

impl OneVsRestSvm {
    pub fn predict(&self, x: &[f64]) -> usize {
        self.models
            .iter()
            .enumerate()
            .map(|(i, m)| (i, m.decision(x)))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap()
    }
}

/// Train one binary SVM per class (that class vs the rest) at a shared C.
pub fn one_vs_rest_train(
    features: &[Vec<f64>],
    class_ids: &[usize],
    class_names: Vec<String>,
    c: f64,
) -> Result<OneVsRestSvm> {
    let mut models = Vec::with_capacity(class_names.len());
    for class in 0..class_names.len() {
        let labels: Vec<f64> = class_ids
            .iter()
            .map(|&g| if g == class { 1.0 } else { -1.0 })
            .collect();
        models.push(svm_train(features, &labels, c)?);
    }
    Ok(OneVsRestSvm { class_names, models })
}
