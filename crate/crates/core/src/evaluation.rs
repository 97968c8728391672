//! Classification reports (weighted F1, per-class metrics, confusion
//! matrices) and McNemar's paired significance test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::chi_square_sf_1dof;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Full evaluation of one classifier on one test set. Predictions stay
/// aligned to the test ids so reports can be compared pairwise later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    /// confusion[i][j] = count of items with true class i predicted as j.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub weighted_f1: f64,
    pub ids: Vec<String>,
    pub y_true: Vec<usize>,
    pub y_pred: Vec<usize>,
}

impl EvalReport {
    pub fn from_predictions(
        class_names: Vec<String>,
        ids: Vec<String>,
        y_true: Vec<usize>,
        y_pred: Vec<usize>,
    ) -> Result<Self> {
        if y_true.len() != y_pred.len() || y_true.len() != ids.len() {
            return Err(Error::Data(format!(
                "prediction lengths mismatch: {} ids, {} true, {} predicted",
                ids.len(),
                y_true.len(),
                y_pred.len()
            )));
        }
        if y_true.is_empty() {
            return Err(Error::Data("cannot evaluate an empty test set".into()));
        }
        let k = class_names.len();
        if y_true.iter().chain(&y_pred).any(|&c| c >= k) {
            return Err(Error::Data(format!("class index out of range for {k} classes")));
        }

        let mut confusion = vec![vec![0usize; k]; k];
        for (&t, &p) in y_true.iter().zip(&y_pred) {
            confusion[t][p] += 1;
        }
        let per_class: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let tp = confusion[c][c];
                let support: usize = confusion[c].iter().sum();
                let predicted: usize = (0..k).map(|t| confusion[t][c]).sum();
                let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
                let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics { precision, recall, f1, support }
            })
            .collect();
        let total = y_true.len() as f64;
        let weighted_f1 = per_class
            .iter()
            .map(|m| m.support as f64 / total * m.f1)
            .sum();
        Ok(Self { class_names, confusion, per_class, weighted_f1, ids, y_true, y_pred })
    }
}

/// Support-weighted mean of per-class F1 scores.
pub fn weighted_f1(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Data(format!(
            "length mismatch: {} true vs {} predicted",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Data("cannot score an empty prediction vector".into()));
    }
    let k = y_true.iter().chain(y_pred).max().unwrap() + 1;
    let names = (0..k).map(|c| c.to_string()).collect();
    let ids = (0..y_true.len()).map(|i| i.to_string()).collect();
    Ok(EvalReport::from_predictions(names, ids, y_true.to_vec(), y_pred.to_vec())?.weighted_f1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// Items classifier A got right and B got wrong.
    pub b: usize,
    /// Items classifier A got wrong and B got right.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Continuity-corrected McNemar test on the discordant pairs:
/// statistic = (|b - c| - 1)^2 / (b + c), chi-square with 1 dof.
/// With no discordant pairs the statistic is 0 and p = 1.
pub fn mcnemar(preds_a: &[usize], preds_b: &[usize], y_true: &[usize]) -> Result<McNemarResult> {
    if preds_a.len() != y_true.len() || preds_b.len() != y_true.len() {
        return Err(Error::Data(format!(
            "length mismatch: {} vs {} predictions for {} labels",
            preds_a.len(),
            preds_b.len(),
            y_true.len()
        )));
    }
    let mut b = 0usize;
    let mut c = 0usize;
    for i in 0..y_true.len() {
        let a_right = preds_a[i] == y_true[i];
        let b_right = preds_b[i] == y_true[i];
        match (a_right, b_right) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    let (statistic, p_value) = if b + c == 0 {
        (0.0, 1.0)
    } else {
        let diff = (b as f64 - c as f64).abs() - 1.0;
        let statistic = diff * diff / (b + c) as f64;
        (statistic, chi_square_sf_1dof(statistic))
    };
    Ok(McNemarResult { b, c, statistic, p_value })
}
