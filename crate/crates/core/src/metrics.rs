//! KS and AUC for binary scores.
//!
//! Tied scores form one block in the ROC sweep and count half in AUC, so
//! both metrics are independent of how ties are ordered.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::loss::check_labels;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Rows with score ≥ threshold are predicted positive.
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ks: f64,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
}

impl MetricReport {
    /// `(ks, auc)` as percentages with two decimals, as printed in reports.
    pub fn percent_strings(&self) -> (String, String) {
        (
            format!("{:.2}", self.ks * 100.0),
            format!("{:.2}", self.auc * 100.0),
        )
    }
}

/// Per tie block: (score, positives, negatives), ordered by score descending.
fn tie_blocks(scores: &[f64], labels: &[f64]) -> Result<(Vec<(f64, u64, u64)>, u64, u64)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Domain(format!("score {i} is not finite")));
    }
    let pos = labels.iter().filter(|&&y| y == 1.0).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "need both classes, got {pos} positives and {neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // descending score, stable on original index
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut blocks: Vec<(f64, u64, u64)> = Vec::new();
    for i in order {
        let s = scores[i];
        let is_pos = labels[i] == 1.0;
        match blocks.last_mut() {
            // -0.0 and 0.0 compare equal and share a block
            Some(last) if last.0 == s => {
                if is_pos {
                    last.1 += 1;
                } else {
                    last.2 += 1;
                }
            }
            _ => blocks.push((s, is_pos as u64, (!is_pos) as u64)),
        }
    }
    Ok((blocks, pos, neg))
}

/// Cumulative `(tpr, fpr)` after each block of tied scores, highest first.
/// The implicit origin `(0, 0)` is not included; the last point is `(1, 1)`.
pub fn roc_sweep(scores: &[f64], labels: &[f64]) -> Result<Vec<RocPoint>> {
    let (blocks, pos, neg) = tie_blocks(scores, labels)?;
    let (mut tp, mut fp) = (0u64, 0u64);
    Ok(blocks
        .into_iter()
        .map(|(s, p, n)| {
            tp += p;
            fp += n;
            RocPoint {
                threshold: s,
                tpr: tp as f64 / pos as f64,
                fpr: fp as f64 / neg as f64,
            }
        })
        .collect())
}

fn ks_from_roc(roc: &[RocPoint]) -> f64 {
    roc.iter().map(|p| p.tpr - p.fpr).fold(0.0, f64::max)
}

/// `max(TPR − FPR)` over all thresholds.
pub fn ks(scores: &[f64], labels: &[f64]) -> Result<f64> {
    Ok(ks_from_roc(&roc_sweep(scores, labels)?))
}

fn auc_from_blocks(blocks: &[(f64, u64, u64)], pos: u64, neg: u64) -> f64 {
    // twice the Mann–Whitney U, kept in integers until the final division
    let mut neg_below: u64 = neg;
    let mut twice_u: u128 = 0;
    for &(_, p, n) in blocks {
        neg_below -= n;
        twice_u += 2 * p as u128 * neg_below as u128 + p as u128 * n as u128;
    }
    twice_u as f64 / (2.0 * pos as f64 * neg as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (blocks, pos, neg) = tie_blocks(scores, labels)?;
    Ok(auc_from_blocks(&blocks, pos, neg))
}

/// Trapezoidal area under the tie-blocked ROC curve. Equals [`auc`] up to
/// rounding.
pub fn trapezoid_auc(roc: &[RocPoint]) -> f64 {
    let mut area = 0.0;
    let (mut x0, mut y0) = (0.0, 0.0);
    for p in roc {
        area += (p.fpr - x0) * (p.tpr + y0) / 2.0;
        x0 = p.fpr;
        y0 = p.tpr;
    }
    area
}

pub fn evaluate(scores: &[f64], labels: &[f64]) -> Result<MetricReport> {
    let (blocks, pos, neg) = tie_blocks(scores, labels)?;
    let auc = auc_from_blocks(&blocks, pos, neg);
    let (mut tp, mut fp) = (0u64, 0u64);
    let roc: Vec<RocPoint> = blocks
        .iter()
        .map(|&(s, p, n)| {
            tp += p;
            fp += n;
            RocPoint {
                threshold: s,
                tpr: tp as f64 / pos as f64,
                fpr: fp as f64 / neg as f64,
            }
        })
        .collect();
    Ok(MetricReport {
        ks: ks_from_roc(&roc),
        auc,
        roc,
    })
}
