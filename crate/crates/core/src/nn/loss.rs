use super::activation::sigmoid;
use crate::batch::Batch;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 − PROB_EPS]` before the log.
pub const PROB_EPS: f64 = 1e-7;

pub(crate) fn check_labels(labels: &[f64]) -> Result<()> {
    match labels.iter().position(|&y| y != 0.0 && y != 1.0) {
        Some(index) => Err(Error::InvalidLabel {
            index,
            value: labels[index],
        }),
        None => Ok(()),
    }
}

/// Mean binary cross-entropy of probabilities against 0/1 labels, with the
/// gradient w.r.t. the (unclamped) probabilities.
pub fn bce_loss(probs: &Batch, labels: &Batch) -> Result<(f64, Batch)> {
    if probs.shape() != labels.shape() {
        return Err(Error::Shape(format!(
            "probs {:?} vs labels {:?}",
            probs.shape(),
            labels.shape()
        )));
    }
    check_labels(labels.data())?;
    let n = probs.data().len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(probs.data().len());
    for (&p_raw, &y) in probs.data().iter().zip(labels.data()) {
        let p = p_raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        // clamp has zero slope outside the open interval
        let g = if p_raw > PROB_EPS && p_raw < 1.0 - PROB_EPS {
            (-y / p + (1.0 - y) / (1.0 - p)) / n
        } else {
            0.0
        };
        grad.push(g);
    }
    Ok((loss / n, Batch::from_raw(probs.rows(), probs.cols(), grad)))
}

/// Binary cross-entropy on logits `z` (probabilities `σ(z)`), computed in the
/// numerically stable form. Gradient is w.r.t. the logits: `(σ(z) − y)/n`.
pub fn bce_with_logits(logits: &[f64], labels: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logits vs {} labels",
            logits.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    let n = logits.len().max(1) as f64;
    let mut loss = 0.0;
    let grad = logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| {
            loss += z.max(0.0) - y * z + (-z.abs()).exp().ln_1p();
            (sigmoid(z) - y) / n
        })
        .collect();
    Ok((loss / n, grad))
}
