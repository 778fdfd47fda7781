//! Test-side oracles, written independently of the library code paths.
#![allow(dead_code)]

use rand::Rng;
use tkgmlp::nn::Parameters;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;
/// Gradients smaller than this are compared absolutely: central differences
/// cannot resolve them relative to the loss scale.
pub const GRAD_FLOOR: f64 = 1e-6;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

/// Central-difference check of every parameter group of `model`. At most
/// `per_group` coordinates are probed in each group (all when the group is
/// smaller). `analytic` holds the gradients computed by backprop in the same
/// order as `params()`. Returns the worst relative error.
pub fn check_params<M, R>(
    model: &mut M,
    analytic: &[Vec<f64>],
    per_group: usize,
    rng: &mut R,
    mut loss: impl FnMut(&mut M) -> f64,
) -> f64
where
    M: Parameters,
    R: Rng,
{
    let sizes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    assert_eq!(sizes.len(), analytic.len());
    let mut worst: f64 = 0.0;
    for (g, &len) in sizes.iter().enumerate() {
        let idx: Vec<usize> = if len <= per_group {
            (0..len).collect()
        } else {
            (0..per_group).map(|_| rng.random_range(0..len)).collect()
        };
        for i in idx {
            let orig = model.params()[g].value[i];
            model.params_mut()[g].value[i] = orig + FD_STEP;
            let up = loss(model);
            model.params_mut()[g].value[i] = orig - FD_STEP;
            let down = loss(model);
            model.params_mut()[g].value[i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let e = rel_err(analytic[g][i], numeric);
            if e > worst {
                worst = e;
            }
        }
    }
    worst
}

/// Central-difference check of an input gradient.
pub fn check_input(
    x: &[f64],
    analytic: &[f64],
    mut loss: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let up = loss(&probe);
        probe[i] = x[i] - FD_STEP;
        let down = loss(&probe);
        probe[i] = x[i];
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

pub fn grads<M: Parameters>(m: &M) -> Vec<Vec<f64>> {
    m.params().iter().map(|p| p.grad.clone()).collect()
}

/// KS by trying every distinct score as a threshold (predict positive when
/// score ≥ threshold).
pub fn brute_ks(scores: &[f64], labels: &[f64]) -> f64 {
    let pos = labels.iter().filter(|&&y| y == 1.0).count() as u64;
    let neg = labels.len() as u64 - pos;
    let mut best: f64 = 0.0;
    for &t in scores {
        let mut tp = 0u64;
        let mut fp = 0u64;
        for (&s, &y) in scores.iter().zip(labels) {
            if s >= t {
                if y == 1.0 {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        best = best.max(tp as f64 / pos as f64 - fp as f64 / neg as f64);
    }
    best
}

/// AUC by enumerating every positive/negative pair, ties counting one half.
pub fn brute_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let mut twice: u128 = 0;
    let (mut pos, mut neg) = (0u64, 0u64);
    for (i, &yi) in labels.iter().enumerate() {
        if yi == 1.0 {
            pos += 1;
        } else {
            neg += 1;
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj == 0.0 {
                if scores[i] > scores[j] {
                    twice += 2;
                } else if scores[i] == scores[j] {
                    twice += 1;
                }
            }
        }
    }
    twice as f64 / (2.0 * pos as f64 * neg as f64)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `n` evenly spaced points in (0, 1): the reference uniform sample.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Allowed deviation of QLE-encoded training values from uniform: one bin
/// width of discretization slack on each side plus three sampling standard
/// errors (`1/√N`).
pub fn uniformity_bound(n_bins: usize, n_samples: usize) -> f64 {
    2.0 / n_bins as f64 + 3.0 / (n_samples as f64).sqrt()
}
