//! End-to-end acceptance suite. Runs every criterion in order and prints one
//! `PASS` / `FAIL` line each. Hard failures make the process exit non-zero;
//! the encoder comparison on the zero-inflated benchmark is advisory and
//! reports `FAIL (soft)` without failing the run.
//!
//! `TKGMLP_ACCEPTANCE_SKIP=5,6` skips the long training criteria.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{brute_auc, brute_ks, check_params, grads, two_sample_ks, uniform_grid, uniformity_bound, GRAD_TOL};
use rand::Rng;
use tkgmlp::batch::{Batch, Mode};
use tkgmlp::data::{bayes_metrics, chronological_split, synth_generate, ColumnFamily, SyntheticTaskSpec};
use tkgmlp::encoders::{clr, fit_bins, BinSpec};
use tkgmlp::metrics::{auc, ks};
use tkgmlp::nn::{bce_with_logits, Parameters};
use tkgmlp::rng::{derive_seed, seeded};
use tkgmlp::spline::KnotVector;
use tkgmlp::trainer::{early_stop_check, lr_schedule, GridSpace};
use tkgmlp::{evaluate, train, EncoderKind, FeatureEncoder, ModelConfig, TkgmlpModel, TrainConfig};

// Tolerances.
const GRAD_BUDGET: Duration = Duration::from_secs(30);
const UNITY_TOL: f64 = 1e-12;
const CLR_TOL: f64 = 1e-10;
const UNIFORMITY_SAMPLES: usize = 100_000;
const METRIC_INSTANCES: usize = 1000;
const DESK_ROWS: usize = 300_000;
const DESK_SEED: u64 = 42;
const DESK_AUC_GAP: f64 = 0.05;
const DESK_BUDGET: Duration = Duration::from_secs(15 * 60);
const ZIP_ROWS: usize = 40_000;
const ZIP_SEEDS: [u64; 3] = [1, 2, 3];
const ZIP_CHANCE_FLOOR: f64 = 0.6;
const RESTORE_TOL: f64 = 1e-12;

enum Verdict {
    Pass(String),
    Fail(String),
    SoftFail(String),
}

fn rows(rng: &mut impl Rng, n: usize, d: usize, scale: f64) -> Batch {
    Batch::new(n, d, (0..n * d).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn random_labels(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..n).map(|_| f64::from(rng.random::<bool>() as u8)).collect();
    y[0] = 1.0;
    y[1] = 0.0;
    y
}

/// Finite differences on the whole model, five seeds.
fn gradients() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let mut rng = seeded(seed);
        let cfg = ModelConfig {
            input_dim: 6,
            kan_layers: 2,
            gmlp_layers: 2,
            hidden_dim: 8,
            grid_size: 5,
            dropout: 0.3,
            ..ModelConfig::default()
        };
        let mut model = TkgmlpModel::new(cfg, seed).unwrap();
        let x = rows(&mut rng, 10, 6, 2.0);
        let y = random_labels(&mut rng, 10);
        let mask = 100 + seed;
        let (_, cache) = model.forward(&x, Mode::Train, &mut seeded(mask)).unwrap();
        let (_, d) = bce_with_logits(cache.logits(), &y).unwrap();
        model.zero_grad();
        model.backward(&d, &cache).unwrap();
        let g = grads(&model);
        worst = worst.max(check_params(&mut model, &g, 40, &mut rng, |m| {
            let (_, c) = m.forward(&x, Mode::Train, &mut seeded(mask)).unwrap();
            bce_with_logits(c.logits(), &y).unwrap().0
        }));
    }
    let t = start.elapsed();
    let msg = format!("worst rel err {worst:.2e} (tol {GRAD_TOL:e}), {:.1}s", t.as_secs_f64());
    if worst < GRAD_TOL && t < GRAD_BUDGET {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn splines() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut support_ok = true;
    for grid in [5, 10] {
        let kv = KnotVector::uniform(grid, 3, -1.0, 1.0).unwrap();
        let (a, b) = kv.domain();
        for k in 0..1000 {
            let u = a + (b - a) * (k as f64 + 0.5) / 1000.0;
            let basis = kv.basis(u);
            worst = worst.max((basis.iter().sum::<f64>() - 1.0).abs());
            let t = kv.knots();
            for (i, v) in basis.iter().enumerate() {
                support_ok &= *v >= 0.0 && (t[i]..=t[i + 4]).contains(&u) || *v == 0.0;
            }
        }
    }
    let msg = format!("max |Σ B - 1| = {worst:.1e} (tol {UNITY_TOL:e}), local support {support_ok}");
    if worst < UNITY_TOL && support_ok {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn encoders() -> Verdict {
    let fixture = BinSpec::from_boundaries(vec![0.0, 1.0, 2.0, 4.0]).unwrap();
    let fixture_ok = fixture.qle(1.5) == 1.0 / 3.0 + (1.0 / 3.0) * 0.5
        && fixture.ple(1.5) == vec![1.0, 0.5, 0.0]
        && fixture.quantile(1.5) == 1.0 / 3.0
        && fixture.ple(3.0) == vec![1.0, 1.0, 0.5]
        && clr(&[1.0, 1f64.exp(), 2f64.exp()])
            .unwrap()
            .iter()
            .zip([-1.0, 0.0, 1.0])
            .all(|(a, b)| (a - b).abs() < 1e-15)
        && fit_bins(&(1..=100).map(f64::from).collect::<Vec<_>>(), 4).unwrap().boundaries()
            == [1.0, 25.75, 50.5, 75.25, 100.0];

    // Continuous families at both bin counts; the zero-inflated family in
    // the regime where its atom is small enough to fit the bound (an atom of
    // mass π forces a deviation of at least π/2 for any bin count).
    let n = UNIFORMITY_SAMPLES;
    let cases = [
        (ColumnFamily::Gaussian { mean: 0.0, std: 1.0 }, &[16, 64][..]),
        (ColumnFamily::Exponential { scale: 2.0 }, &[16, 64]),
        (ColumnFamily::Beta { alpha: 0.5, beta: 2.0 }, &[16, 64]),
        (ColumnFamily::Zip { pi: 0.05, lambda: 50.0 }, &[16]),
    ];
    let mut worst_ratio: f64 = 0.0;
    for (j, (fam, bins)) in cases.iter().enumerate() {
        let v = fam.sample(n, &mut seeded(derive_seed(7, j as u64))).unwrap();
        for &n_bins in *bins {
            let b = fit_bins(&v, n_bins).unwrap();
            let q: Vec<f64> = v.iter().map(|&x| b.qle(x)).collect();
            let d = two_sample_ks(&q, &uniform_grid(n));
            worst_ratio = worst_ratio.max(d / uniformity_bound(n_bins, n));
        }
    }

    let mut rng = seeded(3);
    let mut clr_worst: f64 = 0.0;
    for _ in 0..1000 {
        let row: Vec<f64> = (0..12).map(|_| rng.random_range(1e-4..1e4)).collect();
        clr_worst = clr_worst.max(clr(&row).unwrap().iter().sum::<f64>().abs());
    }
    let msg = format!(
        "fixtures {fixture_ok}, worst uniformity deviation {:.2} of bound, max |Σ clr| {clr_worst:.1e}",
        worst_ratio
    );
    if fixture_ok && worst_ratio <= 1.0 && clr_worst < CLR_TOL {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn metric_oracle() -> Verdict {
    let mut rng = seeded(2024);
    let mut mismatches = 0;
    for i in 0..METRIC_INSTANCES {
        let n = rng.random_range(2..200);
        let levels = if i % 2 == 0 { 5 } else { 1_000_000 };
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let y = random_labels(&mut rng, n);
        let k = ks(&s, &y).unwrap();
        let a = auc(&s, &y).unwrap();
        if (k - brute_ks(&s, &y)).abs() > 1e-12 || a != brute_auc(&s, &y) {
            mismatches += 1;
        }
    }
    let msg = format!("{mismatches} mismatches in {METRIC_INSTANCES} instances");
    if mismatches == 0 {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn desk_tiny() -> Verdict {
    let start = Instant::now();
    let data = synth_generate(&SyntheticTaskSpec::desk_tiny(DESK_SEED), DESK_ROWS).unwrap();
    let (tr, va, _) = chronological_split(&data.dataset, [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]).unwrap();
    let n_tr = tr.n_rows();
    let bayes = bayes_metrics(&data.oracle[n_tr..n_tr + va.n_rows()], &va.labels).unwrap();
    let enc = FeatureEncoder::fit(&tr, EncoderKind::Qle, 64).unwrap();
    let (xt, xv) = (enc.transform(&tr).unwrap(), enc.transform(&va).unwrap());
    let cfg = ModelConfig {
        input_dim: enc.output_dim(),
        kan_layers: 1,
        gmlp_layers: 2,
        hidden_dim: 64,
        grid_size: 5,
        dropout: 0.3,
        ..ModelConfig::default()
    };
    let mut model = TkgmlpModel::new(cfg, DESK_SEED).unwrap();
    let tcfg = TrainConfig { seed: DESK_SEED, ..TrainConfig::default() };
    let out = train(&mut model, &xt, &tr.labels, &xv, &va.labels, &tcfg).unwrap();
    let t = start.elapsed();
    let msg = format!(
        "valid AUC {:.4} vs Bayes {:.4} (need ≥ {:.4}), KS {:.4}, best epoch {}/{}, {:.0}s",
        out.best_auc,
        bayes.auc,
        bayes.auc - DESK_AUC_GAP,
        out.best_ks,
        out.best_epoch,
        out.history.len(),
        t.as_secs_f64()
    );
    if out.best_auc >= bayes.auc - DESK_AUC_GAP && t < DESK_BUDGET {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

/// Best validation AUC of one run, with the Bayes AUC on the same rows.
fn zip_run(seed: u64, kind: EncoderKind) -> (f64, f64) {
    let data = synth_generate(&SyntheticTaskSpec::zip_heavy(seed), ZIP_ROWS).unwrap();
    let (tr, va, _) = chronological_split(&data.dataset, [0.6, 0.2, 0.2]).unwrap();
    let off = tr.n_rows();
    let bayes = bayes_metrics(&data.oracle[off..off + va.n_rows()], &va.labels).unwrap();
    let enc = FeatureEncoder::fit(&tr, kind, 64).unwrap();
    let cfg = ModelConfig { input_dim: enc.output_dim(), hidden_dim: 32, ..ModelConfig::default() };
    let mut model = TkgmlpModel::new(cfg, seed).unwrap();
    let tcfg = TrainConfig { batch_size: 512, patience: 20, max_epochs: 80, seed, ..TrainConfig::default() };
    let (xt, xv) = (enc.transform(&tr).unwrap(), enc.transform(&va).unwrap());
    let out = train(&mut model, &xt, &tr.labels, &xv, &va.labels, &tcfg).unwrap();
    (out.best_auc, bayes.auc)
}

/// QLE should match or beat standardization on zero-inflated counts.
fn zip_heavy() -> Verdict {
    let mut qle = Vec::new();
    let mut std = Vec::new();
    let mut detail = Vec::new();
    for seed in ZIP_SEEDS {
        let (q, bayes) = zip_run(seed, EncoderKind::Qle);
        let (s, _) = zip_run(seed, EncoderKind::Standardize);
        detail.push(format!("seed {seed}: qle {q:.4} std {s:.4} bayes {bayes:.4}"));
        qle.push(q);
        std.push(s);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mq, ms) = (mean(&qle), mean(&std));
    let msg = format!("mean valid AUC qle {mq:.4} vs standardize {ms:.4} [{}]", detail.join("; "));
    let above_chance = qle.iter().chain(&std).all(|&a| a > ZIP_CHANCE_FLOOR);
    if !above_chance {
        Verdict::Fail(msg)
    } else if mq >= ms {
        Verdict::Pass(msg)
    } else {
        Verdict::SoftFail(msg)
    }
}

fn protocol() -> Verdict {
    let lr_ok = lr_schedule(0, 1e-3, 0.9, 20) == 1e-3
        && lr_schedule(19, 1e-3, 0.9, 20) == 1e-3
        && lr_schedule(20, 1e-3, 0.9, 20) == 9e-4
        && lr_schedule(60, 1e-3, 0.9, 20) == 7.29e-4;

    // Pure-noise labels: validation KS peaks early, so patience triggers.
    let mut rng = seeded(5);
    let (xt, xv) = (rows(&mut rng, 400, 3, 1.0), rows(&mut rng, 200, 3, 1.0));
    let (yt, yv) = (random_labels(&mut rng, 400), random_labels(&mut rng, 200));
    let patience = 3;
    let cfg = ModelConfig { input_dim: 3, hidden_dim: 8, gmlp_layers: 1, ..ModelConfig::default() };
    let mut model = TkgmlpModel::new(cfg, 5).unwrap();
    let tcfg = TrainConfig { batch_size: 64, max_epochs: 200, patience, seed: 5, ..TrainConfig::default() };
    let out = train(&mut model, &xt, &yt, &xv, &yv, &tcfg).unwrap();
    let ks_hist: Vec<f64> = out.history.iter().map(|r| r.valid_ks).collect();
    let restored = evaluate(&model.predict(&xv).unwrap(), &yv).unwrap();
    let stop_ok = out.stopped_early
        && out.history.len() == out.best_epoch + patience + 1
        && early_stop_check(&ks_hist, patience).best_epoch == out.best_epoch
        && (restored.ks - out.best_ks).abs() <= RESTORE_TOL
        && (restored.auc - out.best_auc).abs() <= RESTORE_TOL;

    let pts = GridSpace::standard().enumerate();
    let mut keys: Vec<String> = pts
        .iter()
        .map(|p| format!("{}-{}-{}-{}-{}", p.kan_layers, p.gmlp_layers, p.grid_size, p.hidden_dim, p.dropout))
        .collect();
    keys.sort();
    keys.dedup();
    let grid_ok = pts.len() == 96 && keys.len() == 96;

    let msg = format!("lr schedule {lr_ok}, early stop + restore {stop_ok}, 96-point grid {grid_ok}");
    if lr_ok && stop_ok && grid_ok {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

/// Two full CLI runs with the same seed must produce identical files.
fn reproducibility() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 9\n[data]\nsource = \"synth\"\n[data.synth]\nrows = 3000\nprevalence = 0.05\n\
         [model]\nhidden_dim = 16\n[train]\nbatch_size = 256\nmax_epochs = 6\n",
    )
    .unwrap();
    let run = |sub: &str, out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_tkgmlp"))
            .env("TKGMLP_LOG", "off")
            .args([sub, "-c", cfg.to_str().unwrap(), "--out"])
            .arg(dir.path().join(out))
            .output()
            .unwrap()
            .status;
        assert!(status.success(), "tkgmlp {sub} failed");
    };
    for out in ["a", "b"] {
        run("synth", &format!("{out}/data"));
        run("fit", out);
    }
    let files = [
        "data/train.csv",
        "data/valid.csv",
        "data/test.csv",
        "data/oracle.csv",
        "checkpoint.json",
        "train_log.tsv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(dir.path().join("a").join(f)).unwrap() != fs::read(dir.path().join("b").join(f)).unwrap())
        .collect();
    let msg = format!("{} files compared, differing: {differing:?}", files.len());
    if differing.is_empty() {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("1 gradients", gradients),
        ("2 splines", splines),
        ("3 encoders", encoders),
        ("4 metric oracle", metric_oracle),
        ("5 desk-tiny vs bayes", desk_tiny),
        ("6 zip-heavy qle vs standardize", zip_heavy),
        ("7 training protocol", protocol),
        ("8 reproducibility", reproducibility),
    ];
    // Cargo passes harness flags (e.g. --list); only run on a plain invocation.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    // Comma-separated criterion numbers to skip while iterating locally.
    let skip: Vec<String> = std::env::var("TKGMLP_ACCEPTANCE_SKIP")
        .unwrap_or_default()
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut hard_failures = 0;
    for (name, f) in criteria {
        if skip.iter().any(|s| name.split(' ').next() == Some(s.as_str())) {
            println!("SKIP criterion {name}");
            continue;
        }
        let verdict = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| {
                let m = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Verdict::Fail(format!("panicked: {m}"))
            });
        match verdict {
            Verdict::Pass(m) => println!("PASS criterion {name}: {m}"),
            Verdict::SoftFail(m) => println!("FAIL (soft) criterion {name}: {m}"),
            Verdict::Fail(m) => {
                hard_failures += 1;
                println!("FAIL criterion {name}: {m}");
            }
        }
    }
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
