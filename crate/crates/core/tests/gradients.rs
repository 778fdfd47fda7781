//! Finite-difference gradient checks for every differentiable component.

mod common;

use common::{check_input, check_params, grads, GRAD_TOL};
use rand::Rng;
use tkgmlp::batch::{Batch, Mode};
use tkgmlp::gmlp::GmlpBlock;
use tkgmlp::kan::KanLayer;
use tkgmlp::model::{ModelConfig, TkgmlpModel};
use tkgmlp::nn::{bce_loss, bce_with_logits, BatchNorm, Linear, Parameters};
use tkgmlp::rng::{seeded, Rng64};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn random_batch(rng: &mut Rng64, rows: usize, cols: usize, scale: f64) -> Batch {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Batch::new(rows, cols, data).unwrap()
}

/// `Σ r ⊙ y`: its gradient w.r.t. `y` is `r`.
fn weighted_sum(y: &Batch, r: &Batch) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn labels(rng: &mut Rng64, n: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..n).map(|_| f64::from(rng.random::<bool>() as u8)).collect();
    y[0] = 1.0;
    y[1] = 0.0;
    y
}

#[test]
fn linear_layer() {
    for seed in SEEDS {
        let mut rng = seeded(seed);
        let mut layer = Linear::new(5, 3, &mut rng);
        layer.bias.value = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = random_batch(&mut rng, 7, 5, 2.0);
        let r = random_batch(&mut rng, 7, 3, 1.0);
        layer.zero_grad();
        let dx = layer.backward(&r, &x).unwrap();
        let g = grads(&layer);
        let e = check_params(&mut layer, &g, 64, &mut rng, |l| {
            weighted_sum(&l.forward(&x).unwrap(), &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: param rel err {e}");
        let e = check_input(x.data(), dx.data(), |xs| {
            let xb = Batch::new(7, 5, xs.to_vec()).unwrap();
            weighted_sum(&layer.forward(&xb).unwrap(), &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: input rel err {e}");
    }
}

#[test]
fn batch_norm_train_mode() {
    for seed in SEEDS {
        let mut rng = seeded(seed);
        let mut bn = BatchNorm::new(4);
        bn.gamma.value = (0..4).map(|_| rng.random_range(0.5..1.5)).collect();
        bn.beta.value = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
        let x = random_batch(&mut rng, 9, 4, 3.0);
        let r = random_batch(&mut rng, 9, 4, 1.0);
        let (_, cache) = bn.forward(&x, Mode::Train).unwrap();
        bn.zero_grad();
        let dx = bn.backward(&r, &cache).unwrap();
        let g = grads(&bn);
        let e = check_params(&mut bn, &g, 64, &mut rng, |b| {
            weighted_sum(&b.forward(&x, Mode::Train).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: param rel err {e}");
        let mut probe = bn.clone();
        let e = check_input(x.data(), dx.data(), |xs| {
            let xb = Batch::new(9, 4, xs.to_vec()).unwrap();
            weighted_sum(&probe.forward(&xb, Mode::Train).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: input rel err {e}");
    }
}

#[test]
fn batch_norm_inference_mode() {
    for seed in SEEDS {
        let mut rng = seeded(seed);
        let mut bn = BatchNorm::new(3);
        bn.running_mean = vec![0.3, -0.2, 1.0];
        bn.running_var = vec![0.5, 2.0, 1.5];
        bn.gamma.value = vec![1.2, 0.7, -0.4];
        let x = random_batch(&mut rng, 5, 3, 2.0);
        let r = random_batch(&mut rng, 5, 3, 1.0);
        let (_, cache) = bn.forward(&x, Mode::Inference).unwrap();
        bn.zero_grad();
        let dx = bn.backward(&r, &cache).unwrap();
        let g = grads(&bn);
        let e = check_params(&mut bn, &g, 64, &mut rng, |b| {
            weighted_sum(&b.forward(&x, Mode::Inference).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: param rel err {e}");
        let e = check_input(x.data(), dx.data(), |xs| {
            let xb = Batch::new(5, 3, xs.to_vec()).unwrap();
            weighted_sum(&bn.forward_inference(&xb).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: input rel err {e}");
    }
}

#[test]
fn bce_on_probabilities_and_logits() {
    for seed in SEEDS {
        let mut rng = seeded(seed);
        let n = 10;
        let y = labels(&mut rng, n);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let yb = Batch::column(&y).unwrap();
        let (_, g) = bce_loss(&Batch::column(&p).unwrap(), &yb).unwrap();
        let e = check_input(&p, g.data(), |ps| {
            bce_loss(&Batch::column(ps).unwrap(), &yb).unwrap().0
        });
        assert!(e < GRAD_TOL, "seed {seed}: bce rel err {e}");

        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let (_, g) = bce_with_logits(&z, &y).unwrap();
        let e = check_input(&z, &g, |zs| bce_with_logits(zs, &y).unwrap().0);
        assert!(e < GRAD_TOL, "seed {seed}: logit bce rel err {e}");
    }
}

#[test]
fn kan_layer() {
    for seed in SEEDS {
        let mut rng = seeded(seed);
        let mut layer = KanLayer::new(4, 3, 5, 3, (-1.0, 1.0), &mut rng).unwrap();
        // non-trivial spline weights and coefficients
        for v in layer.spline_weight.value.iter_mut() {
            *v = rng.random_range(0.5..1.5);
        }
        for v in layer.spline_coeffs.value.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let x = random_batch(&mut rng, 8, 4, 1.4);
        let r = random_batch(&mut rng, 8, 3, 1.0);
        let (_, cache) = layer.forward(&x).unwrap();
        layer.zero_grad();
        let dx = layer.backward(&r, &cache).unwrap();
        let g = grads(&layer);
        let e = check_params(&mut layer, &g, 200, &mut rng, |l| {
            weighted_sum(&l.forward(&x).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: param rel err {e}");
        let e = check_input(x.data(), dx.data(), |xs| {
            let xb = Batch::new(8, 4, xs.to_vec()).unwrap();
            weighted_sum(&layer.forward(&xb).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: input rel err {e}");
    }
}

#[test]
fn swiglu() {
    for seed in SEEDS {
        let mut rng = seeded(seed);
        let mut block = GmlpBlock::new(5, 4, 0.0, &mut rng).unwrap();
        let x = random_batch(&mut rng, 6, 5, 2.0);
        let r = random_batch(&mut rng, 6, 4, 1.0);
        let (_, cache) = block.swiglu(&x).unwrap();
        block.zero_grad();
        let dx = block.swiglu_backward(&r, &cache).unwrap();
        let g = grads(&block);
        let e = check_params(&mut block, &g, 64, &mut rng, |b| {
            weighted_sum(&b.swiglu(&x).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: param rel err {e}");
        let e = check_input(x.data(), dx.data(), |xs| {
            let xb = Batch::new(6, 5, xs.to_vec()).unwrap();
            weighted_sum(&block.swiglu(&xb).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: input rel err {e}");
    }
}

#[test]
fn gmlp_block_with_fixed_dropout_mask() {
    for seed in SEEDS {
        let mut rng = seeded(seed);
        let mut block = GmlpBlock::new(5, 4, 0.3, &mut rng).unwrap();
        let x = random_batch(&mut rng, 8, 5, 2.0);
        let r = random_batch(&mut rng, 8, 4, 1.0);
        let mask_seed = 100 + seed;
        // reseeding per evaluation keeps the dropout mask fixed
        let (_, cache) = block.forward(&x, Mode::Train, &mut seeded(mask_seed)).unwrap();
        block.zero_grad();
        let dx = block.backward(&r, &cache).unwrap();
        let g = grads(&block);
        let e = check_params(&mut block, &g, 64, &mut rng, |b| {
            weighted_sum(&b.forward(&x, Mode::Train, &mut seeded(mask_seed)).unwrap().0, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: param rel err {e}");
        let mut probe = block.clone();
        let e = check_input(x.data(), dx.data(), |xs| {
            let xb = Batch::new(8, 5, xs.to_vec()).unwrap();
            let y = probe.forward(&xb, Mode::Train, &mut seeded(mask_seed)).unwrap().0;
            weighted_sum(&y, &r)
        });
        assert!(e < GRAD_TOL, "seed {seed}: input rel err {e}");
    }
}

#[test]
fn end_to_end_model() {
    for seed in SEEDS {
        let mut rng = seeded(seed);
        let cfg = ModelConfig {
            input_dim: 6,
            kan_layers: 1,
            gmlp_layers: 1,
            hidden_dim: 8,
            grid_size: 5,
            dropout: 0.3,
            ..ModelConfig::default()
        };
        let mut model = TkgmlpModel::new(cfg, seed).unwrap();
        let x = random_batch(&mut rng, 10, 6, 2.0);
        let y = labels(&mut rng, 10);
        let mask_seed = 200 + seed;
        let loss = |m: &mut TkgmlpModel| {
            let (_, c) = m.forward(&x, Mode::Train, &mut seeded(mask_seed)).unwrap();
            bce_with_logits(c.logits(), &y).unwrap().0
        };
        let (_, cache) = model.forward(&x, Mode::Train, &mut seeded(mask_seed)).unwrap();
        let (_, dlogits) = bce_with_logits(cache.logits(), &y).unwrap();
        model.zero_grad();
        model.backward(&dlogits, &cache).unwrap();
        let g = grads(&model);
        let e = check_params(&mut model, &g, 48, &mut rng, loss);
        assert!(e < GRAD_TOL, "seed {seed}: model rel err {e}");
    }
}

#[test]
fn model_two_layers_each() {
    let mut rng = seeded(9);
    let cfg = ModelConfig {
        input_dim: 3,
        kan_layers: 2,
        gmlp_layers: 2,
        hidden_dim: 5,
        grid_size: 10,
        dropout: 0.2,
        ..ModelConfig::default()
    };
    let mut model = TkgmlpModel::new(cfg, 9).unwrap();
    let x = random_batch(&mut rng, 12, 3, 2.0);
    let y = labels(&mut rng, 12);
    let (_, cache) = model.forward(&x, Mode::Train, &mut seeded(1)).unwrap();
    let (_, d) = bce_with_logits(cache.logits(), &y).unwrap();
    model.zero_grad();
    model.backward(&d, &cache).unwrap();
    let g = grads(&model);
    let e = check_params(&mut model, &g, 32, &mut rng, |m| {
        let (_, c) = m.forward(&x, Mode::Train, &mut seeded(1)).unwrap();
        bce_with_logits(c.logits(), &y).unwrap().0
    });
    assert!(e < GRAD_TOL, "rel err {e}");
}
