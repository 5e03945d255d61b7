use std::f64::consts::PI;

use physnet::data::{generate, linspace, Dataset};
use physnet::gp::GpModel;
use physnet::kernels::{boogaart_residual, gram, gram_cholesky, mercer_from_basis, BasisFunction, Kernel};
use physnet::linalg::{min_eigenvalue, JitterPolicy};
use physnet::nn::{ActivationKind, SingleLayerNet, Trainable};
use physnet::operators::LinearOperator;
use physnet::rng;
use physnet::training::{data_loss, loss_and_gradient, physics_loss, total_loss, train, TrainConfig, Variant};
use physnet::width_limit::{correspondence_check, square_grid, WeightPrior};
use rand::Rng;

fn uniform_grid(h: f64, hi: f64) -> Vec<f64> {
    let n = (hi / h).floor() as usize + 1;
    (0..n).map(|i| i as f64 * h).collect()
}

fn relative_residual(model: &GpModel, h: f64, seed: u64) -> f64 {
    let points = uniform_grid(h, 4.0 * PI);
    let g = model.sample_prior(&points, seed).unwrap();
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r = physnet::gp::grid_residual(&LinearOperator::helmholtz(0.51), &g, h);
    r / scale
}

#[test]
fn cosine_samples_solve_helmholtz_at_second_order() {
    let model = GpModel::new(Kernel::cosine(0.51), 0.0).unwrap();
    for seed in 0..5 {
        let coarse = relative_residual(&model, 1e-2, seed);
        let fine = relative_residual(&model, 5e-3, seed);
        assert!(coarse < 1e-2, "seed {seed}: {coarse}");
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn squared_exponential_samples_violate_helmholtz() {
    let model = GpModel::new(Kernel::squared_exponential(1.0, 1.0).unwrap(), 0.0).unwrap();
    let points = uniform_grid(1e-2, 4.0 * PI);
    let op = LinearOperator::helmholtz(0.51);
    let mut hits = 0;
    for seed in 0..100 {
        let g = model.sample_prior(&points, seed).unwrap();
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if physnet::gp::grid_residual(&op, &g, 1e-2) > 0.1 * scale {
            hits += 1;
        }
    }
    assert!(hits >= 99, "{hits}/100");
}

#[test]
fn kernels_are_symmetric() {
    let mut r = rng::stream(7, 0);
    let se = Kernel::squared_exponential(0.8, 1.3).unwrap();
    let helm = LinearOperator::helmholtz(0.51);
    let analytic = [Kernel::cosine(0.51), se.clone(), Kernel::cosine_mercer_pair(0.51)];
    let fd = physnet::kernels::operator_transform(&helm, &se);
    for _ in 0..1000 {
        let x = r.random_range(-10.0..10.0);
        let xp = r.random_range(-10.0..10.0);
        for k in &analytic {
            assert!((k.eval(x, xp) - k.eval(xp, x)).abs() < 1e-12);
        }
        let (a, b) = (fd.eval(x, xp), fd.eval(xp, x));
        assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn cosine_is_stationary() {
    let k = Kernel::cosine(0.51);
    let mut r = rng::stream(8, 0);
    for _ in 0..200 {
        let x = r.random_range(-10.0..10.0);
        let xp = r.random_range(-10.0..10.0);
        let s = r.random_range(-5.0..5.0);
        assert!((k.eval(x + s, xp + s) - k.eval(x, xp)).abs() < 1e-12);
    }
}

#[test]
fn gram_matrices_factor_with_small_jitter() {
    let policy = JitterPolicy::default();
    for seed in 0..10 {
        let mut r = rng::stream(seed, 1);
        let n = r.random_range(2..=32);
        let points: Vec<f64> = (0..n).map(|_| r.random_range(0.0..4.0 * PI)).collect();
        for k in [Kernel::cosine(0.51), Kernel::squared_exponential(1.0, 1.0).unwrap()] {
            let (g, chol) = gram_cholesky(&k, &points, &policy).unwrap();
            assert!(chol.jitter <= 1e-8 * n as f64, "jitter {}", chol.jitter);
            assert!(min_eigenvalue(&g) > -1e-10);
        }
    }
}

#[test]
fn mercer_pair_matches_cosine_on_grid() {
    let cos = Kernel::cosine(0.51);
    let mercer = Kernel::cosine_mercer_pair(0.51);
    let xs = linspace(0.0, 4.0 * PI, 50);
    let a = gram(&cos, &xs).unwrap();
    let b = gram(&mercer, &xs).unwrap();
    assert!((a - b).amax() < 1e-12);
}

#[test]
fn explicit_mercer_sum_is_annihilated() {
    for alpha in [0.3, 0.51, 1.0, 2.0] {
        let basis = vec![BasisFunction::sinusoid(1.0, alpha, 0.0), BasisFunction::sinusoid(1.0, alpha, PI / 2.0)];
        let k = mercer_from_basis(basis, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = boogaart_residual(&LinearOperator::helmholtz(alpha), &k, &linspace(0.0, 4.0 * PI, 50)).unwrap();
        assert!(r < 1e-9, "alpha {alpha}: {r}");
    }
}

#[test]
fn monte_carlo_error_shrinks_like_inverse_root() {
    let prior = WeightPrior::helmholtz(0.51);
    let target = Kernel::cosine(0.51);
    let grid = square_grid(0.0, 4.0 * PI, 5);
    let mean_error = |n: usize| {
        (0..10)
            .map(|seed| correspondence_check(ActivationKind::Sin, &prior, &target, &grid, n, seed).unwrap().max_abs_error)
            .sum::<f64>()
            / 10.0
    };
    let (e3, e4, e5) = (mean_error(1_000), mean_error(10_000), mean_error(100_000));
    assert!(e3 > e4 && e4 > e5, "{e3} {e4} {e5}");
    let ratio = e3 / e5;
    assert!((5.0..=20.0).contains(&ratio), "ratio {ratio}");
}

fn random_problem(seed: u64) -> (SingleLayerNet, Dataset, f64) {
    let mut r = rng::stream(seed, 2);
    let activation = if seed.is_multiple_of(2) { ActivationKind::Sin } else { ActivationKind::Tanh };
    let n = r.random_range(1..=8);
    let mut net = SingleLayerNet::init(activation, n, 1.0, None, seed).unwrap();
    net.set_trainable(Trainable::ALL);
    let xs: Vec<f64> = linspace(0.0, 3.0, r.random_range(2..=6));
    let ys: Vec<f64> = xs.iter().map(|_| r.random_range(-1.0..1.0)).collect();
    let lambda = r.random_range(0.0..1.0);
    (net, Dataset::new(xs, ys).unwrap(), lambda)
}

fn objective(net: &SingleLayerNet, data: &Dataset, op: &LinearOperator, pivots: &[f64], lambda: f64) -> f64 {
    total_loss(data_loss(net, data), physics_loss(net, op, pivots), lambda)
}

#[test]
fn total_loss_gradient_matches_central_differences() {
    let op = LinearOperator::helmholtz(0.51);
    let pivots = linspace(0.0, 3.0, 7);
    let h = 1e-6;
    for seed in 0..20 {
        let (net, data, lambda) = random_problem(seed);
        let (_, grad) = loss_and_gradient(&net, &data, &op, &pivots, lambda);
        let analytic: Vec<f64> = grad.iter().collect();
        let mut numeric = Vec::with_capacity(analytic.len());
        for g in 0..4 {
            let len = net.groups()[g].len();
            for i in 0..len {
                let eval = |delta: f64| {
                    let mut p = net.clone();
                    p.groups_mut()[g].1[i] += delta;
                    objective(&p, &data, &op, &pivots, lambda)
                };
                numeric.push((eval(h) - eval(-h)) / (2.0 * h));
            }
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
        assert!(diff / norm < 1e-4, "seed {seed}: relative error {}", diff / norm);
    }
}

#[test]
fn posterior_mean_approaches_targets_as_noise_vanishes() {
    let data = generate(0.51, 0.50001, 11, 0.2, (0.0, 4.0 * PI), 3).unwrap();
    let mut errors = Vec::new();
    for noise in [1e-2, 1e-4, 1e-6] {
        let model = GpModel::new(Kernel::squared_exponential(1.0, 1.0).unwrap(), noise).unwrap();
        let post = model.posterior(data.xs(), data.ys(), data.xs()).unwrap();
        let sup = post.mean.iter().zip(data.ys()).map(|(m, y)| (m - y).abs()).fold(0.0, f64::max);
        errors.push(sup);
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 1e-4, "{errors:?}");
}

#[test]
fn adam_lowers_data_loss_on_the_reference_problem() {
    let mut improved = 0;
    for seed in 0..10 {
        let data = generate(0.51, 0.50001, 11, 0.2, (0.0, 4.0 * PI), seed).unwrap();
        for variant in Variant::ALL {
            let cfg = TrainConfig::helmholtz_default(variant, seed);
            let (_, trace) = train(&cfg, &data).unwrap();
            let first = trace.records[0].data_loss;
            let last = trace.last().unwrap().data_loss;
            if variant == Variant::PhysicsConstrained {
                assert!(trace.records.iter().all(|r| r.physics_loss == 0.0));
            }
            if last < first {
                improved += 1;
            }
        }
    }
    assert!(improved >= 27, "{improved}/30");
}
