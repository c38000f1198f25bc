use eeg_audio::corr::{dcca_loss_grad, CcaModel, DccaConfig, DccaModel, SharedSpace, Side};
use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian(shape: (usize, usize), seed: u64) -> Array2<f64> {
    let mut rng = eeg_audio::seeds::rng(seed);
    Array2::from_shape_simple_fn(shape, || rng.sample::<f64, _>(StandardNormal))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let h1 = gaussian((20, 4), 1);
    let h2 = &h1 * 0.6 + gaussian((20, 4), 2);
    let (k, r) = (3, 1e-3);
    let out = dcca_loss_grad(h1.view(), h2.view(), k, r).unwrap();
    let eps = 1e-6;
    for (which, grad) in [(0, &out.grad_h1), (1, &out.grad_h2)] {
        for i in 0..20 {
            for j in 0..4 {
                let (mut p, mut m) = (h1.clone(), h1.clone());
                let (mut q, mut s) = (h2.clone(), h2.clone());
                if which == 0 {
                    p[[i, j]] += eps;
                    m[[i, j]] -= eps;
                } else {
                    q[[i, j]] += eps;
                    s[[i, j]] -= eps;
                }
                let lp = dcca_loss_grad(p.view(), q.view(), k, r).unwrap().loss;
                let lm = dcca_loss_grad(m.view(), s.view(), k, r).unwrap().loss;
                let fd = (lp - lm) / (2.0 * eps);
                assert!(rel_err(grad[[i, j]], fd) < 1e-4, "side {which} ({i},{j}): {} vs {fd}", grad[[i, j]]);
            }
        }
    }
}

#[test]
fn loss_is_minus_sum_of_top_correlations() {
    let h1 = gaussian((50, 5), 3);
    let h2 = &h1 * 0.4 + gaussian((50, 5), 4);
    let out = dcca_loss_grad(h1.view(), h2.view(), 5, 0.0).unwrap();
    let cca = CcaModel::fit(h1.view(), h2.view(), 5, 0.0, 0.0).unwrap();
    assert!((out.loss + cca.correlations.sum()).abs() < 1e-9);
}

fn small_config(seed: u64) -> DccaConfig {
    DccaConfig {
        hidden: vec![16],
        output_dim: 3,
        ridge: 1e-3,
        epochs: 80,
        learning_rate: 0.1,
        momentum: 0.9,
        weight_decay: 0.0,
        seed,
        category_pair_prob: 0.0,
    }
}

#[test]
fn recovers_linear_shared_structure_about_as_well_as_cca() {
    let z = gaussian((300, 3), 5);
    let x = z.dot(&gaussian((3, 8), 6)) + gaussian((300, 8), 7) * 0.5;
    let y = z.dot(&gaussian((3, 6), 8)) + gaussian((300, 6), 9) * 0.5;
    let cca = CcaModel::fit(x.view(), y.view(), 3, 1e-3, 1e-3).unwrap();
    let dcca = DccaModel::fit(x.view(), y.view(), &small_config(1), None).unwrap();
    let total = dcca.total_correlation();
    assert!(total >= cca.correlations.sum() - 0.05, "{total} vs {}", cca.correlations.sum());
}

#[test]
fn small_steps_without_momentum_never_raise_the_loss() {
    let x = gaussian((60, 5), 10);
    let y = &x.slice(ndarray::s![.., ..4]) * 0.5 + gaussian((60, 4), 11);
    let cfg = DccaConfig {
        learning_rate: 1e-4,
        momentum: 0.0,
        epochs: 30,
        ..small_config(2)
    };
    let m = DccaModel::fit(x.view(), y.view(), &cfg, None).unwrap();
    for w in m.loss_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn identical_seeds_give_identical_models() {
    let x = gaussian((80, 6), 12);
    let y = gaussian((80, 4), 13) + &x.slice(ndarray::s![.., ..4]);
    let labels: Vec<usize> = (0..80).map(|i| i % 4).collect();
    let cfg = DccaConfig {
        category_pair_prob: 0.5,
        epochs: 10,
        ..small_config(99)
    };
    let a = DccaModel::fit(x.view(), y.view(), &cfg, Some(&labels)).unwrap();
    let b = DccaModel::fit(x.view(), y.view(), &cfg, Some(&labels)).unwrap();
    assert_eq!(a, b);
    let pa = a.project(x.view(), Side::X).unwrap();
    let pb = b.project(x.view(), Side::X).unwrap();
    assert!(pa.iter().zip(pb.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
}

#[test]
fn indexed_fit_equals_expanded_fit() {
    let x = gaussian((40, 5), 14);
    let rows = gaussian((8, 4), 15);
    let index: Vec<usize> = (0..40).map(|i| i % 8).collect();
    let expanded = rows.select(Axis(0), &index);
    let cfg = DccaConfig {
        epochs: 5,
        ..small_config(3)
    };
    let a = DccaModel::fit_indexed(x.view(), rows.view(), &index, &cfg, None).unwrap();
    let b = DccaModel::fit(x.view(), expanded.view(), &cfg, None).unwrap();
    for (u, v) in a.loss_trace.iter().zip(&b.loss_trace) {
        assert!((u - v).abs() < 1e-9);
    }
}

#[test]
fn repairing_without_labels_is_rejected() {
    let x = gaussian((20, 3), 16);
    let cfg = DccaConfig {
        category_pair_prob: 0.3,
        ..small_config(0)
    };
    assert!(DccaModel::fit(x.view(), x.view(), &cfg, None).is_err());
}
