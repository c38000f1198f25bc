mod common;

use common::{cov, oracle_correlations, to_na};
use eeg_audio::corr::{CcaModel, SharedSpace, Side};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn correlated_views(n: usize, dx: usize, dy: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let mut rng = eeg_audio::seeds::rng(seed);
    let mut g = || rng.sample::<f64, _>(StandardNormal);
    let z = Array2::from_shape_simple_fn((n, 2), &mut g);
    let ax = Array2::from_shape_simple_fn((2, dx), &mut g);
    let ay = Array2::from_shape_simple_fn((2, dy), &mut g);
    let x = z.dot(&ax) + Array2::from_shape_simple_fn((n, dx), &mut g) * 0.7;
    let y = z.dot(&ay) + Array2::from_shape_simple_fn((n, dy), &mut g) * 0.7;
    (x, y)
}

#[test]
fn correlations_match_cholesky_eigen_oracle() {
    let (x, y) = correlated_views(200, 6, 4, 3);
    let model = CcaModel::fit(x.view(), y.view(), 4, 1e-4, 1e-4).unwrap();
    let oracle = oracle_correlations(x.view(), y.view(), 1e-4);
    for k in 0..4 {
        assert!((model.correlations[k] - oracle[k]).abs() < 1e-8, "{k}: {} vs {}", model.correlations[k], oracle[k]);
    }
}

#[test]
fn projected_views_are_white_and_diagonally_correlated() {
    let (x, y) = correlated_views(300, 5, 5, 11);
    let r = 1e-3;
    let model = CcaModel::fit(x.view(), y.view(), 3, r, r).unwrap();
    let px = to_na(model.project(x.view(), Side::X).unwrap().view());
    let py = to_na(model.project(y.view(), Side::Y).unwrap().view());
    let wx = to_na(model.proj_x.view());
    let wy = to_na(model.proj_y.view());
    let gx = cov(&px, &px) + wx.transpose() * &wx * r;
    let gy = cov(&py, &py) + wy.transpose() * &wy * r;
    let cxy = cov(&px, &py);
    for i in 0..3 {
        for j in 0..3 {
            let eye = if i == j { 1.0 } else { 0.0 };
            assert!((gx[(i, j)] - eye).abs() < 1e-8);
            assert!((gy[(i, j)] - eye).abs() < 1e-8);
            let expect = if i == j { model.correlations[i] } else { 0.0 };
            assert!((cxy[(i, j)] - expect).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn correlations_are_bounded_descending_and_match_oracle(
        seed in any::<u64>(),
        n in 20usize..120,
        dx in 1usize..6,
        dy in 1usize..6,
        r in 1e-6f64..1e-1,
    ) {
        let (x, y) = correlated_views(n, dx, dy, seed);
        let k = dx.min(dy);
        let model = CcaModel::fit(x.view(), y.view(), k, r, r).unwrap();
        let oracle = oracle_correlations(x.view(), y.view(), r);
        for i in 0..k {
            let c = model.correlations[i];
            prop_assert!((0.0..=1.0).contains(&c));
            if i > 0 {
                prop_assert!(model.correlations[i - 1] >= c);
            }
            prop_assert!((c - oracle[i]).abs() < 1e-8);
        }
    }
}
