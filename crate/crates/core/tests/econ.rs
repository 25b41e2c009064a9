use patrolscope::econ::{elasticity_arsinh, normal_p_value, ols, pearson, quantile, SeType};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn design(seed: u64, n: usize, k: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            r.extend((1..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
            r
        })
        .collect();
    let y = x
        .iter()
        .map(|r| r.iter().sum::<f64>() + rng.sample::<f64, _>(StandardNormal))
        .collect();
    (y, x, (0..k).map(|j| format!("x{j}")).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centering_regressors_keeps_fitted_values(seed in any::<u64>(), k in 2usize..6, shift in -50.0f64..50.0) {
        let (y, x, names) = design(seed, 60, k);
        let a = ols(&y, &x, &names, None, SeType::Hc1).unwrap();
        let xs: Vec<Vec<f64>> = x.iter().map(|r| {
            let mut r = r.clone();
            for v in r.iter_mut().skip(1) { *v += shift; }
            r
        }).collect();
        let b = ols(&y, &xs, &names, None, SeType::Hc1).unwrap();
        for (f, g) in a.fitted.iter().zip(&b.fitted) {
            prop_assert!((f - g).abs() <= 1e-8 * f.abs().max(1.0));
        }
        for j in 1..k {
            prop_assert!((a.coef[j] - b.coef[j]).abs() <= 1e-8);
            prop_assert!((a.se[j] - b.se[j]).abs() <= 1e-8);
        }
    }

    #[test]
    fn covariance_is_symmetric_psd(seed in any::<u64>(), k in 1usize..7) {
        let (y, x, names) = design(seed, 80, k);
        for se in [SeType::Hc0, SeType::Hc1] {
            let f = ols(&y, &x, &names, None, se).unwrap();
            prop_assert!((&f.cov - f.cov.transpose()).amax() <= 1e-12 * f.cov.amax());
            let eig = f.cov.clone().symmetric_eigen();
            prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12 * f.cov.amax()));
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_regressors(seed in any::<u64>(), k in 1usize..7) {
        let (y, x, names) = design(seed, 50, k);
        let f = ols(&y, &x, &names, None, SeType::Hc1).unwrap();
        for j in 0..k {
            let dot: f64 = x.iter().zip(&f.residuals).map(|(r, e)| r[j] * e).sum();
            prop_assert!(dot.abs() <= 1e-8);
        }
        prop_assert!((0.0..=1.0).contains(&f.r_squared));
    }

    #[test]
    fn pearson_is_affine_invariant(v in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..50), a in 0.1f64..10.0, b in -10.0f64..10.0) {
        let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        if let Some(r) = pearson(&x, &y) {
            let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let r2 = pearson(&xa, &y).unwrap();
            prop_assert!((r - r2).abs() <= 1e-9);
            let xn: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((r + pearson(&xn, &y).unwrap()).abs() <= 1e-9);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn quantiles_are_monotone(v in prop::collection::vec(-1e3f64..1e3, 1..40), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(quantile(&v, lo).unwrap() <= quantile(&v, hi).unwrap());
    }
}

#[test]
fn collinear_design_is_rank_deficient() {
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
    let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let names = ["a", "b", "c"].map(String::from);
    let err = ols(&y, &x, &names, None, SeType::Hc1).unwrap_err();
    assert!(matches!(err, patrolscope::Error::RankDeficient { .. }), "{err}");
}

#[test]
fn too_few_rows_refused() {
    let x = vec![vec![1.0, 2.0], vec![1.0, 3.0]];
    let names = ["a", "b"].map(String::from);
    assert!(ols(&[1.0, 2.0], &x, &names, None, SeType::Hc1).is_err());
}

#[test]
fn p_values_match_normal_table() {
    assert!((normal_p_value(1.959963984540054) - 0.05).abs() < 1e-9);
    assert!((normal_p_value(-2.5758293035489) - 0.01).abs() < 1e-9);
    assert_eq!(normal_p_value(0.0), 1.0);
}

#[test]
fn elasticity_needs_positive_mean() {
    assert!(elasticity_arsinh(0.0, 1.0, 0.1).is_err());
    let e = elasticity_arsinh(26.685, 1.0, 0.1).unwrap();
    assert!((e.factor - (1.0f64 + 26.685 * 26.685).sqrt() / 26.685).abs() < 1e-15);
}
