use cfdcast::posterior::{fit, sample, LinearPosterior};
use cfdcast::rng;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn random_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, 99);
    DMatrix::from_fn(n, p, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r) * 3.0 + 1.0
    })
}

fn fixture_dof50() -> LinearPosterior {
    let xtx_inv = DMatrix::from_row_slice(2, 2, &[0.02, 0.012, 0.012, 0.03]);
    LinearPosterior::new(vec![1.0, -1.0], xtx_inv, 4.0, 50).unwrap()
}

#[test]
fn draw_moments_match_normal_inverse_chi2() {
    let post = fixture_dof50();
    let n = 200_000;
    let draws = sample(&post, n, 2024).unwrap();
    let scale = 50.0 / 48.0;
    let cov_true = &post.xtx_inv * (post.s2 * scale);

    let mut mean = [0.0; 2];
    for d in &draws {
        mean[0] += d.beta[0];
        mean[1] += d.beta[1];
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    for i in 0..2 {
        let se = (cov_true[(i, i)] / n as f64).sqrt();
        assert!(
            (mean[i] - post.beta_hat[i]).abs() < 3.0 * se,
            "mean {i}: {} vs {}",
            mean[i],
            post.beta_hat[i]
        );
    }
    let mut cov = [[0.0; 2]; 2];
    for d in &draws {
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += (d.beta[i] - mean[i]) * (d.beta[j] - mean[j]);
            }
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            let emp = cov[i][j] / (n - 1) as f64;
            let rel = (emp - cov_true[(i, j)]).abs() / cov_true[(i, j)].abs();
            assert!(rel < 0.05, "cov[{i}][{j}] {emp} vs {}", cov_true[(i, j)]);
        }
    }
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level alpha.
fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[test]
fn sigma2_marginal_is_scaled_inverse_chi2() {
    let post = fixture_dof50();
    let n = 100_000;
    let draws = sample(&post, n, 77).unwrap();
    let stat: Vec<f64> = draws
        .iter()
        .map(|d| post.dof as f64 * post.s2 / d.sigma2)
        .collect();
    let chi2 = ChiSquared::new(post.dof as f64).unwrap();
    let d = ks_statistic(stat, |x| chi2.cdf(x));
    assert!(d < ks_critical(n, 0.001), "KS D = {d}");
}

#[test]
fn small_dof_still_samples() {
    let post = LinearPosterior::new(vec![0.3], DMatrix::from_element(1, 1, 0.5), 2.0, 1).unwrap();
    let draws = sample(&post, 1000, 5).unwrap();
    assert!(draws
        .iter()
        .all(|d| d.sigma2 > 0.0 && d.beta[0].is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noise_free_data_is_recovered(
        beta in prop::collection::vec(-5.0f64..5.0, 1..=4),
        seed in 0u64..1000,
    ) {
        let p = beta.len();
        let x = random_design(30, p, seed);
        let b = DVector::from_vec(beta.clone());
        let y = &x * &b;
        let f = fit(&x, &y).unwrap();
        for i in 0..p {
            prop_assert!((f.beta_hat[i] - beta[i]).abs() < 1e-10);
        }
        prop_assert!(f.s2 <= 1e-18 * y.norm_squared().max(1.0));
    }

    #[test]
    fn scale_equivariance(c in 0.01f64..100.0, seed in 0u64..1000) {
        let x = random_design(25, 3, seed);
        let y = DVector::from_fn(25, |i, _| ((i * 7 + seed as usize) % 11) as f64 - 4.0);
        let f1 = fit(&x, &y).unwrap();
        let f2 = fit(&x, &(&y * c)).unwrap();
        for i in 0..3 {
            prop_assert!((f2.beta_hat[i] - c * f1.beta_hat[i]).abs() <= 1e-9 * (1.0 + (c * f1.beta_hat[i]).abs()));
        }
        prop_assert!((f2.s2 - c * c * f1.s2).abs() <= 1e-9 * c * c * f1.s2.max(1e-12));
    }

    #[test]
    fn xtx_inv_is_symmetric_positive_definite(seed in 0u64..1000, p in 1usize..=4) {
        let x = random_design(40, p, seed);
        let y = DVector::from_fn(40, |i, _| i as f64);
        let f = fit(&x, &y).unwrap();
        prop_assert_eq!(&f.xtx_inv, &f.xtx_inv.transpose());
        let eig = f.xtx_inv.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
        prop_assert!(f.dof == 40 - p);
    }
}
