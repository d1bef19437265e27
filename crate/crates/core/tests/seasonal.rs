use std::f64::consts::PI;

use cfdcast::seasonal::{adjust, fit_seasonal, inverse_logit_fill, DEFAULT_PERIOD};
use proptest::prelude::*;

fn series(offset: f64, n: usize, seed: u32) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let t = i as f64 + offset;
            let wobble = ((i as u32).wrapping_mul(2_654_435_761).wrapping_add(seed) % 1000) as f64
                / 1000.0
                - 0.5;
            let x = -0.1
                + 0.8 * (2.0 * PI * t / 52.0).sin()
                + 0.3 * (4.0 * PI * t / 52.0).cos()
                + 0.2 * wobble;
            (t, inverse_logit_fill(x))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residuals_sum_to_zero(n in 10usize..300, seed in 0u32..1000) {
        let s = series(0.0, n, seed);
        let m = fit_seasonal("NO1".into(), &s, DEFAULT_PERIOD).unwrap();
        let r = adjust(&s, &m).unwrap();
        let scale: f64 = r.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
        prop_assert!(r.iter().sum::<f64>().abs() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn full_period_shift_leaves_residuals(n in 10usize..200, seed in 0u32..1000) {
        let s = series(0.0, n, seed);
        let shifted: Vec<_> = s.iter().map(|&(t, v)| (t + DEFAULT_PERIOD, v)).collect();
        let r1 = adjust(&s, &fit_seasonal("NO1".into(), &s, DEFAULT_PERIOD).unwrap()).unwrap();
        let r2 = adjust(&shifted, &fit_seasonal("NO1".into(), &shifted, DEFAULT_PERIOD).unwrap()).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn refit_on_fitted_values_recovers_model(n in 10usize..200, seed in 0u32..1000) {
        let s = series(3.0, n, seed);
        let m = fit_seasonal("NO1".into(), &s, DEFAULT_PERIOD).unwrap();
        let fitted: Vec<_> = s.iter().map(|&(t, _)| (t, inverse_logit_fill(m.level(t)))).collect();
        let m2 = fit_seasonal("NO1".into(), &fitted, DEFAULT_PERIOD).unwrap();
        let a = [m.gamma0, m.gamma_sin[0], m.gamma_sin[1], m.gamma_cos[0], m.gamma_cos[1]];
        let b = [m2.gamma0, m2.gamma_sin[0], m2.gamma_sin[1], m2.gamma_cos[0], m2.gamma_cos[1]];
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}
