//! Seasonal adjustment of reservoir fill levels.
//!
//! Fill percentages are mapped to the real line with `logit(fill / 100)` and
//! a two-harmonic annual cycle
//!
//! ```text
//! lambda(t) = g0 + sum_{j=1,2} s_j sin(2 pi j t / P) + c_j cos(2 pi j t / P)
//! ```
//!
//! is removed by ordinary least squares. `t` counts weeks and `P` defaults
//! to 52. The residuals are the reservoir covariate used in the regressions.

use std::f64::consts::PI;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::AreaId;

pub const DEFAULT_PERIOD: f64 = 52.0;
const N_COEFFICIENTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalModel {
    pub area: AreaId,
    pub gamma0: f64,
    pub gamma_sin: [f64; 2],
    pub gamma_cos: [f64; 2],
    pub period: f64,
}

impl SeasonalModel {
    /// Seasonal level on the logit scale at time index `t`.
    pub fn level(&self, t: f64) -> f64 {
        let mut v = self.gamma0;
        for j in 0..2 {
            let w = 2.0 * PI * (j + 1) as f64 * t / self.period;
            v += self.gamma_sin[j] * w.sin() + self.gamma_cos[j] * w.cos();
        }
        v
    }

    fn from_coefficients(area: AreaId, c: &DVector<f64>, period: f64) -> Self {
        SeasonalModel {
            area,
            gamma0: c[0],
            gamma_sin: [c[1], c[2]],
            gamma_cos: [c[3], c[4]],
            period,
        }
    }
}

pub fn logit_fill(fill_pct: f64) -> Result<f64> {
    if !(fill_pct > 0.0 && fill_pct < 100.0) {
        return Err(Error::FillOutOfRange { value: fill_pct });
    }
    let p = fill_pct / 100.0;
    Ok((p / (1.0 - p)).ln())
}

/// Inverse of [`logit_fill`], in percent.
pub fn inverse_logit_fill(x: f64) -> f64 {
    100.0 / (1.0 + (-x).exp())
}

/// Time index in weeks of `date` relative to `origin`.
pub fn week_index(origin: NaiveDate, date: NaiveDate) -> f64 {
    (date - origin).num_days() as f64 / 7.0
}

fn harmonic_row(t: f64, period: f64) -> [f64; N_COEFFICIENTS] {
    let w1 = 2.0 * PI * t / period;
    let w2 = 2.0 * w1;
    [1.0, w1.sin(), w2.sin(), w1.cos(), w2.cos()]
}

/// Least-squares fit of the seasonal cycle to `(t, fill_pct)` observations.
pub fn fit_seasonal(area: AreaId, series: &[(f64, f64)], period: f64) -> Result<SeasonalModel> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "period must be positive, got {period}"
        )));
    }
    if series.len() < N_COEFFICIENTS {
        return Err(Error::TooFewObservations {
            needed: N_COEFFICIENTS,
            got: series.len(),
        });
    }
    let n = series.len();
    let mut x = DMatrix::zeros(n, N_COEFFICIENTS);
    let mut y = DVector::zeros(n);
    for (i, &(t, fill)) in series.iter().enumerate() {
        y[i] = logit_fill(fill)?;
        for (k, v) in harmonic_row(t, period).into_iter().enumerate() {
            x[(i, k)] = v;
        }
    }
    // Column-pivot-free QR is enough for five well-scaled columns; rank is
    // checked on the R diagonal.
    let qr = x.qr();
    let r = qr.r();
    let scale = r.diagonal().amax().max(1.0);
    if r.diagonal().iter().any(|d| d.abs() <= 1e-10 * scale) {
        return Err(Error::TooFewObservations {
            needed: N_COEFFICIENTS,
            got: n,
        });
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::TooFewObservations {
            needed: N_COEFFICIENTS,
            got: n,
        })?;
    Ok(SeasonalModel::from_coefficients(area, &coef, period))
}

/// Logit-scale deviations `logit(fill / 100) - lambda(t)`.
pub fn adjust(series: &[(f64, f64)], model: &SeasonalModel) -> Result<Vec<f64>> {
    series
        .iter()
        .map(|&(t, fill)| Ok(logit_fill(fill)? - model.level(t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constructed(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|t| {
                let t = t as f64;
                let x = 0.3 + 0.2 * (2.0 * PI * t / 52.0).sin();
                (t, inverse_logit_fill(x))
            })
            .collect()
    }

    #[test]
    fn constant_half_full_gives_zero_model() {
        let s: Vec<_> = (0..60).map(|t| (t as f64, 50.0)).collect();
        let m = fit_seasonal("NO1".into(), &s, DEFAULT_PERIOD).unwrap();
        for c in [
            m.gamma0,
            m.gamma_sin[0],
            m.gamma_sin[1],
            m.gamma_cos[0],
            m.gamma_cos[1],
        ] {
            assert!(c.abs() < 1e-12, "{m:?}");
        }
        assert!(adjust(&s, &m).unwrap().iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn recovers_constructed_sinusoid() {
        let s = constructed(156);
        let m = fit_seasonal("NO1".into(), &s, DEFAULT_PERIOD).unwrap();
        assert!((m.gamma0 - 0.3).abs() < 1e-9);
        assert!((m.gamma_sin[0] - 0.2).abs() < 1e-9);
        for c in [m.gamma_sin[1], m.gamma_cos[0], m.gamma_cos[1]] {
            assert!(c.abs() < 1e-9);
        }
        assert!(adjust(&s, &m).unwrap().iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn boundary_fill_rejected() {
        let mut s = constructed(20);
        s[4].1 = 100.0;
        assert!(matches!(
            fit_seasonal("NO1".into(), &s, DEFAULT_PERIOD),
            Err(Error::FillOutOfRange { .. })
        ));
        s[4].1 = 0.0;
        assert!(adjust(
            &s,
            &fit_seasonal("NO1".into(), &constructed(20), 52.0).unwrap()
        )
        .is_err());
    }

    #[test]
    fn too_few_points() {
        let s = constructed(4);
        assert!(matches!(
            fit_seasonal("NO1".into(), &s, DEFAULT_PERIOD),
            Err(Error::TooFewObservations { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn single_shock_shows_up_in_residual() {
        let s = constructed(104);
        let m = fit_seasonal("NO1".into(), &s, DEFAULT_PERIOD).unwrap();
        let mut shocked = s.clone();
        shocked[10].1 = inverse_logit_fill(m.level(10.0) + 0.1);
        let r = adjust(&shocked, &m).unwrap();
        assert!((r[10] - 0.1).abs() < 1e-9);
        assert!(r[11].abs() < 1e-9);
    }
}
