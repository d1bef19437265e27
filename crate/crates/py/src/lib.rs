//! Python bindings: `import cfdcast`.

use std::path::PathBuf;

use cfdcast::backtest::Quotes;
use cfdcast::forecast::run_observed;
use cfdcast::market::{flag_stale as core_flag_stale, RowFilter};
use cfdcast::posterior::{fit_panel, FitOptions, LinearPosterior};
use cfdcast::report::coefficient_table;
use cfdcast::synthetic::{SyntheticConfig, SyntheticMarket, UNOBSERVED};
use cfdcast::{
    AreaId, Covariate, ElicitationProfile, Epoch, ForecastConfig, ForecastResult, Horizon,
    MarketPanel, PosteriorSet, ProfileRow,
};
use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(cfdcast, CfdcastError, PyValueError);

fn err(e: cfdcast::Error) -> PyErr {
    CfdcastError::new_err(format!("{}: {e}", e.code()))
}

fn parse<T: std::str::FromStr<Err = cfdcast::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Convert any serializable value into plain Python objects.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

#[pyclass(name = "Posterior", frozen, from_py_object)]
#[derive(Clone)]
struct PyPosterior {
    inner: LinearPosterior,
}

#[pymethods]
impl PyPosterior {
    #[new]
    fn new(beta_hat: Vec<f64>, xtx_inv: Vec<Vec<f64>>, s2: f64, dof: usize) -> PyResult<Self> {
        let inner = LinearPosterior::new(beta_hat, matrix(&xtx_inv)?, s2, dof).map_err(err)?;
        Ok(PyPosterior { inner })
    }

    #[getter]
    fn beta_hat(&self) -> Vec<f64> {
        self.inner.beta_hat.iter().copied().collect()
    }

    #[getter]
    fn xtx_inv(&self) -> Vec<Vec<f64>> {
        let m = &self.inner.xtx_inv;
        (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect()
    }

    #[getter]
    fn s2(&self) -> f64 {
        self.inner.s2
    }

    #[getter]
    fn dof(&self) -> usize {
        self.inner.dof
    }

    /// Returns `(betas, sigma2s)`.
    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
        let draws = py
            .detach(|| cfdcast::sample(&self.inner, n, seed))
            .map_err(err)?;
        let betas = draws
            .iter()
            .map(|d| d.beta.iter().copied().collect())
            .collect();
        Ok((betas, draws.iter().map(|d| d.sigma2).collect()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Posterior(beta_hat={:?}, s2={}, dof={})",
            self.beta_hat(),
            self.inner.s2,
            self.inner.dof
        )
    }
}

/// Least-squares fit of `y = X beta + e` without intercept.
#[pyfunction]
fn fit(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<PyPosterior> {
    let inner = cfdcast::fit(&matrix(&x)?, &DVector::from_vec(y)).map_err(err)?;
    Ok(PyPosterior { inner })
}

#[pyclass(name = "Profile", frozen, from_py_object)]
#[derive(Clone)]
struct PyProfile {
    inner: ElicitationProfile,
}

#[pymethods]
impl PyProfile {
    /// `rows` holds `(covariate, rho, months)` with covariate one of FW, SA, SS, WA.
    #[new]
    fn new(
        target: &str,
        observed_order: Vec<String>,
        rows: Vec<(String, Vec<f64>, f64)>,
    ) -> PyResult<Self> {
        let rows = rows
            .into_iter()
            .map(|(c, rho, months)| {
                Ok(ProfileRow {
                    covariate: parse::<Covariate>(&c)?,
                    rho,
                    months,
                })
            })
            .collect::<PyResult<_>>()?;
        Ok(PyProfile {
            inner: ElicitationProfile {
                target: parse(target)?,
                observed_order: observed_order
                    .iter()
                    .map(|a| parse(a))
                    .collect::<PyResult<_>>()?,
                rows,
                transcript: None,
            },
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyProfile {
            inner: ElicitationProfile::from_toml(text).map_err(err)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn target(&self) -> String {
        self.inner.target.to_string()
    }

    #[getter]
    fn observed_order(&self) -> Vec<String> {
        self.inner
            .observed_order
            .iter()
            .map(|a| a.to_string())
            .collect()
    }

    #[getter]
    fn rows(&self) -> Vec<(String, Vec<f64>, f64)> {
        self.inner
            .rows
            .iter()
            .map(|r| (r.covariate.as_str().to_string(), r.rho.clone(), r.months))
            .collect()
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// Weight draws indexed `[draw][row][area]`.
    #[pyo3(signature = (n, seed, days_per_month = 21.0))]
    fn sample_weights(
        &self,
        py: Python<'_>,
        n: usize,
        seed: u64,
        days_per_month: f64,
    ) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let draws = py
            .detach(|| cfdcast::sample_weights(&self.inner, n, seed, days_per_month))
            .map_err(err)?;
        Ok(draws.into_iter().map(|d| d.rows).collect())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Profile(target={}, rows={})",
            self.inner.target,
            self.inner.rows.len()
        )
    }
}

#[pyclass(name = "Posteriors", frozen)]
struct PyPosteriors {
    inner: PosteriorSet,
}

#[pymethods]
impl PyPosteriors {
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn get(&self, area: &str, horizon: &str, epoch: &str) -> PyResult<Option<PyPosterior>> {
        let e: Epoch = parse(epoch)?;
        Ok(self
            .inner
            .get(&parse(area)?, parse(horizon)?, &e)
            .map(|s| PyPosterior {
                inner: s.posterior.clone(),
            }))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.summaries.len()
    }
}

#[pyclass(name = "Forecast", frozen)]
struct PyForecast {
    inner: ForecastResult,
}

#[pymethods]
impl PyForecast {
    #[getter]
    fn target(&self) -> String {
        self.inner.target.to_string()
    }

    #[getter]
    fn dates(&self) -> Vec<NaiveDate> {
        self.inner.days.iter().map(|d| d.date).collect()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.days.iter().map(|d| d.mean).collect()
    }

    #[getter]
    fn levels(&self) -> Vec<f64> {
        self.inner.levels.clone()
    }

    /// One list per level.
    #[getter]
    fn quantiles(&self) -> Vec<Vec<f64>> {
        (0..self.inner.levels.len())
            .map(|k| self.inner.days.iter().map(|d| d.quantiles[k]).collect())
            .collect()
    }

    fn mean_interval_width(&self) -> f64 {
        self.inner.mean_interval_width()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.days.len()
    }
}

#[pyclass(name = "Panel", frozen)]
struct PyPanel {
    inner: MarketPanel,
}

#[pymethods]
impl PyPanel {
    /// Read `areas.csv`, `spot.csv`, `forward.csv` and the optional files from `dir`.
    #[staticmethod]
    fn ingest(dir: PathBuf) -> PyResult<Self> {
        let (inner, _) = cfdcast::ingest(
            &cfdcast::market::Sources::from_dir(&dir).map_err(err)?,
            Default::default(),
        )
        .map_err(err)?;
        Ok(PyPanel { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPanel {
            inner: MarketPanel::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_canonical_json()
    }

    #[getter]
    fn dates(&self) -> Vec<NaiveDate> {
        self.inner.dates.clone()
    }

    #[getter]
    fn epochs(&self) -> Vec<String> {
        self.inner.epochs().iter().map(Epoch::id).collect()
    }

    fn areas<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.areas.iter().collect::<Vec<_>>())
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.summary())
    }

    fn validate_profile(&self, profile: &PyProfile) -> PyResult<PyProfile> {
        Ok(PyProfile {
            inner: cfdcast::validate_profile(&profile.inner, &self.inner.areas).map_err(err)?,
        })
    }

    /// Fit every observed area per horizon and epoch. Combinations that
    /// cannot be fitted are left out.
    #[pyo3(signature = (horizons = None, drop_stale = false))]
    fn fit(
        &self,
        py: Python<'_>,
        horizons: Option<Vec<String>>,
        drop_stale: bool,
    ) -> PyResult<PyPosteriors> {
        let horizons: Vec<Horizon> = match horizons {
            Some(hs) => hs.iter().map(|h| parse(h)).collect::<PyResult<_>>()?,
            None => self.inner.fw.keys().copied().collect(),
        };
        let (inner, _) = py.detach(|| {
            fit_panel(
                &self.inner,
                &horizons,
                RowFilter { drop_stale },
                FitOptions::default(),
            )
        });
        Ok(PyPosteriors { inner })
    }

    /// Coefficient table as text, `NA` where a coefficient does not exist.
    fn coefficient_table(&self, posteriors: &PyPosteriors) -> String {
        let horizons: Vec<Horizon> = self.inner.fw.keys().copied().collect();
        coefficient_table(
            &posteriors.inner,
            &self.inner.areas,
            &horizons,
            &self.inner.epochs(),
        )
        .to_text()
    }

    /// Predictive band for an unobserved area, or for an observed area
    /// from its own posterior when `profile` is None.
    #[pyo3(signature = (posteriors, area, horizon, profile = None, n = 10_000, seed = 0, levels = None, threads = None))]
    #[allow(clippy::too_many_arguments)]
    fn forecast(
        &self,
        py: Python<'_>,
        posteriors: &PyPosteriors,
        area: &str,
        horizon: &str,
        profile: Option<&PyProfile>,
        n: usize,
        seed: u64,
        levels: Option<Vec<f64>>,
        threads: Option<usize>,
    ) -> PyResult<PyForecast> {
        let area: AreaId = parse(area)?;
        let horizon: Horizon = parse(horizon)?;
        let mut cfg = ForecastConfig {
            n_draws: n,
            seed,
            threads,
            ..Default::default()
        };
        if let Some(l) = levels {
            cfg.levels = l;
        }
        let inner = py
            .detach(|| match profile {
                Some(p) if p.inner.target != area => Err(cfdcast::Error::InvalidProfile(format!(
                    "profile is for {}, not {area}",
                    p.inner.target
                ))),
                Some(p) => {
                    cfdcast::run_forecast(&self.inner, &posteriors.inner, &p.inner, horizon, &cfg)
                }
                None => run_observed(&self.inner, &posteriors.inner, &area, horizon, &cfg),
            })
            .map_err(err)?;
        Ok(PyForecast { inner })
    }

    /// Backtest records for observed quotes, or for a forecast's mean.
    #[pyo3(signature = (area, horizon, forecast = None))]
    fn backtest<'py>(
        &self,
        py: Python<'py>,
        area: &str,
        horizon: &str,
        forecast: Option<&PyForecast>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let quotes = forecast.map_or(Quotes::Observed, |f| Quotes::Forecast(&f.inner));
        let out =
            cfdcast::backtest(&self.inner, &parse(area)?, parse(horizon)?, quotes).map_err(err)?;
        to_py(py, &out.records)
    }
}

#[pyfunction]
fn flag_stale(prices: Vec<f64>) -> Vec<bool> {
    core_flag_stale(&prices)
}

/// `(start, end)` of the contract quoted on `quote_date`.
#[pyfunction]
fn delivery_period(quote_date: NaiveDate, horizon: &str) -> PyResult<(NaiveDate, NaiveDate)> {
    let r = cfdcast::delivery_period(quote_date, parse(horizon)?);
    Ok((r.start, r.end))
}

/// Seasonal model of weekly `(t, fill_pct)` observations plus the residuals.
#[pyfunction]
#[pyo3(signature = (series, period = 52.0))]
fn fit_seasonal<'py>(
    py: Python<'py>,
    series: Vec<(f64, f64)>,
    period: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let model = cfdcast::fit_seasonal(AreaId::from("area"), &series, period).map_err(err)?;
    let residuals = cfdcast::adjust(&series, &model).map_err(err)?;
    let out = to_py(py, &model)?;
    out.set_item("residuals", residuals)?;
    out.del_item("area")?;
    Ok(out)
}

/// Write a synthetic market into `dir` and return profiles matching the
/// true weights of the unobserved areas.
#[pyfunction]
#[pyo3(signature = (dir, seed = 2011, days = 731, months = 12.0))]
fn synthetic_market(dir: PathBuf, seed: u64, days: usize, months: f64) -> PyResult<Vec<PyProfile>> {
    let market = SyntheticMarket::generate(SyntheticConfig {
        seed,
        days,
        ..Default::default()
    })
    .map_err(err)?;
    market.write_dir(&dir).map_err(err)?;
    UNOBSERVED
        .iter()
        .map(|t| {
            let inner =
                cfdcast::validate_profile(&market.matching_profile(t, months), &market.panel.areas)
                    .map_err(err)?;
            Ok(PyProfile { inner })
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "cfdcast")]
fn cfdcast_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CfdcastError", m.py().get_type::<CfdcastError>())?;
    m.add_class::<PyPosterior>()?;
    m.add_class::<PyPosteriors>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyPanel>()?;
    m.add_class::<PyForecast>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(flag_stale, m)?)?;
    m.add_function(wrap_pyfunction!(delivery_period, m)?)?;
    m.add_function(wrap_pyfunction!(fit_seasonal, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_market, m)?)?;
    Ok(())
}
