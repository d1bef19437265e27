//! Bayesian linear regression without intercept under the flat prior
//! `p(beta, sigma^2) ∝ 1 / sigma^2`.
//!
//! The posterior is normal–scaled-inverse-chi-squared:
//!
//! ```text
//! sigma^2 | y     ~ dof * s2 / chi2(dof)
//! beta | sigma^2  ~ N(beta_hat, sigma^2 (X'X)^-1)
//! ```
//!
//! with `beta_hat` the least-squares estimate, `s2` the residual variance
//! and `dof = n - p`. Sampling draws `sigma^2` first and then `beta`
//! conditional on it, which gives exact independent draws.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{regression_data, MarketPanel, RowFilter};
use crate::rng::{self, StreamRng};
use crate::types::{AreaId, Covariate, Epoch, Horizon};

pub const DEFAULT_MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Largest accepted condition number of `X'X`.
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_condition: DEFAULT_MAX_CONDITION,
        }
    }
}

/// Sufficient statistics of one regression posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPosterior {
    pub beta_hat: DVector<f64>,
    /// `(X'X)^-1`, symmetric positive definite.
    pub xtx_inv: DMatrix<f64>,
    pub s2: f64,
    pub dof: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub beta: DVector<f64>,
    pub sigma2: f64,
}

/// Least-squares fit of `y = X beta + e`.
pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearPosterior> {
    fit_with(x, y, FitOptions::default())
}

pub fn fit_with(x: &DMatrix<f64>, y: &DVector<f64>, opts: FitOptions) -> Result<LinearPosterior> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "X has {n} rows but y has {}",
            y.len()
        )));
    }
    if p == 0 {
        return Err(Error::Dimension("design matrix has no columns".into()));
    }
    if n <= p {
        return Err(Error::TooFewRows { rows: n, cols: p });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Dimension(
            "non-finite value in regression data".into(),
        ));
    }

    let xtx = x.tr_mul(x);
    let eig = SymmetricEigen::new(xtx.clone());
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();
    let condition = if min_ev > 0.0 {
        max_ev / min_ev
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition > opts.max_condition {
        return Err(Error::RankDeficient { condition });
    }
    let chol = Cholesky::new(xtx).ok_or(Error::RankDeficient { condition })?;
    let beta_hat = chol.solve(&x.tr_mul(y));
    let mut xtx_inv = chol.inverse();
    symmetrize(&mut xtx_inv);

    let resid = y - x * &beta_hat;
    let dof = n - p;
    let s2 = resid.norm_squared() / dof as f64;
    Ok(LinearPosterior {
        beta_hat,
        xtx_inv,
        s2,
        dof,
    })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

impl LinearPosterior {
    pub fn new(beta_hat: Vec<f64>, xtx_inv: DMatrix<f64>, s2: f64, dof: usize) -> Result<Self> {
        let p = beta_hat.len();
        if xtx_inv.shape() != (p, p) {
            return Err(Error::Dimension(format!(
                "xtx_inv is {:?}, expected {p}x{p}",
                xtx_inv.shape()
            )));
        }
        if !(s2 >= 0.0 && s2.is_finite()) || dof == 0 {
            return Err(Error::Dimension(format!(
                "need s2 >= 0 and dof >= 1, got {s2}, {dof}"
            )));
        }
        let post = LinearPosterior {
            beta_hat: DVector::from_vec(beta_hat),
            xtx_inv,
            s2,
            dof,
        };
        post.sampler()?;
        Ok(post)
    }

    pub fn n_coefficients(&self) -> usize {
        self.beta_hat.len()
    }

    /// Prepared sampler; fails if `xtx_inv` is not symmetric positive definite.
    pub fn sampler(&self) -> Result<PosteriorSampler> {
        let sym = (&self.xtx_inv - self.xtx_inv.transpose()).amax();
        if sym > 1e-9 * self.xtx_inv.amax().max(1e-300) {
            return Err(Error::Dimension("xtx_inv is not symmetric".into()));
        }
        let chol = Cholesky::new(self.xtx_inv.clone()).ok_or(Error::RankDeficient {
            condition: f64::INFINITY,
        })?;
        let chi2 = ChiSquared::new(self.dof as f64).expect("dof >= 1");
        Ok(PosteriorSampler {
            beta_hat: self.beta_hat.clone(),
            factor: chol.l(),
            s2: self.s2,
            dof: self.dof,
            chi2,
        })
    }
}

/// Draws from one posterior; cheap to use repeatedly.
#[derive(Debug, Clone)]
pub struct PosteriorSampler {
    beta_hat: DVector<f64>,
    factor: DMatrix<f64>,
    s2: f64,
    dof: usize,
    chi2: ChiSquared<f64>,
}

impl PosteriorSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PosteriorDraw {
        if self.s2 == 0.0 {
            return PosteriorDraw {
                beta: self.beta_hat.clone(),
                sigma2: 0.0,
            };
        }
        let sigma2 = self.dof as f64 * self.s2 / self.chi2.sample(rng);
        let z = DVector::from_fn(self.beta_hat.len(), |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        });
        let beta = &self.beta_hat + (&self.factor * z) * sigma2.sqrt();
        PosteriorDraw { beta, sigma2 }
    }
}

/// `n_draws` independent posterior draws from the stream keyed by `seed`.
pub fn sample(
    posterior: &LinearPosterior,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<PosteriorDraw>> {
    let sampler = posterior.sampler()?;
    let mut rng: StreamRng = rng::stream(seed, 0);
    Ok((0..n_draws).map(|_| sampler.draw(&mut rng)).collect())
}

/// A fitted posterior for one observed area, horizon and epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PosteriorRecord", try_from = "PosteriorRecord")]
pub struct PosteriorSummary {
    pub area: AreaId,
    pub horizon: Horizon,
    pub epoch: Epoch,
    pub covariates: Vec<Covariate>,
    pub n_obs: usize,
    pub posterior: LinearPosterior,
}

impl PosteriorSummary {
    pub fn coefficient(&self, c: Covariate) -> Option<f64> {
        self.covariates
            .iter()
            .position(|&k| k == c)
            .map(|i| self.posterior.beta_hat[i])
    }
}

/// Canonical persisted form: `xtx_inv` as its row-major upper triangle.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PosteriorRecord {
    area: AreaId,
    horizon: Horizon,
    epoch: String,
    covariates: Vec<Covariate>,
    beta_hat: Vec<f64>,
    xtx_inv_upper: Vec<f64>,
    s2: f64,
    dof: usize,
    n_obs: usize,
}

impl From<PosteriorSummary> for PosteriorRecord {
    fn from(s: PosteriorSummary) -> Self {
        let p = s.posterior.n_coefficients();
        let mut upper = Vec::with_capacity(p * (p + 1) / 2);
        for i in 0..p {
            for j in i..p {
                upper.push(s.posterior.xtx_inv[(i, j)]);
            }
        }
        PosteriorRecord {
            area: s.area,
            horizon: s.horizon,
            epoch: s.epoch.id(),
            covariates: s.covariates,
            beta_hat: s.posterior.beta_hat.iter().copied().collect(),
            xtx_inv_upper: upper,
            s2: s.posterior.s2,
            dof: s.posterior.dof,
            n_obs: s.n_obs,
        }
    }
}

impl TryFrom<PosteriorRecord> for PosteriorSummary {
    type Error = Error;
    fn try_from(r: PosteriorRecord) -> Result<Self> {
        let p = r.beta_hat.len();
        if r.covariates.len() != p || r.xtx_inv_upper.len() != p * (p + 1) / 2 {
            return Err(Error::Dimension(format!(
                "posterior record for {} has inconsistent lengths",
                r.area
            )));
        }
        let mut m = DMatrix::zeros(p, p);
        let mut k = 0;
        for i in 0..p {
            for j in i..p {
                m[(i, j)] = r.xtx_inv_upper[k];
                m[(j, i)] = r.xtx_inv_upper[k];
                k += 1;
            }
        }
        Ok(PosteriorSummary {
            area: r.area,
            horizon: r.horizon,
            epoch: r.epoch.parse()?,
            covariates: r.covariates,
            n_obs: r.n_obs,
            posterior: LinearPosterior::new(r.beta_hat, m, r.s2, r.dof)?,
        })
    }
}

/// All fitted posteriors of a panel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PosteriorSet {
    pub summaries: Vec<PosteriorSummary>,
}

impl PosteriorSet {
    pub fn get(&self, area: &AreaId, horizon: Horizon, epoch: &Epoch) -> Option<&PosteriorSummary> {
        self.summaries
            .iter()
            .find(|s| &s.area == area && s.horizon == horizon && &s.epoch == epoch)
    }

    pub fn filter<'a>(
        &'a self,
        area: Option<&'a AreaId>,
        horizon: Option<Horizon>,
    ) -> impl Iterator<Item = &'a PosteriorSummary> + 'a {
        self.summaries.iter().filter(move |s| {
            area.is_none_or(|a| &s.area == a) && horizon.is_none_or(|h| s.horizon == h)
        })
    }
}

/// Fit one area/horizon/epoch regression from the panel.
pub fn fit_area(
    panel: &MarketPanel,
    area: &AreaId,
    horizon: Horizon,
    epoch: Epoch,
    filter: RowFilter,
    opts: FitOptions,
) -> Result<PosteriorSummary> {
    let (design, y) = regression_data(panel, area, horizon, epoch, filter)?;
    let x = design.to_matrix();
    let posterior = fit_with(&x, &DVector::from_vec(y), opts)?;
    Ok(PosteriorSummary {
        area: area.clone(),
        horizon,
        epoch,
        covariates: design.covariates,
        n_obs: design.dates.len(),
        posterior,
    })
}

/// Fit every observed area for each horizon and epoch. Combinations that
/// cannot be fitted are reported rather than failing the whole run.
pub fn fit_panel(
    panel: &MarketPanel,
    horizons: &[Horizon],
    filter: RowFilter,
    opts: FitOptions,
) -> (PosteriorSet, Vec<(AreaId, Horizon, Epoch, Error)>) {
    let mut set = PosteriorSet::default();
    let mut skipped = Vec::new();
    for &h in horizons {
        for epoch in panel.epochs() {
            for info in panel.areas.observed() {
                match fit_area(panel, &info.id, h, epoch, filter, opts) {
                    Ok(s) => set.summaries.push(s),
                    Err(e) => skipped.push((info.id.clone(), h, epoch, e)),
                }
            }
        }
    }
    (set, skipped)
}
