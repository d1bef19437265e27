//! Monte Carlo predictive distribution of the mean CfD in an unobserved area.
//!
//! One iteration draws a weight vector per covariate from the profile's
//! Dirichlet rows, and one coefficient vector per observed area and epoch
//! from its regression posterior. The target's coefficient for covariate
//! `j` is `sum_k w_kj * beta_kj`, and the predicted mean CfD on day `t` is
//! `sum_j beta_j * x_tj`. Weight and coefficient draws are shared by all
//! days of the iteration. Iteration `i` uses random stream `i` of the
//! seed, so results do not depend on how iterations are scheduled.

use std::fmt::Write as _;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elicitation::{self, ElicitationProfile, ProfileRow, ProfileSampler};
use crate::error::{Error, Result};
use crate::market::{design_matrix, MarketPanel};
use crate::posterior::{PosteriorSampler, PosteriorSet};
use crate::rng;
use crate::types::{AreaId, Covariate, Epoch, Horizon};

pub const DEFAULT_LEVELS: [f64; 3] = [0.025, 0.5, 0.975];
pub const DEFAULT_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub n_draws: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub days_per_month: f64,
    /// Add observation noise to the predicted mean.
    pub noise: bool,
    /// Keep every draw in the result.
    pub keep_draws: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            n_draws: DEFAULT_DRAWS,
            seed: 0,
            levels: DEFAULT_LEVELS.to_vec(),
            days_per_month: elicitation::DEFAULT_DAYS_PER_MONTH,
            noise: false,
            keep_draws: false,
            threads: None,
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 {
            return Err(Error::InvalidConfig("n_draws must be at least 1".into()));
        }
        if self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0))
            || self.levels.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig(format!(
                "quantile levels must be strictly increasing in (0, 1): {:?}",
                self.levels
            )));
        }
        if !(self.days_per_month > 0.0 && self.days_per_month.is_finite()) {
            return Err(Error::InvalidConfig(
                "days_per_month must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyForecast {
    pub date: NaiveDate,
    pub mean: f64,
    /// One value per configured level.
    pub quantiles: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub profile_hash: String,
    pub epochs: Vec<String>,
    pub seed: u64,
    pub days_per_month: f64,
    pub noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub target: AreaId,
    pub horizon: Horizon,
    pub levels: Vec<f64>,
    pub n_draws: usize,
    pub days: Vec<DailyForecast>,
    pub provenance: Provenance,
}

/// Column label for a quantile level, e.g. `q2.5`, `q50`.
pub fn level_label(level: f64) -> String {
    let pct = format!("{:.6}", level * 100.0);
    let pct = pct.trim_end_matches('0').trim_end_matches('.');
    format!("q{pct}")
}

/// Nearest-rank empirical quantile of sorted values.
pub fn nearest_rank(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let rank = (level * n as f64 - 1e-9).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

impl ForecastResult {
    /// `date,mean,q..,n_draws`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("date,mean");
        for &l in &self.levels {
            s.push(',');
            s.push_str(&level_label(l));
        }
        s.push_str(",n_draws\n");
        for d in &self.days {
            write!(s, "{},{}", d.date, d.mean).unwrap();
            for q in &d.quantiles {
                write!(s, ",{q}").unwrap();
            }
            writeln!(s, ",{}", self.n_draws).unwrap();
        }
        s
    }

    pub fn mean_interval_width(&self) -> f64 {
        let last = self.levels.len() - 1;
        self.days
            .iter()
            .map(|d| d.quantiles[last] - d.quantiles[0])
            .sum::<f64>()
            / self.days.len() as f64
    }

    /// Drop raw draws beyond the first `cap` per day.
    pub fn cap_draws(&mut self, cap: usize) {
        for d in &mut self.days {
            if let Some(v) = &mut d.draws {
                v.truncate(cap);
            }
        }
    }
}

/// Covariates and posteriors for one epoch of the target's history.
#[derive(Debug, Clone)]
pub struct Segment {
    pub epoch: Epoch,
    pub dates: Vec<NaiveDate>,
    /// Target covariate rows, columns as in [`Problem::covariates`].
    pub rows: Vec<Vec<f64>>,
    /// Posterior per observed area (profile order); `None` for areas with
    /// no weight in any row.
    pub posteriors: Vec<Option<AreaPosterior>>,
}

#[derive(Debug, Clone)]
pub struct AreaPosterior {
    pub sampler: PosteriorSampler,
    /// For each target covariate, the column in this area's coefficients.
    pub columns: Vec<Option<usize>>,
}

/// A fully resolved simulation problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub target: AreaId,
    pub horizon: Horizon,
    pub covariates: Vec<Covariate>,
    pub profile: ElicitationProfile,
    pub segments: Vec<Segment>,
}

/// Per-iteration combined coefficient draws, exposed for diagnostics.
pub fn combine(weights: &[f64], coefficients: &[f64]) -> f64 {
    weights.iter().zip(coefficients).map(|(w, b)| w * b).sum()
}

impl Problem {
    fn row_of(&self, c: Covariate) -> Result<usize> {
        self.profile
            .rows
            .iter()
            .position(|r| r.covariate == c)
            .ok_or_else(|| Error::InvalidProfile(format!("no row for covariate {c}")))
    }

    /// Check that every positively weighted area has a posterior with the
    /// weighted covariate.
    fn check(&self) -> Result<()> {
        for &c in &self.covariates {
            let row = &self.profile.rows[self.row_of(c)?];
            for seg in &self.segments {
                for (k, &rho) in row.rho.iter().enumerate() {
                    if rho <= 0.0 {
                        continue;
                    }
                    let area = &self.profile.observed_order[k];
                    let post =
                        seg.posteriors[k]
                            .as_ref()
                            .ok_or_else(|| Error::MissingPosterior {
                                area: area.clone(),
                                horizon: self.horizon,
                                epoch: seg.epoch.id(),
                            })?;
                    let j = self.covariates.iter().position(|&x| x == c).unwrap();
                    if post.columns[j].is_none() {
                        return Err(Error::MissingCovariate {
                            area: area.clone(),
                            covariate: c,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn n_dates(&self) -> usize {
        self.segments.iter().map(|s| s.dates.len()).sum()
    }

    /// Draws of the predicted mean for every date of one iteration.
    fn iteration(
        &self,
        weights: &ProfileSampler,
        row_index: &[usize],
        noise_mix: Option<&[f64]>,
        seed: u64,
        i: usize,
    ) -> Vec<f64> {
        let mut rng = rng::stream(seed, i as u64);
        let w = weights.draw(&mut rng);
        let p = self.covariates.len();
        let q = self.profile.observed_order.len();
        let mut out = Vec::with_capacity(self.n_dates());
        let mut coef = vec![0.0; q];
        let mut beta = vec![0.0; p];
        let mut sigma2 = vec![0.0; q];
        for seg in &self.segments {
            let draws: Vec<_> = seg
                .posteriors
                .iter()
                .map(|post| post.as_ref().map(|ap| (ap, ap.sampler.draw(&mut rng))))
                .collect();
            for (j, b) in beta.iter_mut().enumerate() {
                for (k, d) in draws.iter().enumerate() {
                    coef[k] = match d {
                        Some((ap, draw)) => ap.columns[j].map_or(0.0, |col| draw.beta[col]),
                        None => 0.0,
                    };
                }
                *b = combine(&w.rows[row_index[j]], &coef);
            }
            for (k, d) in draws.iter().enumerate() {
                sigma2[k] = d.as_ref().map_or(0.0, |(_, draw)| draw.sigma2);
            }
            for x in &seg.rows {
                let mut mu: f64 = beta.iter().zip(x).map(|(b, v)| b * v).sum();
                if let Some(mix) = noise_mix {
                    let u: f64 = rng.random();
                    let k = pick(mix, u);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu += sigma2[k].sqrt() * z;
                }
                out.push(mu);
            }
        }
        out
    }

    pub fn simulate(&self, cfg: &ForecastConfig) -> Result<ForecastResult> {
        cfg.validate()?;
        self.check()?;
        let weights = ProfileSampler::new(&self.profile, cfg.days_per_month)?;
        let row_index: Vec<usize> = self
            .covariates
            .iter()
            .map(|&c| self.row_of(c))
            .collect::<Result<_>>()?;
        let mix = cfg
            .noise
            .then(|| noise_mixture(&self.profile.rows, &row_index));
        let run = || -> Vec<Vec<f64>> {
            (0..cfg.n_draws)
                .into_par_iter()
                .map(|i| self.iteration(&weights, &row_index, mix.as_deref(), cfg.seed, i))
                .collect()
        };
        let draws = match cfg.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
                .install(run),
            None => run(),
        };

        let dates = self.segments.iter().flat_map(|s| s.dates.iter().copied());
        let days = dates
            .enumerate()
            .map(|(t, date)| {
                let column: Vec<f64> = draws.iter().map(|d| d[t]).collect();
                summarize(date, column, &cfg.levels, cfg.keep_draws)
            })
            .collect();
        Ok(ForecastResult {
            target: self.target.clone(),
            horizon: self.horizon,
            levels: cfg.levels.clone(),
            n_draws: cfg.n_draws,
            days,
            provenance: Provenance {
                profile_hash: self.profile.content_hash(),
                epochs: self.segments.iter().map(|s| s.epoch.id()).collect(),
                seed: cfg.seed,
                days_per_month: cfg.days_per_month,
                noise: cfg.noise,
            },
        })
    }
}

/// Mixture weights over observed areas for the noise variance: the
/// average `rho` across the rows used.
fn noise_mixture(rows: &[ProfileRow], used: &[usize]) -> Vec<f64> {
    let q = rows[0].rho.len();
    let mut mix = vec![0.0; q];
    for &r in used {
        for (m, v) in mix.iter_mut().zip(&rows[r].rho) {
            *m += v / used.len() as f64;
        }
    }
    mix
}

fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w / total;
        if u < acc {
            return k;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn summarize(date: NaiveDate, mut column: Vec<f64>, levels: &[f64], keep: bool) -> DailyForecast {
    let mean = column.iter().sum::<f64>() / column.len() as f64;
    let raw = keep.then(|| column.clone());
    column.sort_by(f64::total_cmp);
    DailyForecast {
        date,
        mean,
        quantiles: levels.iter().map(|&l| nearest_rank(&column, l)).collect(),
        draws: raw,
    }
}

/// Resolve the target's covariates and the observed posteriors per epoch.
pub fn build_problem(
    panel: &MarketPanel,
    posteriors: &PosteriorSet,
    profile: &ElicitationProfile,
    horizon: Horizon,
) -> Result<Problem> {
    let target = panel.areas.require(&profile.target)?;
    let covariates = Covariate::for_area(target.has_hydro).to_vec();
    if target.has_hydro && panel.wa.get(&target.id).is_none_or(|s| s.is_empty()) {
        return Err(Error::MissingCovariate {
            area: target.id.clone(),
            covariate: Covariate::Reservoir,
        });
    }
    if panel.fw.get(&horizon).is_none_or(|s| s.is_empty()) {
        return Err(Error::MissingCovariate {
            area: target.id.clone(),
            covariate: Covariate::Forward,
        });
    }
    let used_rows: Vec<&ProfileRow> = covariates
        .iter()
        .map(|&c| {
            profile
                .row(c)
                .ok_or_else(|| Error::InvalidProfile(format!("no row for covariate {c}")))
        })
        .collect::<Result<_>>()?;

    let mut segments = Vec::new();
    for epoch in panel.epochs() {
        let design = match design_matrix(panel, &target.id, horizon, epoch) {
            Ok(d) => d,
            Err(Error::InsufficientData { .. }) => continue,
            Err(e) => return Err(e),
        };
        let mut posts = Vec::with_capacity(profile.observed_order.len());
        for (k, area) in profile.observed_order.iter().enumerate() {
            let weighted = used_rows.iter().any(|r| r.rho[k] > 0.0);
            match posteriors.get(area, horizon, &epoch) {
                Some(s) if weighted => {
                    let columns = covariates
                        .iter()
                        .map(|c| s.covariates.iter().position(|x| x == c))
                        .collect();
                    posts.push(Some(AreaPosterior {
                        sampler: s.posterior.sampler()?,
                        columns,
                    }));
                }
                _ => posts.push(None),
            }
        }
        segments.push(Segment {
            epoch,
            dates: design.dates,
            rows: design.rows,
            posteriors: posts,
        });
    }
    if segments.is_empty() {
        let (start, end) = (panel.first_date(), panel.last_date());
        return Err(Error::InsufficientData {
            area: target.id.clone(),
            horizon,
            start: start.unwrap_or_default(),
            end: end.unwrap_or_default(),
        });
    }
    Ok(Problem {
        target: target.id.clone(),
        horizon,
        covariates,
        profile: profile.clone(),
        segments,
    })
}

/// Predictive distribution of the mean CfD for `profile.target`.
pub fn run_forecast(
    panel: &MarketPanel,
    posteriors: &PosteriorSet,
    profile: &ElicitationProfile,
    horizon: Horizon,
    cfg: &ForecastConfig,
) -> Result<ForecastResult> {
    let profile = elicitation::validate_profile(profile, &panel.areas)?;
    build_problem(panel, posteriors, &profile, horizon)?.simulate(cfg)
}

/// The same simulation for an observed area with all weight on itself,
/// which reduces to the area's own posterior of the mean CfD.
pub fn run_observed(
    panel: &MarketPanel,
    posteriors: &PosteriorSet,
    area: &AreaId,
    horizon: Horizon,
    cfg: &ForecastConfig,
) -> Result<ForecastResult> {
    let info = panel.areas.require(area)?;
    let profile = ElicitationProfile {
        target: area.clone(),
        observed_order: vec![area.clone()],
        rows: Covariate::for_area(info.has_hydro)
            .iter()
            .map(|&c| ProfileRow {
                covariate: c,
                rho: vec![1.0],
                months: 1.0,
            })
            .collect(),
        transcript: None,
    };
    let mut problem = build_problem(panel, posteriors, &profile, horizon)?;
    problem.segments.retain(|s| s.posteriors[0].is_some());
    if problem.segments.is_empty() {
        return Err(Error::MissingPosterior {
            area: area.clone(),
            horizon,
            epoch: "any".into(),
        });
    }
    problem.simulate(cfg)
}
