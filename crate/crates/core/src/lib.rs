//! Probabilistic forecasting of Contract-for-Difference (CfD) prices for
//! electricity price areas where no CfDs are traded.
//!
//! The pipeline is:
//!
//! 1. [`market`] ingests daily spot, forward, CfD and reservoir series into an
//!    aligned [`MarketPanel`], using [`seasonal`] to turn weekly reservoir
//!    fill levels into logit-scale deviations from the seasonal norm.
//! 2. [`posterior`] fits a no-intercept linear model of the CfD on the
//!    covariates for every observed area, horizon and area-definition epoch,
//!    under the flat prior on `(beta, log sigma)`.
//! 3. [`elicitation`] holds the expert's similarity judgements as Dirichlet
//!    distributions over observed areas, one per covariate.
//! 4. [`forecast`] combines the two by Monte Carlo to give daily predictive
//!    distributions of the mean CfD in an unobserved area, and
//!    [`backtest`] compares quotes against realised spot averages.

pub mod backtest;
pub mod calendar;
pub mod elicitation;
pub mod error;
pub mod forecast;
pub mod market;
pub mod posterior;
pub mod report;
pub mod rng;
pub mod seasonal;
pub mod synthetic;
mod types;

pub use backtest::{backtest, BacktestRecord};
pub use calendar::{delivery_period, DateRange};
pub use elicitation::{
    concentration, elicit_session, sample_weights, validate_profile, ElicitationProfile,
    ProfileRow, Transcript, WeightDraw,
};
pub use error::{Error, Result};
pub use forecast::{run_forecast, ForecastConfig, ForecastResult};
pub use market::{design_matrix, flag_stale, ingest, DesignMatrix, IngestReport, MarketPanel};
pub use posterior::{fit, sample, PosteriorDraw, PosteriorSet, PosteriorSummary};
pub use seasonal::{adjust, fit_seasonal, SeasonalModel};
pub use types::{AreaConfig, AreaId, AreaInfo, Covariate, Epoch, Horizon};
