//! Command line workflow and HTTP service around `cfdcast`.
//!
//! Everything is persisted under a single data directory:
//!
//! ```text
//! <data>/areas.csv spot.csv forward.csv ...   input series
//! <data>/job.toml                              optional run settings
//! <data>/panel.json                            written by `ingest`
//! <data>/posteriors.json                       written by `fit`
//! <data>/coefficients.{csv,txt}                written by `fit`
//! <data>/profiles/<AREA>.toml                  written by `elicit` / PUT
//! <data>/forecasts/<AREA>_<H>.csv              written by `forecast`
//! <data>/backtests/<AREA>_<H>.csv              written by `backtest`
//! ```

pub mod api;
pub mod commands;
mod error;
pub mod job;
pub mod workspace;

pub use error::{error_code, CliError};
pub use job::JobConfig;
pub use workspace::Workspace;
