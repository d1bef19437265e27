use cfdcast::elicitation::DEFAULT_DAYS_PER_MONTH;
use cfdcast::forecast::{DEFAULT_DRAWS, DEFAULT_LEVELS};
use cfdcast::market::{IngestOptions, RowFilter};
use cfdcast::posterior::{FitOptions, DEFAULT_MAX_CONDITION};
use cfdcast::seasonal::DEFAULT_PERIOD;
use cfdcast::{ForecastConfig, Horizon};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Run settings, read from `job.toml` in the data directory. Command line
/// flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub horizons: Vec<Horizon>,
    pub n_draws: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub days_per_month: f64,
    pub drop_stale: bool,
    pub noise: bool,
    /// Upper bound on raw draws per day returned by the HTTP service.
    pub draw_cap: usize,
    pub max_condition: f64,
    /// Seasonal cycle of reservoir fill, in weeks.
    pub seasonal_period: f64,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            horizons: Horizon::ALL.to_vec(),
            n_draws: DEFAULT_DRAWS,
            seed: 0,
            levels: DEFAULT_LEVELS.to_vec(),
            days_per_month: DEFAULT_DAYS_PER_MONTH,
            drop_stale: false,
            noise: false,
            draw_cap: 1000,
            max_condition: DEFAULT_MAX_CONDITION,
            seasonal_period: DEFAULT_PERIOD,
        }
    }
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let job: JobConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.horizons.is_empty() {
            return Err(CliError::Config("no horizons configured".into()));
        }
        if !(self.seasonal_period.is_finite() && self.seasonal_period > 0.0)
            || !(self.max_condition.is_finite() && self.max_condition > 1.0)
        {
            return Err(CliError::Config(
                "seasonal_period must be positive and max_condition above 1".into(),
            ));
        }
        self.forecast_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn forecast_config(&self) -> ForecastConfig {
        ForecastConfig {
            n_draws: self.n_draws,
            seed: self.seed,
            levels: self.levels.clone(),
            days_per_month: self.days_per_month,
            noise: self.noise,
            keep_draws: false,
            threads: None,
        }
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            seasonal_period: self.seasonal_period,
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_condition: self.max_condition,
        }
    }

    pub fn row_filter(&self) -> RowFilter {
        RowFilter {
            drop_stale: self.drop_stale,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let job = JobConfig::from_toml("n_draws = 50\nhorizons = [\"M1\", \"Q2\"]\n").unwrap();
        assert_eq!(job.n_draws, 50);
        assert_eq!(job.horizons, vec![Horizon::M1, Horizon::Q2]);
        assert_eq!(job.levels, DEFAULT_LEVELS.to_vec());
    }

    #[test]
    fn rejects_bad_levels_and_unknown_keys() {
        assert!(JobConfig::from_toml("levels = [0.9, 0.1]").is_err());
        assert!(JobConfig::from_toml("n_draws = 0").is_err());
        assert!(JobConfig::from_toml("sead = 3").is_err());
    }
}
