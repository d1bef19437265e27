use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

use crate::types::{AreaId, Covariate, Horizon};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single rejected input row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDiagnostic {
    pub file: String,
    /// 1-based line number, header is line 1.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{} row(s) rejected; first: {}", .0.len(), .0[0])]
    RejectedRows(Vec<RowDiagnostic>),
    #[error("invalid area configuration: {0}")]
    AreaConfig(String),
    #[error("unknown area {0}")]
    UnknownArea(AreaId),
    #[error("area {0} has hydro power but no reservoir series")]
    MissingReservoir(AreaId),
    #[error("epoch {start}..{end} straddles the area redefinition on {redefinition}")]
    EpochStraddlesRedefinition {
        start: NaiveDate,
        end: NaiveDate,
        redefinition: NaiveDate,
    },
    #[error("no complete rows for {area} {horizon} in {start}..{end}")]
    InsufficientData {
        area: AreaId,
        horizon: Horizon,
        start: NaiveDate,
        end: NaiveDate,
    },

    #[error("fill level {value} outside (0, 100)")]
    FillOutOfRange { value: f64 },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("design matrix is rank deficient (condition number {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("regression needs more rows ({rows}) than covariates ({cols})")]
    TooFewRows { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("row {covariate}: all similarity weights are zero")]
    AllZeroRow { covariate: Covariate },
    #[error("row {covariate}: weight {value} for {area} is negative or not finite")]
    NegativeWeight {
        covariate: Covariate,
        area: AreaId,
        value: f64,
    },
    #[error("row {covariate}: months of data must be positive, got {value}")]
    NonPositiveMonths { covariate: Covariate, value: f64 },
    #[error("row {covariate}: {area} has no hydro power but weight {value}")]
    StructuralZeroViolated {
        covariate: Covariate,
        area: AreaId,
        value: f64,
    },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("incomplete elicitation: {0}")]
    IncompleteTranscript(String),

    #[error("no posterior for {area} {horizon} in epoch {epoch}")]
    MissingPosterior {
        area: AreaId,
        horizon: Horizon,
        epoch: String,
    },
    #[error("target {area} lacks covariate {covariate}")]
    MissingCovariate { area: AreaId, covariate: Covariate },
    #[error("invalid forecast configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot parse document: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code, qualified by the module that raised it.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "market.io",
            Error::RejectedRows(_) => "market.rejected_rows",
            Error::AreaConfig(_) => "market.area_config",
            Error::UnknownArea(_) => "market.unknown_area",
            Error::MissingReservoir(_) => "market.missing_reservoir",
            Error::EpochStraddlesRedefinition { .. } => "market.epoch_straddles_redefinition",
            Error::InsufficientData { .. } => "market.insufficient_data",
            Error::FillOutOfRange { .. } => "seasonal.fill_out_of_range",
            Error::TooFewObservations { .. } => "seasonal.too_few_observations",
            Error::RankDeficient { .. } => "posterior.rank_deficient",
            Error::TooFewRows { .. } => "posterior.too_few_rows",
            Error::Dimension(_) => "posterior.dimension",
            Error::AllZeroRow { .. } => "elicitation.all_zero_row",
            Error::NegativeWeight { .. } => "elicitation.negative_weight",
            Error::NonPositiveMonths { .. } => "elicitation.non_positive_months",
            Error::StructuralZeroViolated { .. } => "elicitation.structural_zero",
            Error::InvalidProfile(_) => "elicitation.invalid_profile",
            Error::IncompleteTranscript(_) => "elicitation.incomplete_transcript",
            Error::MissingPosterior { .. } => "forecast.missing_posterior",
            Error::MissingCovariate { .. } => "forecast.missing_covariate",
            Error::InvalidConfig(_) => "forecast.invalid_config",
            Error::Parse(_) => "io.parse",
        }
    }
}
