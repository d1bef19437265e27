//! HTTP interface. All payloads are JSON; errors come back as
//! `{"error": {"code": "...", "message": "..."}}`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cfdcast::backtest::{BacktestRecord, Quotes};
use cfdcast::market::PanelSummary;
use cfdcast::{
    AreaId, AreaInfo, ElicitationProfile, ForecastResult, Horizon, MarketPanel, PosteriorSet,
    PosteriorSummary, ProfileRow,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::{forecast_area, Overrides};
use crate::{error_code, CliError, JobConfig, Workspace};

pub struct AppState {
    ws: Workspace,
    job: JobConfig,
    panel: Arc<MarketPanel>,
    posteriors: Arc<PosteriorSet>,
    /// Per-target write lock guarding the profile version counter.
    versions: Mutex<HashMap<AreaId, Arc<tokio::sync::Mutex<u64>>>>,
}

impl AppState {
    pub fn load(ws: Workspace) -> anyhow::Result<Self> {
        Ok(AppState {
            job: ws.job()?,
            panel: Arc::new(ws.load_panel()?),
            posteriors: Arc::new(ws.load_posteriors()?),
            ws,
            versions: Mutex::new(HashMap::new()),
        })
    }

    fn version_lock(&self, target: &AreaId) -> Arc<tokio::sync::Mutex<u64>> {
        let mut map = self.versions.lock().unwrap();
        map.entry(target.clone())
            .or_insert_with(|| {
                let start = u64::from(self.ws.profile_path(target).exists());
                Arc::new(tokio::sync::Mutex::new(start))
            })
            .clone()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/areas", get(areas))
        .route("/panel/summary", get(panel_summary))
        .route("/posteriors", get(posteriors))
        .route("/profiles/{target}", get(get_profile).put(put_profile))
        .route("/forecast", post(forecast))
        .route("/backtest", get(backtest))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
        }
    }
}

impl From<anyhow::Error> for ApiError {
    fn from(err: anyhow::Error) -> Self {
        let core = err.chain().find_map(|c| c.downcast_ref::<cfdcast::Error>());
        let cli = err.chain().find_map(|c| c.downcast_ref::<CliError>());
        let status = match (core, cli) {
            (Some(cfdcast::Error::UnknownArea(_)), _) | (_, Some(CliError::NoProfile(_))) => {
                StatusCode::NOT_FOUND
            }
            (Some(cfdcast::Error::Io { .. }), _) | (_, Some(CliError::Write { .. })) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError {
            status,
            code: error_code(&err),
            message: format!("{err:#}"),
        }
    }
}

impl From<cfdcast::Error> for ApiError {
    fn from(err: cfdcast::Error) -> Self {
        anyhow::Error::from(err).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_area(state: &AppState, raw: &str) -> Result<AreaId, ApiError> {
    let id = AreaId::new(raw).map_err(ApiError::from)?;
    state.panel.areas.require(&id)?;
    Ok(id)
}

fn parse_horizon(raw: &str) -> Result<Horizon, ApiError> {
    raw.parse().map_err(|_| {
        ApiError::bad_request("cli.invalid_horizon", format!("unknown horizon {raw:?}"))
    })
}

async fn areas(State(s): State<Arc<AppState>>) -> Json<Vec<AreaInfo>> {
    Json(s.panel.areas.iter().cloned().collect())
}

async fn panel_summary(State(s): State<Arc<AppState>>) -> Json<PanelSummary> {
    Json(s.panel.summary())
}

#[derive(Debug, Deserialize)]
pub struct PosteriorQuery {
    area: Option<String>,
    horizon: Option<String>,
}

async fn posteriors(
    State(s): State<Arc<AppState>>,
    Query(q): Query<PosteriorQuery>,
) -> ApiResult<Vec<PosteriorSummary>> {
    let area = q.area.as_deref().map(|a| parse_area(&s, a)).transpose()?;
    let horizon = q.horizon.as_deref().map(parse_horizon).transpose()?;
    Ok(Json(
        s.posteriors
            .filter(area.as_ref(), horizon)
            .cloned()
            .collect(),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StoredProfile {
    pub version: u64,
    pub profile: ElicitationProfile,
}

/// Body of `PUT /profiles/{target}`; the target comes from the path.
#[derive(Debug, Deserialize)]
pub struct ProfileInput {
    #[serde(default)]
    target: Option<AreaId>,
    observed_order: Vec<AreaId>,
    rows: Vec<ProfileRow>,
}

async fn get_profile(
    State(s): State<Arc<AppState>>,
    Path(target): Path<String>,
) -> ApiResult<StoredProfile> {
    let target = parse_area(&s, &target)?;
    let lock = s.version_lock(&target);
    let version = lock.lock().await;
    let profile = s.ws.require_profile(&target)?;
    Ok(Json(StoredProfile {
        version: *version,
        profile,
    }))
}

async fn put_profile(
    State(s): State<Arc<AppState>>,
    Path(target): Path<String>,
    Json(input): Json<ProfileInput>,
) -> ApiResult<StoredProfile> {
    let target = parse_area(&s, &target)?;
    if input.target.as_ref().is_some_and(|t| t != &target) {
        return Err(ApiError::bad_request(
            "elicitation.invalid_profile",
            "profile target does not match the path",
        ));
    }
    let profile = cfdcast::validate_profile(
        &ElicitationProfile {
            target: target.clone(),
            observed_order: input.observed_order,
            rows: input.rows,
            transcript: None,
        },
        &s.panel.areas,
    )?;
    let lock = s.version_lock(&target);
    let mut version = lock.lock().await;
    s.ws.save_profile(&profile)?;
    *version += 1;
    Ok(Json(StoredProfile {
        version: *version,
        profile,
    }))
}

#[derive(Debug, Deserialize)]
pub struct ForecastRequest {
    target: String,
    horizon: String,
    #[serde(default, alias = "N")]
    n: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    levels: Option<Vec<f64>>,
    /// Include raw draws, capped per day.
    #[serde(default)]
    draws: bool,
}

async fn forecast(
    State(s): State<Arc<AppState>>,
    Json(req): Json<ForecastRequest>,
) -> ApiResult<ForecastResult> {
    let target = parse_area(&s, &req.target)?;
    let horizon = parse_horizon(&req.horizon)?;
    let mut cfg = Overrides {
        n_draws: req.n,
        seed: req.seed,
        levels: req.levels,
        ..Default::default()
    }
    .apply(&s.job)?;
    cfg.keep_draws = req.draws;
    let state = s.clone();
    let result = tokio::task::spawn_blocking(move || {
        forecast_area(
            &state.ws,
            &state.panel,
            &state.posteriors,
            &target,
            horizon,
            &cfg,
        )
    })
    .await
    .map_err(|e| anyhow::anyhow!("forecast task failed: {e}"))??;
    let mut result = result;
    result.cap_draws(s.job.draw_cap);
    Ok(Json(result))
}

#[derive(Debug, Deserialize)]
pub struct BacktestQuery {
    area: String,
    horizon: String,
}

async fn backtest(
    State(s): State<Arc<AppState>>,
    Query(q): Query<BacktestQuery>,
) -> ApiResult<Vec<BacktestRecord>> {
    let area = parse_area(&s, &q.area)?;
    let horizon = parse_horizon(&q.horizon)?;
    let state = s.clone();
    let out = tokio::task::spawn_blocking(move || -> anyhow::Result<_> {
        let observed = state.panel.areas.require(&area)?.observed_cfd;
        if observed {
            return Ok(cfdcast::backtest(
                &state.panel,
                &area,
                horizon,
                Quotes::Observed,
            )?);
        }
        let cfg = state.job.forecast_config();
        let f = forecast_area(
            &state.ws,
            &state.panel,
            &state.posteriors,
            &area,
            horizon,
            &cfg,
        )?;
        Ok(cfdcast::backtest(
            &state.panel,
            &area,
            horizon,
            Quotes::Forecast(&f),
        )?)
    })
    .await
    .map_err(|e| anyhow::anyhow!("backtest task failed: {e}"))??;
    Ok(Json(out.records))
}
