use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{Context, Result};
use cfdcast::backtest::{BacktestOutput, Quotes};
use cfdcast::elicitation::{months_question, similarity_question, MonthsAnswer, SimilarityAnswer};
use cfdcast::forecast::run_observed;
use cfdcast::market::{IngestReport, PanelSummary, Sources};
use cfdcast::posterior::fit_panel;
use cfdcast::report::{coefficient_table, CoefficientTable};
use cfdcast::synthetic::{SyntheticConfig, SyntheticMarket, UNOBSERVED};
use cfdcast::{
    AreaId, Covariate, ElicitationProfile, ForecastConfig, ForecastResult, Horizon, MarketPanel,
    PosteriorSet, Transcript,
};

use crate::workspace::write_atomic;
use crate::{JobConfig, Workspace};

pub fn ingest(ws: &Workspace, input: Option<&Path>) -> Result<(PanelSummary, IngestReport)> {
    let job = ws.job()?;
    let dir = input.unwrap_or(ws.root());
    let sources = Sources::from_dir(dir)?;
    let (panel, report) = cfdcast::ingest(&sources, job.ingest_options())?;
    ws.save_panel(&panel)?;
    Ok((panel.summary(), report))
}

pub struct FitOutcome {
    pub table: CoefficientTable,
    pub fitted: usize,
    /// `area horizon epoch: code: message` for combinations left unfitted.
    pub skipped: Vec<String>,
}

pub fn fit(ws: &Workspace, horizons: Option<Vec<Horizon>>) -> Result<FitOutcome> {
    let job = ws.job()?;
    let panel = ws.load_panel()?;
    let horizons: Vec<Horizon> = horizons
        .unwrap_or(job.horizons.clone())
        .into_iter()
        .filter(|h| panel.fw.contains_key(h))
        .collect();
    let (set, failed) = fit_panel(&panel, &horizons, job.row_filter(), job.fit_options());
    ws.save_posteriors(&set)?;
    let table = coefficient_table(&set, &panel.areas, &horizons, &panel.epochs());
    write_atomic(
        &ws.root().join("coefficients.csv"),
        table.to_csv().as_bytes(),
    )?;
    write_atomic(
        &ws.root().join("coefficients.txt"),
        table.to_text().as_bytes(),
    )?;
    let skipped = failed
        .iter()
        .map(|(a, h, e, err)| format!("{a} {h} {e}: {}: {err}", err.code()))
        .collect();
    Ok(FitOutcome {
        table,
        fitted: set.summaries.len(),
        skipped,
    })
}

fn read_number<R: BufRead, W: Write>(
    input: &mut R,
    out: &mut W,
    positive: bool,
) -> Result<Option<f64>> {
    loop {
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            return Ok(None);
        }
        let text = line.trim().trim_end_matches('%').trim();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() && (v > 0.0 || (!positive && v == 0.0)) => return Ok(Some(v)),
            _ => {
                let want = if positive {
                    "a positive"
                } else {
                    "a non-negative"
                };
                writeln!(out, "  please enter {want} number")?;
            }
        }
    }
}

/// Ask the similarity and months questions for `target` on `out`, reading
/// one answer per line from `input`. The resulting profile is validated
/// and stored.
pub fn elicit<R: BufRead, W: Write>(
    ws: &Workspace,
    target: &AreaId,
    mut input: R,
    mut out: W,
) -> Result<ElicitationProfile> {
    let panel = ws.load_panel()?;
    let info = panel.areas.require(target)?;
    let observed: Vec<AreaId> = panel.areas.observed().map(|a| a.id.clone()).collect();
    let mut transcript = Transcript {
        target: target.clone(),
        observed_order: observed.clone(),
        similarity: Vec::new(),
        months: Vec::new(),
    };
    let incomplete = || cfdcast::Error::IncompleteTranscript("input ended early".into());
    for &c in Covariate::for_area(info.has_hydro) {
        writeln!(out, "\n[{c}]")?;
        for a in &observed {
            if c == Covariate::Reservoir && !panel.areas.require(a)?.has_hydro {
                writeln!(out, "{a}: no hydro power, weight fixed at 0")?;
                continue;
            }
            writeln!(out, "{}", similarity_question(c, target, a))?;
            write!(out, "{a}> ")?;
            out.flush()?;
            let score = read_number(&mut input, &mut out, false)?.ok_or_else(incomplete)?;
            transcript.similarity.push(SimilarityAnswer {
                covariate: c,
                area: a.clone(),
                score,
            });
        }
        writeln!(out, "{}", months_question(c))?;
        write!(out, "months> ")?;
        out.flush()?;
        let months = read_number(&mut input, &mut out, true)?.ok_or_else(incomplete)?;
        transcript.months.push(MonthsAnswer {
            covariate: c,
            months,
        });
    }
    store_transcript(ws, &panel, &transcript)
}

/// Build a profile from a transcript saved as TOML.
pub fn elicit_from_file(ws: &Workspace, path: &Path) -> Result<ElicitationProfile> {
    let panel = ws.load_panel()?;
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let transcript: Transcript =
        toml::from_str(&text).map_err(|e| cfdcast::Error::Parse(e.to_string()))?;
    store_transcript(ws, &panel, &transcript)
}

fn store_transcript(
    ws: &Workspace,
    panel: &MarketPanel,
    t: &Transcript,
) -> Result<ElicitationProfile> {
    let profile = cfdcast::elicit_session(t, &panel.areas)?;
    ws.save_profile(&profile)?;
    Ok(profile)
}

/// Per-run changes on top of the job settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_draws: Option<usize>,
    pub seed: Option<u64>,
    pub levels: Option<Vec<f64>>,
    pub days_per_month: Option<f64>,
    pub noise: bool,
    pub threads: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, job: &JobConfig) -> Result<ForecastConfig> {
        let mut cfg = job.forecast_config();
        if let Some(n) = self.n_draws {
            cfg.n_draws = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(l) = &self.levels {
            cfg.levels = l.clone();
        }
        if let Some(d) = self.days_per_month {
            cfg.days_per_month = d;
        }
        cfg.noise |= self.noise;
        cfg.threads = self.threads;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Observed areas are forecast from their own posterior, unobserved ones
/// through their stored profile.
pub fn forecast_area(
    ws: &Workspace,
    panel: &MarketPanel,
    posteriors: &PosteriorSet,
    area: &AreaId,
    horizon: Horizon,
    cfg: &ForecastConfig,
) -> Result<ForecastResult> {
    let info = panel.areas.require(area)?;
    if info.observed_cfd {
        return Ok(run_observed(panel, posteriors, area, horizon, cfg)?);
    }
    let profile = ws.require_profile(area)?;
    Ok(cfdcast::run_forecast(
        panel, posteriors, &profile, horizon, cfg,
    )?)
}

pub fn forecast(
    ws: &Workspace,
    area: &AreaId,
    horizon: Horizon,
    overrides: &Overrides,
) -> Result<ForecastResult> {
    let cfg = overrides.apply(&ws.job()?)?;
    let panel = ws.load_panel()?;
    let posteriors = ws.load_posteriors()?;
    forecast_area(ws, &panel, &posteriors, area, horizon, &cfg)
}

pub fn backtest(
    ws: &Workspace,
    area: &AreaId,
    horizon: Horizon,
    overrides: &Overrides,
) -> Result<BacktestOutput> {
    let panel = ws.load_panel()?;
    let info = panel.areas.require(area)?;
    let output = if info.observed_cfd {
        cfdcast::backtest(&panel, area, horizon, Quotes::Observed)?
    } else {
        let cfg = overrides.apply(&ws.job()?)?;
        let posteriors = ws.load_posteriors()?;
        let f = forecast_area(ws, &panel, &posteriors, area, horizon, &cfg)?;
        cfdcast::backtest(&panel, area, horizon, Quotes::Forecast(&f))?
    };
    Ok(output)
}

/// Write a synthetic market (input CSVs plus matching profiles for the
/// unobserved areas) into `dir`.
pub fn synth(dir: &Path, config: SyntheticConfig, months: f64) -> Result<()> {
    let market = SyntheticMarket::generate(config)?;
    market.write_dir(dir)?;
    let ws = Workspace::new(dir);
    for target in UNOBSERVED {
        let profile = cfdcast::validate_profile(
            &market.matching_profile(target, months),
            &market.panel.areas,
        )?;
        ws.save_profile(&profile)?;
    }
    Ok(())
}
