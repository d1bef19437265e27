//! Market data panel: ingestion, alignment and regression design matrices.
//!
//! Input files (comma separated, header row, ISO dates, EUR/MWh):
//!
//! | file                | columns                                   |
//! |---------------------|-------------------------------------------|
//! | `areas.csv`         | `area,has_hydro,observed_cfd`             |
//! | `spot.csv`          | `date,area,price` (`SYS` = system price)  |
//! | `forward.csv`       | `date,horizon,price`                      |
//! | `cfd.csv`           | `date,area,horizon,price`                 |
//! | `reservoir.csv`     | `date,area,fill_pct`                      |
//! | `redefinitions.csv` | `date`                                    |
//! | `reservoir_map.csv` | `area,source,start,end` (optional)        |
//!
//! The panel calendar is the system spot calendar, restricted to the window
//! where both system spot and forward prices exist. Forward and CfD series
//! keep their weekend and holiday gaps; nothing is interpolated.
//! `reservoir.csv` may hold series for historical areas; `reservoir_map.csv`
//! assigns them to the current areas by date range. Without a mapping each
//! hydro area uses the series carrying its own code.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowDiagnostic};
use crate::seasonal::{self, SeasonalModel};
use crate::types::{AreaConfig, AreaId, AreaInfo, Covariate, Epoch, Horizon, SYSTEM_AREA};

/// Days a weekly reservoir residual is carried forward.
pub const RESERVOIR_FILL_DAYS: i64 = 14;

type Series = BTreeMap<NaiveDate, f64>;

/// Assigns a reservoir series to a price area over a date range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReservoirLink {
    pub area: AreaId,
    pub source: AreaId,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl ReservoirLink {
    fn covers(&self, d: NaiveDate) -> bool {
        self.start.is_none_or(|s| s <= d) && self.end.is_none_or(|e| d <= e)
    }
}

/// Aligned daily market data. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPanel {
    pub areas: AreaConfig,
    pub dates: Vec<NaiveDate>,
    pub cfd: BTreeMap<AreaId, BTreeMap<Horizon, Series>>,
    pub fw: BTreeMap<Horizon, Series>,
    pub sa: BTreeMap<AreaId, Series>,
    pub ss: Series,
    /// Daily seasonally adjusted reservoir deviation, hydro areas only.
    pub wa: BTreeMap<AreaId, Series>,
    /// Raw weekly fill percentages by source series.
    pub reservoir: BTreeMap<AreaId, Series>,
    pub reservoir_links: Vec<ReservoirLink>,
    pub seasonal: BTreeMap<AreaId, SeasonalModel>,
    pub redefinitions: Vec<NaiveDate>,
    pub stale: BTreeMap<AreaId, BTreeMap<Horizon, BTreeMap<NaiveDate, bool>>>,
}

/// Raw file contents for [`ingest`].
#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub areas: String,
    pub spot: String,
    pub forward: String,
    pub cfd: Option<String>,
    pub reservoir: Option<String>,
    pub redefinitions: Option<String>,
    pub reservoir_map: Option<String>,
}

impl Sources {
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| Error::Io { path, source })
        };
        let optional = |name: &str| -> Result<Option<String>> {
            if dir.join(name).exists() {
                read(name).map(Some)
            } else {
                Ok(None)
            }
        };
        Ok(Sources {
            areas: read("areas.csv")?,
            spot: read("spot.csv")?,
            forward: read("forward.csv")?,
            cfd: optional("cfd.csv")?,
            reservoir: optional("reservoir.csv")?,
            redefinitions: optional("redefinitions.csv")?,
            reservoir_map: optional("reservoir_map.csv")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Seasonal cycle length in weeks.
    pub seasonal_period: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            seasonal_period: seasonal::DEFAULT_PERIOD,
        }
    }
}

/// Non-fatal observations made while building a panel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub outside_window: usize,
    pub off_calendar: usize,
    pub cfd_without_forward: usize,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Diagnostics(Vec<RowDiagnostic>);

impl Diagnostics {
    fn push(&mut self, file: &str, line: usize, message: impl Into<String>) {
        self.0.push(RowDiagnostic {
            file: file.to_string(),
            line,
            message: message.into(),
        });
    }
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date {s:?}: {e}"))
}

fn parse_price(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("bad number {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite number {s:?}"))
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true/false, got {s:?}")),
    }
}

/// Iterate the records of a CSV document after checking its header.
/// Yields `(line, fields)`; malformed records become diagnostics.
fn records(
    file: &str,
    text: &str,
    header: &[&str],
    diags: &mut Diagnostics,
) -> Vec<(usize, Vec<String>)> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    match rdr.headers() {
        Ok(h) => {
            let got: Vec<&str> = h.iter().collect();
            if got != header {
                diags.push(file, 1, format!("expected header {header:?}, got {got:?}"));
                return Vec::new();
            }
        }
        Err(e) => {
            diags.push(file, 1, format!("unreadable header: {e}"));
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        match rec {
            Ok(r) => {
                let line = r.position().map_or(0, |p| p.line() as usize);
                if r.len() == 1 && r[0].is_empty() {
                    continue;
                }
                if r.len() != header.len() {
                    diags.push(
                        file,
                        line,
                        format!("expected {} fields, got {}", header.len(), r.len()),
                    );
                    continue;
                }
                out.push((line, r.iter().map(str::to_string).collect()));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                diags.push(file, line, format!("malformed row: {e}"));
            }
        }
    }
    out
}

fn parse_areas(text: &str, diags: &mut Diagnostics) -> Result<AreaConfig> {
    let mut areas = Vec::new();
    for (line, f) in records(
        "areas.csv",
        text,
        &["area", "has_hydro", "observed_cfd"],
        diags,
    ) {
        let parsed = (|| -> std::result::Result<AreaInfo, String> {
            Ok(AreaInfo {
                id: AreaId::new(f[0].as_str()).map_err(|e| e.to_string())?,
                has_hydro: parse_bool(&f[1])?,
                observed_cfd: parse_bool(&f[2])?,
            })
        })();
        match parsed {
            Ok(a) => areas.push(a),
            Err(m) => diags.push("areas.csv", line, m),
        }
    }
    AreaConfig::new(areas)
}

/// Parse and align the market files into a panel.
pub fn ingest(sources: &Sources, opts: IngestOptions) -> Result<(MarketPanel, IngestReport)> {
    let mut diags = Diagnostics::default();
    let mut report = IngestReport::default();

    let areas = parse_areas(&sources.areas, &mut diags)?;
    if !diags.0.is_empty() {
        return Err(Error::RejectedRows(diags.0));
    }
    if areas.is_empty() {
        return Err(Error::AreaConfig("no areas declared".into()));
    }
    let known = |code: &str| -> std::result::Result<AreaId, String> {
        let id = AreaId::new(code).map_err(|e| e.to_string())?;
        if areas.get(&id).is_some() {
            Ok(id)
        } else {
            Err(format!("unknown area {code:?}"))
        }
    };

    // Spot prices.
    let mut ss = Series::new();
    let mut sa: BTreeMap<AreaId, Series> = BTreeMap::new();
    for (line, f) in records(
        "spot.csv",
        &sources.spot,
        &["date", "area", "price"],
        &mut diags,
    ) {
        let row = (|| -> std::result::Result<(), String> {
            let date = parse_date(&f[0])?;
            let price = parse_price(&f[2])?;
            let slot = if f[1] == SYSTEM_AREA {
                &mut ss
            } else {
                sa.entry(known(&f[1])?).or_default()
            };
            if slot.insert(date, price).is_some() {
                return Err(format!("duplicate ({}, {date}) spot price", f[1]));
            }
            Ok(())
        })();
        if let Err(m) = row {
            diags.push("spot.csv", line, m);
        }
    }

    let mut fw: BTreeMap<Horizon, Series> = BTreeMap::new();
    for (line, f) in records(
        "forward.csv",
        &sources.forward,
        &["date", "horizon", "price"],
        &mut diags,
    ) {
        let row = (|| -> std::result::Result<(), String> {
            let date = parse_date(&f[0])?;
            let h: Horizon = f[1].parse().map_err(|e: Error| e.to_string())?;
            let price = parse_price(&f[2])?;
            if fw.entry(h).or_default().insert(date, price).is_some() {
                return Err(format!("duplicate ({h}, {date}) forward price"));
            }
            Ok(())
        })();
        if let Err(m) = row {
            diags.push("forward.csv", line, m);
        }
    }

    let mut cfd_raw: Vec<(usize, AreaId, Horizon, NaiveDate, f64)> = Vec::new();
    let mut cfd_keys = BTreeSet::new();
    if let Some(text) = &sources.cfd {
        for (line, f) in records(
            "cfd.csv",
            text,
            &["date", "area", "horizon", "price"],
            &mut diags,
        ) {
            let row = (|| -> std::result::Result<(), String> {
                let date = parse_date(&f[0])?;
                let area = known(&f[1])?;
                if !areas
                    .require(&area)
                    .map_err(|e| e.to_string())?
                    .observed_cfd
                {
                    return Err(format!(
                        "CfD quote for {area}, which is declared unobserved"
                    ));
                }
                let h: Horizon = f[2].parse().map_err(|e: Error| e.to_string())?;
                let price = parse_price(&f[3])?;
                if !cfd_keys.insert((area.clone(), h, date)) {
                    return Err(format!("duplicate ({area}, {h}, {date}) CfD price"));
                }
                cfd_raw.push((line, area, h, date, price));
                Ok(())
            })();
            if let Err(m) = row {
                diags.push("cfd.csv", line, m);
            }
        }
    }

    let mut reservoir: BTreeMap<AreaId, Series> = BTreeMap::new();
    if let Some(text) = &sources.reservoir {
        for (line, f) in records(
            "reservoir.csv",
            text,
            &["date", "area", "fill_pct"],
            &mut diags,
        ) {
            let row = (|| -> std::result::Result<(), String> {
                let date = parse_date(&f[0])?;
                let area = AreaId::new(f[1].as_str()).map_err(|e| e.to_string())?;
                let fill = parse_price(&f[2])?;
                if !(fill > 0.0 && fill < 100.0) {
                    return Err(format!("fill_pct {fill} outside (0, 100)"));
                }
                if reservoir
                    .entry(area.clone())
                    .or_default()
                    .insert(date, fill)
                    .is_some()
                {
                    return Err(format!("duplicate ({area}, {date}) reservoir level"));
                }
                Ok(())
            })();
            if let Err(m) = row {
                diags.push("reservoir.csv", line, m);
            }
        }
    }

    let mut redefinitions = BTreeSet::new();
    if let Some(text) = &sources.redefinitions {
        for (line, f) in records("redefinitions.csv", text, &["date"], &mut diags) {
            match parse_date(&f[0]) {
                Ok(d) => {
                    redefinitions.insert(d);
                }
                Err(m) => diags.push("redefinitions.csv", line, m),
            }
        }
    }

    let mut links = Vec::new();
    if let Some(text) = &sources.reservoir_map {
        for (line, f) in records(
            "reservoir_map.csv",
            text,
            &["area", "source", "start", "end"],
            &mut diags,
        ) {
            let row = (|| -> std::result::Result<ReservoirLink, String> {
                let area = known(&f[0])?;
                if !areas.require(&area).map_err(|e| e.to_string())?.has_hydro {
                    return Err(format!("{area} has no hydro power but a reservoir mapping"));
                }
                let opt_date = |s: &str| {
                    if s.is_empty() {
                        Ok(None)
                    } else {
                        parse_date(s).map(Some)
                    }
                };
                Ok(ReservoirLink {
                    area,
                    source: AreaId::new(f[1].as_str()).map_err(|e| e.to_string())?,
                    start: opt_date(&f[2])?,
                    end: opt_date(&f[3])?,
                })
            })();
            match row {
                Ok(l) => links.push(l),
                Err(m) => diags.push("reservoir_map.csv", line, m),
            }
        }
    }

    // CfD positivity needs the matching forward.
    let mut cfd: BTreeMap<AreaId, BTreeMap<Horizon, Series>> = BTreeMap::new();
    for (line, area, h, date, price) in cfd_raw {
        match fw.get(&h).and_then(|s| s.get(&date)) {
            Some(&f) if price <= -f => diags.push(
                "cfd.csv",
                line,
                format!(
                    "area-specific forward price {f} + ({price}) is not positive for ({area}, {h}, {date})"
                ),
            ),
            Some(_) => {
                cfd.entry(area).or_default().entry(h).or_default().insert(date, price);
            }
            None => report.cfd_without_forward += 1,
        }
    }

    if !diags.0.is_empty() {
        return Err(Error::RejectedRows(diags.0));
    }

    // Calendar: system spot days inside the common window of spot and forwards.
    let span = |s: &Series| Some((*s.keys().next()?, *s.keys().next_back()?));
    let mut window = span(&ss).ok_or_else(|| Error::AreaConfig("no system spot prices".into()))?;
    if fw.is_empty() {
        return Err(Error::AreaConfig("no forward prices".into()));
    }
    for s in fw.values() {
        if let Some((a, b)) = span(s) {
            window = (window.0.max(a), window.1.min(b));
        }
    }
    if window.0 > window.1 {
        return Err(Error::AreaConfig(
            "spot and forward series do not overlap".into(),
        ));
    }
    let dates: Vec<NaiveDate> = ss
        .keys()
        .copied()
        .filter(|d| window.0 <= *d && *d <= window.1)
        .collect();
    let calendar: BTreeSet<NaiveDate> = dates.iter().copied().collect();
    let mut restrict = |s: &mut Series| {
        s.retain(|d, _| {
            if !(window.0 <= *d && *d <= window.1) {
                report.outside_window += 1;
                false
            } else if !calendar.contains(d) {
                report.off_calendar += 1;
                false
            } else {
                true
            }
        })
    };
    restrict(&mut ss);
    fw.values_mut().for_each(&mut restrict);
    sa.values_mut().for_each(&mut restrict);
    cfd.values_mut()
        .flat_map(|m| m.values_mut())
        .for_each(&mut restrict);
    cfd.values_mut()
        .for_each(|m| m.retain(|_, s| !s.is_empty()));
    cfd.retain(|_, m| !m.is_empty());

    // Seasonal adjustment of every reservoir series over its full sample.
    let mut seasonal_models = BTreeMap::new();
    let mut residuals: BTreeMap<AreaId, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for (source, series) in &reservoir {
        let origin = *series.keys().next().expect("non-empty series");
        let obs: Vec<(f64, f64)> = series
            .iter()
            .map(|(d, v)| (seasonal::week_index(origin, *d), *v))
            .collect();
        let model = seasonal::fit_seasonal(source.clone(), &obs, opts.seasonal_period)?;
        let resid = seasonal::adjust(&obs, &model)?;
        residuals.insert(source.clone(), series.keys().copied().zip(resid).collect());
        seasonal_models.insert(source.clone(), model);
    }

    let mut wa: BTreeMap<AreaId, Series> = BTreeMap::new();
    for info in areas.iter().filter(|a| a.has_hydro) {
        let own: Vec<&ReservoirLink> = links.iter().filter(|l| l.area == info.id).collect();
        let identity = ReservoirLink {
            area: info.id.clone(),
            source: info.id.clone(),
            start: None,
            end: None,
        };
        let area_links = if own.is_empty() { vec![&identity] } else { own };
        if area_links
            .iter()
            .all(|l| !residuals.contains_key(&l.source))
        {
            return Err(Error::MissingReservoir(info.id.clone()));
        }
        let mut daily = Series::new();
        for &d in &dates {
            let Some(link) = area_links.iter().find(|l| l.covers(d)) else {
                continue;
            };
            let Some(res) = residuals.get(&link.source) else {
                continue;
            };
            let idx = res.partition_point(|(rd, _)| *rd <= d);
            if idx == 0 {
                continue;
            }
            let (rd, v) = res[idx - 1];
            if (d - rd).num_days() <= RESERVOIR_FILL_DAYS {
                daily.insert(d, v);
            }
        }
        if daily.is_empty() {
            report.warnings.push(format!(
                "no reservoir residuals fall inside the panel for {}",
                info.id
            ));
        }
        wa.insert(info.id.clone(), daily);
    }

    let stale = cfd
        .iter()
        .map(|(a, by_h)| {
            let flags = by_h
                .iter()
                .map(|(h, s)| (*h, flag_stale_series(s)))
                .collect();
            (a.clone(), flags)
        })
        .collect();

    let panel = MarketPanel {
        areas,
        dates,
        cfd,
        fw,
        sa,
        ss,
        wa,
        reservoir,
        reservoir_links: links,
        seasonal: seasonal_models,
        redefinitions: redefinitions.into_iter().collect(),
        stale,
    };
    panel.validate()?;
    Ok((panel, report))
}

/// Convenience wrapper reading the standard files from `dir`.
pub fn ingest_dir(dir: &Path) -> Result<(MarketPanel, IngestReport)> {
    ingest(&Sources::from_dir(dir)?, IngestOptions::default())
}

/// Stale flags: a price equal to the previous observation is flagged.
pub fn flag_stale(prices: &[f64]) -> Vec<bool> {
    let mut flags = Vec::with_capacity(prices.len());
    for (i, p) in prices.iter().enumerate() {
        flags.push(i > 0 && prices[i - 1] == *p);
    }
    flags
}

fn flag_stale_series(s: &Series) -> BTreeMap<NaiveDate, bool> {
    let prices: Vec<f64> = s.values().copied().collect();
    s.keys().copied().zip(flag_stale(&prices)).collect()
}

/// Which rows enter a regression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RowFilter {
    pub drop_stale: bool,
}

/// Covariate rows of one area and horizon, columns in [`Covariate`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub area: AreaId,
    pub horizon: Horizon,
    pub covariates: Vec<Covariate>,
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<Vec<f64>>,
    /// Epoch days dropped for a missing covariate.
    pub dropped: Vec<NaiveDate>,
}

impl DesignMatrix {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.covariates.len(), |i, j| {
            self.rows[i][j]
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

impl MarketPanel {
    /// Check the structural invariants; used after ingestion and loading.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::AreaConfig(m));
        if self.dates.windows(2).any(|w| w[0] >= w[1]) {
            return bad("panel dates are not strictly increasing".into());
        }
        let cal: BTreeSet<NaiveDate> = self.dates.iter().copied().collect();
        let on_cal = |s: &Series| s.keys().all(|d| cal.contains(d));
        if !on_cal(&self.ss)
            || !self.fw.values().all(on_cal)
            || !self.sa.values().all(on_cal)
            || !self.wa.values().all(on_cal)
        {
            return bad("series keyed by a date outside the panel calendar".into());
        }
        for (area, by_h) in &self.cfd {
            let info = self.areas.require(area)?;
            if !info.observed_cfd {
                return bad(format!("CfD series for unobserved area {area}"));
            }
            for (h, s) in by_h {
                for (d, c) in s {
                    let f = self.fw.get(h).and_then(|x| x.get(d));
                    match f {
                        Some(f) if c + f > 0.0 => {}
                        _ => return bad(format!("CfD ({area}, {h}, {d}) fails fw + cfd > 0")),
                    }
                }
            }
        }
        for info in self.areas.iter() {
            if info.has_hydro != self.wa.contains_key(&info.id) {
                return bad(format!(
                    "reservoir covariate presence mismatch for {}",
                    info.id
                ));
            }
        }
        Ok(())
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    /// Area-definition epochs covering the panel calendar.
    pub fn epochs(&self) -> Vec<Epoch> {
        let (Some(first), Some(last)) = (self.first_date(), self.last_date()) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut start = first;
        for &r in &self.redefinitions {
            if r > start && r <= last {
                out.push(Epoch {
                    start,
                    end: r.pred_opt().expect("valid date"),
                });
                start = r;
            }
        }
        out.push(Epoch { start, end: last });
        out
    }

    pub fn epoch_of(&self, date: NaiveDate) -> Option<Epoch> {
        self.epochs().into_iter().find(|e| e.contains(date))
    }

    pub fn covariate(
        &self,
        area: &AreaId,
        horizon: Horizon,
        c: Covariate,
        date: NaiveDate,
    ) -> Option<f64> {
        match c {
            Covariate::Forward => self.fw.get(&horizon)?.get(&date).copied(),
            Covariate::AreaSpot => self.sa.get(area)?.get(&date).copied(),
            Covariate::SystemSpot => self.ss.get(&date).copied(),
            Covariate::Reservoir => self.wa.get(area)?.get(&date).copied(),
        }
    }

    pub fn cfd_series(&self, area: &AreaId, horizon: Horizon) -> Option<&Series> {
        self.cfd.get(area)?.get(&horizon)
    }

    pub fn is_stale(&self, area: &AreaId, horizon: Horizon, date: NaiveDate) -> bool {
        self.stale
            .get(area)
            .and_then(|m| m.get(&horizon))
            .and_then(|m| m.get(&date))
            .copied()
            .unwrap_or(false)
    }

    /// Canonical serialization; equal panels give byte-equal output.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("panel serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: MarketPanel = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    /// Write the panel back out in the ingestion file formats.
    pub fn export_csv(&self, dir: &Path) -> Result<()> {
        let io = |path: &Path, source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| io(&p, e))
        };

        let mut s = String::from("area,has_hydro,observed_cfd\n");
        for a in self.areas.iter() {
            writeln!(s, "{},{},{}", a.id, a.has_hydro, a.observed_cfd).unwrap();
        }
        write("areas.csv", s)?;

        let mut s = String::from("date,area,price\n");
        for (d, p) in &self.ss {
            writeln!(s, "{d},{SYSTEM_AREA},{p}").unwrap();
        }
        for (a, series) in &self.sa {
            for (d, p) in series {
                writeln!(s, "{d},{a},{p}").unwrap();
            }
        }
        write("spot.csv", s)?;

        let mut s = String::from("date,horizon,price\n");
        for (h, series) in &self.fw {
            for (d, p) in series {
                writeln!(s, "{d},{h},{p}").unwrap();
            }
        }
        write("forward.csv", s)?;

        let mut s = String::from("date,area,horizon,price\n");
        for (a, by_h) in &self.cfd {
            for (h, series) in by_h {
                for (d, p) in series {
                    writeln!(s, "{d},{a},{h},{p}").unwrap();
                }
            }
        }
        write("cfd.csv", s)?;

        let mut s = String::from("date,area,fill_pct\n");
        for (a, series) in &self.reservoir {
            for (d, p) in series {
                writeln!(s, "{d},{a},{p}").unwrap();
            }
        }
        write("reservoir.csv", s)?;

        let mut s = String::from("date\n");
        for d in &self.redefinitions {
            writeln!(s, "{d}").unwrap();
        }
        write("redefinitions.csv", s)?;

        if !self.reservoir_links.is_empty() {
            let mut s = String::from("area,source,start,end\n");
            let opt = |d: Option<NaiveDate>| d.map(|d| d.to_string()).unwrap_or_default();
            for l in &self.reservoir_links {
                writeln!(s, "{},{},{},{}", l.area, l.source, opt(l.start), opt(l.end)).unwrap();
            }
            write("reservoir_map.csv", s)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> PanelSummary {
        let count = |s: Option<&Series>| s.map_or(0, |s| s.len());
        let coverage = self
            .areas
            .iter()
            .map(|a| AreaCoverage {
                area: a.id.clone(),
                has_hydro: a.has_hydro,
                observed_cfd: a.observed_cfd,
                spot_days: count(self.sa.get(&a.id)),
                reservoir_days: count(self.wa.get(&a.id)),
                cfd_days: self
                    .cfd
                    .get(&a.id)
                    .map(|m| m.iter().map(|(h, s)| (*h, s.len())).collect())
                    .unwrap_or_default(),
            })
            .collect();
        PanelSummary {
            first_date: self.first_date(),
            last_date: self.last_date(),
            n_dates: self.dates.len(),
            epochs: self.epochs(),
            redefinitions: self.redefinitions.clone(),
            forward_days: self.fw.iter().map(|(h, s)| (*h, s.len())).collect(),
            coverage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaCoverage {
    pub area: AreaId,
    pub has_hydro: bool,
    pub observed_cfd: bool,
    pub spot_days: usize,
    pub reservoir_days: usize,
    pub cfd_days: BTreeMap<Horizon, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub n_dates: usize,
    pub epochs: Vec<Epoch>,
    pub redefinitions: Vec<NaiveDate>,
    pub forward_days: BTreeMap<Horizon, usize>,
    pub coverage: Vec<AreaCoverage>,
}

fn check_epoch(panel: &MarketPanel, epoch: Epoch) -> Result<()> {
    if let Some(&r) = panel
        .redefinitions
        .iter()
        .find(|&&r| epoch.start < r && r <= epoch.end)
    {
        return Err(Error::EpochStraddlesRedefinition {
            start: epoch.start,
            end: epoch.end,
            redefinition: r,
        });
    }
    Ok(())
}

/// Regression covariates for `area` over `epoch`: `[FW, SA, SS, WA]`, or
/// `[FW, SA, SS]` for areas without hydro power. No intercept column.
pub fn design_matrix(
    panel: &MarketPanel,
    area: &AreaId,
    horizon: Horizon,
    epoch: Epoch,
) -> Result<DesignMatrix> {
    check_epoch(panel, epoch)?;
    let info = panel.areas.require(area)?;
    let covariates = Covariate::for_area(info.has_hydro).to_vec();
    let mut m = DesignMatrix {
        area: area.clone(),
        horizon,
        covariates,
        dates: Vec::new(),
        rows: Vec::new(),
        dropped: Vec::new(),
    };
    for &d in panel.dates.iter().filter(|d| epoch.contains(**d)) {
        let row: Option<Vec<f64>> = m
            .covariates
            .iter()
            .map(|&c| panel.covariate(area, horizon, c, d))
            .collect();
        match row {
            Some(r) => {
                m.dates.push(d);
                m.rows.push(r);
            }
            None => m.dropped.push(d),
        }
    }
    if m.rows.is_empty() {
        return Err(Error::InsufficientData {
            area: area.clone(),
            horizon,
            start: epoch.start,
            end: epoch.end,
        });
    }
    Ok(m)
}

/// Design matrix and CfD response for the days with an observed CfD.
pub fn regression_data(
    panel: &MarketPanel,
    area: &AreaId,
    horizon: Horizon,
    epoch: Epoch,
    filter: RowFilter,
) -> Result<(DesignMatrix, Vec<f64>)> {
    let insufficient = || Error::InsufficientData {
        area: area.clone(),
        horizon,
        start: epoch.start,
        end: epoch.end,
    };
    let full = design_matrix(panel, area, horizon, epoch)?;
    let cfd = panel.cfd_series(area, horizon).ok_or_else(insufficient)?;
    let mut out = DesignMatrix {
        rows: Vec::new(),
        dates: Vec::new(),
        ..full.clone()
    };
    let mut y = Vec::new();
    for (d, row) in full.dates.iter().zip(full.rows) {
        let Some(&c) = cfd.get(d) else { continue };
        if filter.drop_stale && panel.is_stale(area, horizon, *d) {
            continue;
        }
        out.dates.push(*d);
        out.rows.push(row);
        y.push(c);
    }
    if y.is_empty() {
        return Err(insufficient());
    }
    Ok((out, y))
}
