//! Ex-post comparison of area-specific forward prices with realised spot.
//!
//! For every delivery period of a horizon the reference quote is the last
//! CfD (observed or predicted mean) before delivery starts, plus the system
//! forward of the same day. The realised value is the plain average of the
//! daily area spot prices over the period. Without risk premia the
//! difference has mean zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::{delivery_period, DateRange};
use crate::error::{Error, Result};
use crate::forecast::ForecastResult;
use crate::market::MarketPanel;
use crate::types::{AreaId, Horizon};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRecord {
    pub area: AreaId,
    pub horizon: Horizon,
    pub period: DateRange,
    pub quote_date: NaiveDate,
    pub cfd: f64,
    pub forward: f64,
    /// `forward + cfd`
    pub area_forward: f64,
    pub realised: f64,
    pub spot_days: usize,
    /// `area_forward - realised`
    pub difference: f64,
}

/// Where the CfD quotes come from.
#[derive(Debug, Clone, Copy)]
pub enum Quotes<'a> {
    Observed,
    Forecast(&'a ForecastResult),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BacktestOutput {
    pub records: Vec<BacktestRecord>,
    pub skipped: Vec<String>,
}

impl BacktestOutput {
    pub fn mean_difference(&self) -> Option<f64> {
        let n = self.records.len();
        (n > 0).then(|| self.records.iter().map(|r| r.difference).sum::<f64>() / n as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "area,horizon,period_start,period_end,quote_date,cfd,forward,area_forward,realised,spot_days,difference\n",
        );
        for r in &self.records {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.area,
                r.horizon,
                r.period.start,
                r.period.end,
                r.quote_date,
                r.cfd,
                r.forward,
                r.area_forward,
                r.realised,
                r.spot_days,
                r.difference
            )
            .unwrap();
        }
        s
    }
}

/// Arithmetic mean of the spot prices inside `period`.
pub fn realised_average(
    spot: &BTreeMap<NaiveDate, f64>,
    period: DateRange,
) -> Option<(f64, usize)> {
    let vals: Vec<f64> = spot
        .range(period.start..=period.end)
        .map(|(_, v)| *v)
        .collect();
    (!vals.is_empty()).then(|| (vals.iter().sum::<f64>() / vals.len() as f64, vals.len()))
}

pub fn backtest(
    panel: &MarketPanel,
    area: &AreaId,
    horizon: Horizon,
    quotes: Quotes<'_>,
) -> Result<BacktestOutput> {
    panel.areas.require(area)?;
    let quote_series: BTreeMap<NaiveDate, f64> = match quotes {
        Quotes::Observed => panel.cfd_series(area, horizon).cloned().unwrap_or_default(),
        Quotes::Forecast(f) => {
            if &f.target != area || f.horizon != horizon {
                return Err(Error::InvalidConfig(format!(
                    "forecast is for {} {}, not {area} {horizon}",
                    f.target, f.horizon
                )));
            }
            f.days.iter().map(|d| (d.date, d.mean)).collect()
        }
    };
    let empty = BTreeMap::new();
    let forward = panel.fw.get(&horizon).unwrap_or(&empty);
    let spot = panel.sa.get(area).unwrap_or(&empty);

    let periods: BTreeSet<DateRange> = panel
        .dates
        .iter()
        .map(|&d| delivery_period(d, horizon))
        .collect();
    let mut out = BacktestOutput::default();
    for period in periods {
        let Some((realised, spot_days)) = realised_average(spot, period) else {
            out.skipped
                .push(format!("{}..{}: no spot data", period.start, period.end));
            continue;
        };
        let quote = quote_series
            .range(..period.start)
            .rev()
            .find_map(|(d, c)| forward.get(d).map(|f| (*d, *c, *f)));
        let Some((quote_date, cfd, fw)) = quote else {
            out.skipped.push(format!(
                "{}..{}: no quote before delivery",
                period.start, period.end
            ));
            continue;
        };
        out.records.push(BacktestRecord {
            area: area.clone(),
            horizon,
            period,
            quote_date,
            cfd,
            forward: fw,
            area_forward: fw + cfd,
            realised,
            spot_days,
            difference: fw + cfd - realised,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realised_is_arithmetic_mean() {
        let d = |s: &str| s.parse::<NaiveDate>().unwrap();
        let spot: BTreeMap<_, _> = [
            (d("2010-01-31"), 99.0),
            (d("2010-02-01"), 10.0),
            (d("2010-02-02"), 20.0),
            (d("2010-02-03"), 30.0),
        ]
        .into_iter()
        .collect();
        let period = DateRange {
            start: d("2010-02-01"),
            end: d("2010-02-03"),
        };
        assert_eq!(realised_average(&spot, period), Some((20.0, 3)));
        let gap = DateRange {
            start: d("2011-01-01"),
            end: d("2011-01-31"),
        };
        assert_eq!(realised_average(&spot, gap), None);
    }
}
