//! Synthetic Nordic-style markets with known coefficients, used by the
//! bundled fixture, the test suites and the acceptance checks.
//!
//! Covariates follow simple autoregressive processes; the CfD of each
//! observed area is generated from the no-intercept linear model with the
//! engine's own reservoir covariate, so that fitted coefficients can be
//! compared with the truth. Unobserved areas get coefficients that are a
//! fixed convex combination of the observed ones, per covariate.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::calendar::delivery_period;
use crate::elicitation::{ElicitationProfile, ProfileRow};
use crate::error::{Error, Result};
use crate::market::{ingest, IngestOptions, MarketPanel, Sources};
use crate::rng::{self, StreamRng};
use crate::seasonal::inverse_logit_fill;
use crate::types::{AreaId, Covariate, Horizon};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub start: NaiveDate,
    pub days: usize,
    pub redefinitions: Vec<NaiveDate>,
    pub horizons: Vec<Horizon>,
    /// Standard deviation of the CfD regression noise.
    pub noise_sd: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 2011,
            start: NaiveDate::from_ymd_opt(2008, 1, 1).unwrap(),
            days: 731,
            redefinitions: vec![NaiveDate::from_ymd_opt(2008, 11, 17).unwrap()],
            horizons: vec![Horizon::M1, Horizon::Q1, Horizon::Y1],
            noise_sd: 1.0,
        }
    }
}

pub const OBSERVED: [&str; 5] = ["DK1", "DK2", "FI", "NO1", "SE"];
pub const UNOBSERVED: [&str; 2] = ["NO2", "NO3"];

fn has_hydro(area: &str) -> bool {
    !area.starts_with("DK")
}

/// True coefficients `[FW, SA, SS, WA]` of an observed area.
fn observed_coefficients(area: &str, horizon: Horizon) -> [f64; 4] {
    // (SA, SS, FW, WA) by area for short, medium and long horizons.
    let table: [[f64; 4]; 5] = match horizon {
        Horizon::M1 | Horizon::M2 => [
            [0.623, -0.151, -0.325, 0.0],
            [0.523, -0.050, -0.304, 0.0],
            [0.481, -0.439, -0.003, 1.200],
            [0.521, -0.449, -0.097, 1.061],
            [0.515, -0.460, -0.008, -0.885],
        ],
        Horizon::Q1 | Horizon::Q2 | Horizon::Q3 => [
            [0.504, -0.163, -0.174, 0.0],
            [0.342, -0.152, -0.002, 0.0],
            [0.288, -0.189, -0.062, 2.216],
            [0.363, -0.390, -0.005, 0.906],
            [0.373, -0.227, -0.102, 0.723],
        ],
        _ => [
            [0.076, 0.038, 0.032, 0.0],
            [0.114, 0.021, 0.036, 0.0],
            [0.059, -0.020, -0.010, 0.565],
            [0.029, -0.065, 0.027, -0.743],
            [0.023, -0.004, 0.006, -0.844],
        ],
    };
    let i = OBSERVED
        .iter()
        .position(|a| *a == area)
        .expect("observed area");
    let [sa, ss, fw, wa] = table[i];
    [fw, sa, ss, wa]
}

/// Similarity weights `(covariate, rho)` used to build unobserved areas.
pub fn true_weights(target: &str) -> Vec<(Covariate, Vec<f64>)> {
    let rows: [[f64; 5]; 4] = match target {
        "NO2" => [
            [0.05, 0.05, 0.05, 0.75, 0.10],
            [0.05, 0.05, 0.05, 0.80, 0.05],
            [0.05, 0.05, 0.05, 0.80, 0.05],
            [0.0, 0.0, 0.05, 0.85, 0.10],
        ],
        _ => [
            [0.10, 0.10, 0.10, 0.30, 0.40],
            [0.05, 0.05, 0.20, 0.30, 0.40],
            [0.05, 0.05, 0.20, 0.30, 0.40],
            [0.0, 0.0, 0.20, 0.30, 0.50],
        ],
    };
    Covariate::ALL
        .iter()
        .copied()
        .zip(rows.map(|r| r.to_vec()))
        .collect()
}

/// A generated market plus its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub config: SyntheticConfig,
    pub sources: Sources,
    pub panel: MarketPanel,
    /// `[FW, SA, SS, WA]` coefficients for every area, observed or not.
    pub coefficients: BTreeMap<(AreaId, Horizon), [f64; 4]>,
}

fn is_working_day(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

struct Ar1 {
    level: f64,
    phi: f64,
    state: f64,
    shock: Normal<f64>,
}

impl Ar1 {
    fn new(level: f64, phi: f64, sd: f64) -> Self {
        Ar1 {
            level,
            phi,
            state: 0.0,
            shock: Normal::new(0.0, sd).unwrap(),
        }
    }

    fn step(&mut self, rng: &mut StreamRng) -> f64 {
        self.state = self.phi * self.state + self.shock.sample(rng);
        self.level + self.state
    }
}

impl SyntheticMarket {
    pub fn generate(config: SyntheticConfig) -> Result<Self> {
        let mut rng = rng::stream(config.seed, 0);
        let dates: Vec<NaiveDate> = (0..config.days)
            .map(|i| config.start + Duration::days(i as i64))
            .collect();

        let mut areas = String::from("area,has_hydro,observed_cfd\n");
        for a in OBSERVED {
            writeln!(areas, "{a},{},true", has_hydro(a)).unwrap();
        }
        for a in UNOBSERVED {
            writeln!(areas, "{a},true,false").unwrap();
        }

        let mut spot = String::from("date,area,price\n");
        let mut system = Ar1::new(40.0, 0.95, 2.0);
        let all: Vec<&str> = OBSERVED.iter().chain(&UNOBSERVED).copied().collect();
        let mut area_dev: Vec<Ar1> = all
            .iter()
            .enumerate()
            .map(|(i, _)| Ar1::new(1.5 * i as f64 - 4.0, 0.9, 1.5))
            .collect();
        for (t, d) in dates.iter().enumerate() {
            let season = 6.0 * (2.0 * PI * t as f64 / 365.25).cos();
            let ss = system.step(&mut rng) + season;
            writeln!(spot, "{d},SYS,{ss}").unwrap();
            for (a, dev) in all.iter().zip(&mut area_dev) {
                writeln!(spot, "{d},{a},{}", ss + dev.step(&mut rng)).unwrap();
            }
        }

        let mut forward = String::from("date,horizon,price\n");
        for (k, h) in config.horizons.iter().enumerate() {
            let mut p = Ar1::new(38.0 + 2.0 * k as f64, 0.98, 0.8);
            for d in dates.iter().filter(|d| is_working_day(**d)) {
                writeln!(forward, "{d},{h},{}", p.step(&mut rng)).unwrap();
            }
        }

        // Weekly reservoir levels from one week before the first day.
        let mut reservoir = String::from("date,area,fill_pct\n");
        let weeks = config.days / 7 + 3;
        for (i, a) in all.iter().enumerate().filter(|(_, a)| has_hydro(a)) {
            let phase = 0.3 * i as f64;
            let mut dev = Ar1::new(0.0, 0.9, 0.08);
            for w in 0..weeks {
                let d = config.start + Duration::days(7 * w as i64 - 7);
                let x = 0.1 * i as f64 - 0.2
                    + 0.9 * (2.0 * PI * w as f64 / 52.0 + phase).sin()
                    + 0.2 * (4.0 * PI * w as f64 / 52.0).cos()
                    + dev.step(&mut rng);
                writeln!(reservoir, "{d},{a},{}", inverse_logit_fill(x)).unwrap();
            }
        }

        let mut redefinitions = String::from("date\n");
        for r in &config.redefinitions {
            writeln!(redefinitions, "{r}").unwrap();
        }

        let mut sources = Sources {
            areas,
            spot,
            forward,
            cfd: None,
            reservoir: Some(reservoir),
            redefinitions: Some(redefinitions),
            reservoir_map: None,
        };
        let (covariates_only, _) = ingest(&sources, IngestOptions::default())?;

        let mut coefficients = BTreeMap::new();
        for &h in &config.horizons {
            for a in OBSERVED {
                coefficients.insert((a.into(), h), observed_coefficients(a, h));
            }
            for target in UNOBSERVED {
                let mut beta = [0.0; 4];
                for (j, (_, rho)) in true_weights(target).iter().enumerate() {
                    beta[j] = OBSERVED
                        .iter()
                        .zip(rho)
                        .map(|(a, w)| w * observed_coefficients(a, h)[j])
                        .sum();
                }
                coefficients.insert((target.into(), h), beta);
            }
        }

        let noise =
            Normal::new(0.0, config.noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut cfd = String::from("date,area,horizon,price\n");
        for &h in &config.horizons {
            for a in OBSERVED {
                let id: AreaId = a.into();
                let beta = coefficients[&(id.clone(), h)];
                for d in covariates_only.fw[&h].keys() {
                    let Some(mean) = linear_mean(&covariates_only, &id, h, *d, &beta) else {
                        continue;
                    };
                    writeln!(cfd, "{d},{a},{h},{}", mean + noise.sample(&mut rng)).unwrap();
                }
            }
        }
        sources.cfd = Some(cfd);
        let (panel, _) = ingest(&sources, IngestOptions::default())?;
        Ok(SyntheticMarket {
            config,
            sources,
            panel,
            coefficients,
        })
    }

    /// Noise-free mean CfD path of `area`.
    pub fn true_mean_cfd(&self, area: &AreaId, horizon: Horizon) -> BTreeMap<NaiveDate, f64> {
        let beta = self.coefficients[&(area.clone(), horizon)];
        self.panel
            .dates
            .iter()
            .filter_map(|d| Some((*d, linear_mean(&self.panel, area, horizon, *d, &beta)?)))
            .collect()
    }

    /// Profile matching the true weights of `target`.
    pub fn matching_profile(&self, target: &str, months: f64) -> ElicitationProfile {
        ElicitationProfile {
            target: target.into(),
            observed_order: OBSERVED.map(AreaId::from).to_vec(),
            rows: true_weights(target)
                .into_iter()
                .map(|(covariate, rho)| ProfileRow {
                    covariate,
                    rho,
                    months,
                })
                .collect(),
            transcript: None,
        }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_sources(&self.sources, dir)
    }
}

fn linear_mean(
    panel: &MarketPanel,
    area: &AreaId,
    h: Horizon,
    d: NaiveDate,
    beta: &[f64; 4],
) -> Option<f64> {
    let hydro = panel.areas.get(area)?.has_hydro;
    let mut mean = 0.0;
    for (j, &c) in Covariate::for_area(hydro).iter().enumerate() {
        mean += beta[j] * panel.covariate(area, h, c, d)?;
    }
    Some(mean)
}

pub fn write_sources(sources: &Sources, dir: &Path) -> Result<()> {
    let io = |path: &Path, source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let files: [(&str, Option<&String>); 7] = [
        ("areas.csv", Some(&sources.areas)),
        ("spot.csv", Some(&sources.spot)),
        ("forward.csv", Some(&sources.forward)),
        ("cfd.csv", sources.cfd.as_ref()),
        ("reservoir.csv", sources.reservoir.as_ref()),
        ("redefinitions.csv", sources.redefinitions.as_ref()),
        ("reservoir_map.csv", sources.reservoir_map.as_ref()),
    ];
    for (name, body) in files {
        if let Some(body) = body {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| io(&p, e))?;
        }
    }
    Ok(())
}

/// A market without risk premia: monthly expected spot levels are known,
/// `M1` forwards and CfDs quote the expected system and area-minus-system
/// averages of the next month, and realised daily spots scatter around
/// those expectations.
pub fn no_premium_market(seed: u64, months: u32) -> Result<MarketPanel> {
    let mut rng = rng::stream(seed, 1);
    let start = NaiveDate::from_ymd_opt(2006, 1, 1).unwrap();
    let end = crate::calendar::delivery_period(start, Horizon::M1).start;
    let end = (0..months).fold(end, |d, _| delivery_period(d, Horizon::M1).start);
    let mut levels: BTreeMap<NaiveDate, (f64, f64)> = BTreeMap::new();
    let month_start = |d: NaiveDate| d.with_day(1).unwrap();
    let mut d = start;
    while d < end + Duration::days(62) {
        let m = month_start(d);
        levels
            .entry(m)
            .or_insert_with(|| (rng.random_range(25.0..55.0), rng.random_range(-5.0..5.0)));
        d += Duration::days(1);
    }
    let noise = Normal::new(0.0, 6.0).unwrap();
    let mut spot = String::from("date,area,price\n");
    let mut forward = String::from("date,horizon,price\n");
    let mut cfd = String::from("date,area,horizon,price\n");
    let mut d = start;
    while d < end {
        let (sys, spread) = levels[&month_start(d)];
        writeln!(spot, "{d},SYS,{}", sys + noise.sample(&mut rng)).unwrap();
        writeln!(spot, "{d},NO1,{}", sys + spread + noise.sample(&mut rng)).unwrap();
        if is_working_day(d) {
            let next = delivery_period(d, Horizon::M1).start;
            let (nsys, nspread) = levels[&next];
            writeln!(forward, "{d},M1,{nsys}").unwrap();
            writeln!(cfd, "{d},NO1,M1,{nspread}").unwrap();
        }
        d += Duration::days(1);
    }
    let mut reservoir = String::from("date,area,fill_pct\n");
    let mut w = start;
    let mut k = 0.0;
    while w < end + Duration::days(7) {
        writeln!(
            reservoir,
            "{w},NO1,{}",
            50.0 + 30.0 * (k * 2.0 * PI / 52.0).sin() + (k * 0.7).cos()
        )
        .unwrap();
        w += Duration::days(7);
        k += 1.0;
    }
    let sources = Sources {
        areas: "area,has_hydro,observed_cfd\nNO1,true,true\n".into(),
        spot,
        forward,
        cfd: Some(cfd),
        reservoir: Some(reservoir),
        redefinitions: None,
        reservoir_map: None,
    };
    Ok(ingest(&sources, IngestOptions::default())?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unobserved_coefficients_are_convex_combinations() {
        let m = SyntheticMarket::generate(SyntheticConfig {
            days: 120,
            redefinitions: vec![],
            ..Default::default()
        })
        .unwrap();
        for h in [Horizon::M1, Horizon::Q1, Horizon::Y1] {
            let b = m.coefficients[&("NO2".into(), h)];
            for j in 0..4 {
                let vals: Vec<f64> = OBSERVED
                    .iter()
                    .filter(|a| j < 3 || has_hydro(a))
                    .map(|a| m.coefficients[&((*a).into(), h)][j])
                    .collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(lo - 1e-12 <= b[j] && b[j] <= hi + 1e-12);
            }
        }
        assert!(
            m.panel
                .cfd_series(&"NO1".into(), Horizon::M1)
                .unwrap()
                .len()
                > 60
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SyntheticConfig {
            days: 60,
            redefinitions: vec![],
            ..Default::default()
        };
        let a = SyntheticMarket::generate(cfg.clone()).unwrap();
        let b = SyntheticMarket::generate(cfg).unwrap();
        assert_eq!(a.sources.cfd, b.sources.cfd);
    }
}
