//! Expert similarity judgements as Dirichlet priors over observed areas.
//!
//! For a target area without traded CfDs each regression coefficient is a
//! weighted average of the observed areas' coefficients, with one weight
//! vector per covariate. The expert gives, per covariate, a similarity score
//! for every observed area (rescaled to the simplex, `rho`) and the number of
//! months of data their judgement is worth. The weight vector is then
//! `Dirichlet(alpha)` with `alpha = rho * months * days_per_month`, so `rho`
//! is the prior mean and `months * days_per_month` the effective sample size.
//! Zero entries of `rho` are structural: those weights are exactly zero.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{AreaConfig, AreaId, Covariate};

pub const DEFAULT_DAYS_PER_MONTH: f64 = 21.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub covariate: Covariate,
    /// Similarity weights in `observed_order`.
    pub rho: Vec<f64>,
    pub months: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationProfile {
    pub target: AreaId,
    pub observed_order: Vec<AreaId>,
    pub rows: Vec<ProfileRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Transcript>,
}

impl ElicitationProfile {
    pub fn row(&self, c: Covariate) -> Option<&ProfileRow> {
        self.rows.iter().find(|r| r.covariate == c)
    }

    pub fn position(&self, area: &AreaId) -> Option<usize> {
        self.observed_order.iter().position(|a| a == area)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// SHA-256 of the canonical document, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.transcript = None;
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }
}

/// Rescale every row to the simplex and check it against the area
/// configuration. Idempotent on its own output.
pub fn validate_profile(
    profile: &ElicitationProfile,
    areas: &AreaConfig,
) -> Result<ElicitationProfile> {
    let invalid = |m: String| Err(Error::InvalidProfile(m));
    let target = areas.require(&profile.target)?;
    if target.observed_cfd {
        return invalid(format!("target {} has observed CfDs", target.id));
    }
    if profile.observed_order.is_empty() {
        return invalid("no observed areas".into());
    }
    let mut seen = BTreeSet::new();
    for a in &profile.observed_order {
        let info = areas.require(a)?;
        if !info.observed_cfd {
            return invalid(format!("{a} has no observed CfDs"));
        }
        if !seen.insert(a) {
            return invalid(format!("{a} listed twice"));
        }
    }
    let mut covs = BTreeSet::new();
    let mut rows = Vec::with_capacity(profile.rows.len());
    for row in &profile.rows {
        let c = row.covariate;
        if !covs.insert(c) {
            return invalid(format!("duplicate row {c}"));
        }
        if row.rho.len() != profile.observed_order.len() {
            return invalid(format!(
                "row {c} has {} weights for {} observed areas",
                row.rho.len(),
                profile.observed_order.len()
            ));
        }
        if !(row.months > 0.0 && row.months.is_finite()) {
            return Err(Error::NonPositiveMonths {
                covariate: c,
                value: row.months,
            });
        }
        for (&v, a) in row.rho.iter().zip(&profile.observed_order) {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::NegativeWeight {
                    covariate: c,
                    area: a.clone(),
                    value: v,
                });
            }
            if c == Covariate::Reservoir && v > 0.0 && !areas.require(a)?.has_hydro {
                return Err(Error::StructuralZeroViolated {
                    covariate: c,
                    area: a.clone(),
                    value: v,
                });
            }
        }
        let total: f64 = row.rho.iter().sum();
        if total <= 0.0 {
            return Err(Error::AllZeroRow { covariate: c });
        }
        let rho = if total == 1.0 {
            row.rho.clone()
        } else {
            row.rho.iter().map(|v| v / total).collect()
        };
        rows.push(ProfileRow {
            covariate: c,
            rho,
            months: row.months,
        });
    }
    for &c in Covariate::for_area(target.has_hydro) {
        if !covs.contains(&c) {
            return invalid(format!("missing row {c}"));
        }
    }
    if !target.has_hydro && covs.contains(&Covariate::Reservoir) {
        return invalid(format!(
            "target {} has no hydro power but a {} row",
            target.id,
            Covariate::Reservoir
        ));
    }
    rows.sort_by_key(|r| r.covariate);
    Ok(ElicitationProfile {
        target: profile.target.clone(),
        observed_order: profile.observed_order.clone(),
        rows,
        transcript: profile.transcript.clone(),
    })
}

/// Dirichlet concentration for one row: positive entries only.
#[derive(Debug, Clone, PartialEq)]
pub struct Concentration {
    /// Positions in `observed_order` with positive `rho`.
    pub support: Vec<usize>,
    pub alpha: Vec<f64>,
    /// Total concentration, `months * days_per_month`.
    pub total: f64,
}

pub fn concentration(rho: &[f64], months: f64, days_per_month: f64) -> Concentration {
    let total = months * days_per_month;
    let (support, alpha) = rho
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(i, &r)| (i, r * total))
        .unzip();
    Concentration {
        support,
        alpha,
        total,
    }
}

/// Dirichlet sampler built from per-coordinate Gamma samplers.
#[derive(Debug, Clone)]
pub struct DirichletRow {
    len: usize,
    support: Vec<usize>,
    gammas: Vec<Gamma<f64>>,
}

impl DirichletRow {
    pub fn new(rho: &[f64], months: f64, days_per_month: f64) -> Result<Self> {
        let c = concentration(rho, months, days_per_month);
        if c.support.is_empty() {
            return Err(Error::InvalidProfile("row without positive weight".into()));
        }
        let gammas = c
            .alpha
            .iter()
            .map(|&a| {
                Gamma::new(a, 1.0)
                    .map_err(|e| Error::InvalidProfile(format!("concentration {a}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(DirichletRow {
            len: rho.len(),
            support: c.support,
            gammas,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        if self.support.len() == 1 {
            out[self.support[0]] = 1.0;
            return out;
        }
        loop {
            let g: Vec<f64> = self.gammas.iter().map(|d| d.sample(rng)).collect();
            let total: f64 = g.iter().sum();
            // All-underflow is possible only for tiny concentrations.
            if total > 0.0 {
                for (&i, v) in self.support.iter().zip(g) {
                    out[i] = v / total;
                }
                return out;
            }
        }
    }
}

/// One weight vector per profile row, rows in profile order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDraw {
    pub rows: Vec<Vec<f64>>,
}

/// Prepared samplers for all rows of a validated profile.
#[derive(Debug, Clone)]
pub struct ProfileSampler {
    pub covariates: Vec<Covariate>,
    rows: Vec<DirichletRow>,
}

impl ProfileSampler {
    pub fn new(profile: &ElicitationProfile, days_per_month: f64) -> Result<Self> {
        if !(days_per_month > 0.0 && days_per_month.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "days_per_month must be positive, got {days_per_month}"
            )));
        }
        let rows = profile
            .rows
            .iter()
            .map(|r| DirichletRow::new(&r.rho, r.months, days_per_month))
            .collect::<Result<_>>()?;
        Ok(ProfileSampler {
            covariates: profile.rows.iter().map(|r| r.covariate).collect(),
            rows,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightDraw {
        WeightDraw {
            rows: self.rows.iter().map(|r| r.sample(rng)).collect(),
        }
    }
}

/// `n_draws` independent weight draws from a validated profile.
pub fn sample_weights(
    profile: &ElicitationProfile,
    n_draws: usize,
    seed: u64,
    days_per_month: f64,
) -> Result<Vec<WeightDraw>> {
    let sampler = ProfileSampler::new(profile, days_per_month)?;
    let mut rng = rng::stream(seed, 0);
    Ok((0..n_draws).map(|_| sampler.draw(&mut rng)).collect())
}

/// Raw answers of an elicitation session, kept with the profile for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub target: AreaId,
    pub observed_order: Vec<AreaId>,
    pub similarity: Vec<SimilarityAnswer>,
    pub months: Vec<MonthsAnswer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityAnswer {
    pub covariate: Covariate,
    pub area: AreaId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthsAnswer {
    pub covariate: Covariate,
    pub months: f64,
}

fn covariate_phrase(c: Covariate) -> &'static str {
    match c {
        Covariate::Forward => "the system forward price",
        Covariate::AreaSpot => "the area spot price",
        Covariate::SystemSpot => "the system spot price",
        Covariate::Reservoir => "the hydrological balance",
    }
}

/// Similarity question for covariate `c`, comparing `target` with `observed`.
pub fn similarity_question(c: Covariate, target: &AreaId, observed: &AreaId) -> String {
    let what = covariate_phrase(c);
    let local = |a: &AreaId| {
        if matches!(c, Covariate::AreaSpot | Covariate::Reservoir) {
            format!("{what} (in {a})")
        } else {
            what.to_string()
        }
    };
    format!(
        "Think of how {} moves the hypothetical CfD price in {target}. \
         How similar is that to how {} moves the observed CfD price in {observed}? \
         (non-negative score, any scale)",
        local(target),
        local(observed),
    )
}

/// Confidence question asked once per covariate.
pub fn months_question(c: Covariate) -> String {
    format!(
        "Your answers for {} could in principle have been estimated from data. \
         How many months of data would carry as much information as your judgement?",
        covariate_phrase(c)
    )
}

/// Build a validated profile from a complete transcript.
pub fn elicit_session(transcript: &Transcript, areas: &AreaConfig) -> Result<ElicitationProfile> {
    let target = areas.require(&transcript.target)?;
    let mut rows = Vec::new();
    for &c in Covariate::for_area(target.has_hydro) {
        let mut rho = Vec::with_capacity(transcript.observed_order.len());
        for a in &transcript.observed_order {
            let structural = c == Covariate::Reservoir && !areas.require(a)?.has_hydro;
            if structural {
                rho.push(0.0);
                continue;
            }
            let answer = transcript
                .similarity
                .iter()
                .find(|s| s.covariate == c && &s.area == a)
                .ok_or_else(|| Error::IncompleteTranscript(format!("no {c} answer for {a}")))?;
            rho.push(answer.score);
        }
        let months = transcript
            .months
            .iter()
            .find(|m| m.covariate == c)
            .ok_or_else(|| Error::IncompleteTranscript(format!("no months answer for {c}")))?
            .months;
        rows.push(ProfileRow {
            covariate: c,
            rho,
            months,
        });
    }
    validate_profile(
        &ElicitationProfile {
            target: transcript.target.clone(),
            observed_order: transcript.observed_order.clone(),
            rows,
            transcript: Some(transcript.clone()),
        },
        areas,
    )
}
