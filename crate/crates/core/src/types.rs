use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Short price-area code such as `NO1`, `DK2` or `SE`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AreaId(String);

impl AreaId {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into().trim().to_string();
        if code.is_empty() {
            return Err(Error::AreaConfig("empty area code".into()));
        }
        Ok(AreaId(code))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for AreaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AreaId::new(s)
    }
}

impl From<&str> for AreaId {
    /// Panics on an empty string; for literals in code and tests.
    fn from(s: &str) -> Self {
        AreaId::new(s).expect("area code must be non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaInfo {
    pub id: AreaId,
    pub has_hydro: bool,
    pub observed_cfd: bool,
}

/// The declared set of price areas, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AreaConfig {
    areas: Vec<AreaInfo>,
}

impl AreaConfig {
    pub fn new(areas: Vec<AreaInfo>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for a in &areas {
            if a.id.as_str() == SYSTEM_AREA {
                return Err(Error::AreaConfig(format!(
                    "{SYSTEM_AREA} is reserved for the system price"
                )));
            }
            if !seen.insert(a.id.clone()) {
                return Err(Error::AreaConfig(format!("duplicate area {}", a.id)));
            }
        }
        Ok(AreaConfig { areas })
    }

    pub fn iter(&self) -> impl Iterator<Item = &AreaInfo> {
        self.areas.iter()
    }

    pub fn get(&self, id: &AreaId) -> Option<&AreaInfo> {
        self.areas.iter().find(|a| &a.id == id)
    }

    pub fn require(&self, id: &AreaId) -> Result<&AreaInfo> {
        self.get(id).ok_or_else(|| Error::UnknownArea(id.clone()))
    }

    pub fn observed(&self) -> impl Iterator<Item = &AreaInfo> {
        self.areas.iter().filter(|a| a.observed_cfd)
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }
}

/// Area code used for the system price in `spot.csv`.
pub const SYSTEM_AREA: &str = "SYS";

/// Relative delivery period of a forward or CfD contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Horizon {
    M1,
    M2,
    Q1,
    Q2,
    Q3,
    Y1,
    Y2,
    Y3,
}

impl Horizon {
    pub const ALL: [Horizon; 8] = [
        Horizon::M1,
        Horizon::M2,
        Horizon::Q1,
        Horizon::Q2,
        Horizon::Q3,
        Horizon::Y1,
        Horizon::Y2,
        Horizon::Y3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Horizon::M1 => "M1",
            Horizon::M2 => "M2",
            Horizon::Q1 => "Q1",
            Horizon::Q2 => "Q2",
            Horizon::Q3 => "Q3",
            Horizon::Y1 => "Y1",
            Horizon::Y2 => "Y2",
            Horizon::Y3 => "Y3",
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Horizon {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Horizon::ALL
            .into_iter()
            .find(|h| h.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown horizon {s:?}")))
    }
}

/// Regression covariates, in design-matrix column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Covariate {
    /// System forward price for the same delivery period.
    #[serde(rename = "FW")]
    Forward,
    /// Area spot price.
    #[serde(rename = "SA")]
    AreaSpot,
    /// System spot price.
    #[serde(rename = "SS")]
    SystemSpot,
    /// Seasonally adjusted reservoir deviation.
    #[serde(rename = "WA", alias = "HY")]
    Reservoir,
}

impl Covariate {
    pub const ALL: [Covariate; 4] = [
        Covariate::Forward,
        Covariate::AreaSpot,
        Covariate::SystemSpot,
        Covariate::Reservoir,
    ];

    /// Covariates of the regression for an area.
    pub fn for_area(has_hydro: bool) -> &'static [Covariate] {
        if has_hydro {
            &Self::ALL
        } else {
            &Self::ALL[..3]
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Covariate::Forward => "FW",
            Covariate::AreaSpot => "SA",
            Covariate::SystemSpot => "SS",
            Covariate::Reservoir => "WA",
        }
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Covariate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FW" => Ok(Covariate::Forward),
            "SA" => Ok(Covariate::AreaSpot),
            "SS" => Ok(Covariate::SystemSpot),
            "WA" | "HY" => Ok(Covariate::Reservoir),
            _ => Err(Error::Parse(format!("unknown covariate {s:?}"))),
        }
    }
}

/// A period between consecutive area redefinitions, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Epoch {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Epoch {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// Identifier used in persisted records, `start..end`.
    pub fn id(&self) -> String {
        format!("{}..{}", self.start, self.end)
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for Epoch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| Error::Parse(format!("epoch {s:?} is not start..end")))?;
        let parse = |d: &str| {
            NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
                .map_err(|e| Error::Parse(format!("epoch date {d:?}: {e}")))
        };
        Ok(Epoch {
            start: parse(a)?,
            end: parse(b)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_parse_roundtrip() {
        for h in Horizon::ALL {
            assert_eq!(h.as_str().parse::<Horizon>().unwrap(), h);
        }
        assert!("M3".parse::<Horizon>().is_err());
    }

    #[test]
    fn hydro_alias() {
        assert_eq!("HY".parse::<Covariate>().unwrap(), Covariate::Reservoir);
        assert_eq!(Covariate::for_area(false).len(), 3);
    }

    #[test]
    fn duplicate_area_rejected() {
        let info = |c: &str| AreaInfo {
            id: c.into(),
            has_hydro: true,
            observed_cfd: true,
        };
        assert!(AreaConfig::new(vec![info("NO1"), info("NO1")]).is_err());
        assert!(AreaId::new("  ").is_err());
    }
}
