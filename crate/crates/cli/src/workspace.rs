use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cfdcast::{AreaId, ElicitationProfile, Horizon, MarketPanel, PosteriorSet};

use crate::{CliError, JobConfig};

/// File layout of a data directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn panel_path(&self) -> PathBuf {
        self.root.join("panel.json")
    }

    pub fn posteriors_path(&self) -> PathBuf {
        self.root.join("posteriors.json")
    }

    pub fn profile_path(&self, target: &AreaId) -> PathBuf {
        self.root.join("profiles").join(format!("{target}.toml"))
    }

    pub fn forecast_path(&self, area: &AreaId, h: Horizon) -> PathBuf {
        self.root.join("forecasts").join(format!("{area}_{h}.csv"))
    }

    pub fn backtest_path(&self, area: &AreaId, h: Horizon) -> PathBuf {
        self.root.join("backtests").join(format!("{area}_{h}.csv"))
    }

    pub fn job(&self) -> Result<JobConfig> {
        let path = self.root.join("job.toml");
        if !path.exists() {
            return Ok(JobConfig::default());
        }
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        JobConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn load_panel(&self) -> Result<MarketPanel> {
        let text = read_artifact(&self.panel_path(), "panel", "ingest")?;
        Ok(MarketPanel::from_json(&text)?)
    }

    pub fn save_panel(&self, panel: &MarketPanel) -> Result<()> {
        write_atomic(&self.panel_path(), panel.to_canonical_json().as_bytes())
    }

    pub fn load_posteriors(&self) -> Result<PosteriorSet> {
        let text = read_artifact(&self.posteriors_path(), "posteriors", "fit")?;
        serde_json::from_str(&text)
            .map_err(|e| cfdcast::Error::Parse(e.to_string()))
            .with_context(|| format!("in {}", self.posteriors_path().display()))
    }

    pub fn save_posteriors(&self, set: &PosteriorSet) -> Result<()> {
        let mut text = serde_json::to_string_pretty(set)?;
        text.push('\n');
        write_atomic(&self.posteriors_path(), text.as_bytes())
    }

    pub fn load_profile(&self, target: &AreaId) -> Result<Option<ElicitationProfile>> {
        let path = self.profile_path(target);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|source| cfdcast::Error::Io {
            path: path.clone(),
            source,
        })?;
        let profile = ElicitationProfile::from_toml(&text)
            .with_context(|| format!("in {}", path.display()))?;
        Ok(Some(profile))
    }

    pub fn require_profile(&self, target: &AreaId) -> Result<ElicitationProfile> {
        self.load_profile(target)?
            .ok_or_else(|| CliError::NoProfile(target.clone()).into())
    }

    pub fn save_profile(&self, profile: &ElicitationProfile) -> Result<PathBuf> {
        let path = self.profile_path(&profile.target);
        write_atomic(&path, profile.to_toml().as_bytes())?;
        Ok(path)
    }
}

fn read_artifact(path: &Path, what: &'static str, command: &'static str) -> Result<String> {
    if !path.exists() {
        return Err(CliError::MissingArtifact {
            what,
            path: path.to_path_buf(),
            command,
        }
        .into());
    }
    fs::read_to_string(path).map_err(|source| {
        cfdcast::Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

/// Write through a temporary sibling and rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let wrap = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(wrap)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(wrap)?;
    Ok(())
}
