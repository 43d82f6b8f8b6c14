use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Where a collector source reads from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceLocation {
    FileGlob { pattern: String },
    Http { url: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDef {
    pub name: String,
    #[serde(flatten)]
    pub location: SourceLocation,
    /// Parser id, e.g. `observations_csv` or `price_list_json`.
    pub parser: String,
    /// Informational cron expression; scheduling is left to the host.
    #[serde(default)]
    pub schedule: Option<String>,
}

/// Run configuration, normally read from a TOML file and then overridden by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub observations: Vec<PathBuf>,
    pub categories: Option<PathBuf>,
    pub carried: Option<PathBuf>,
    pub log_dir: Option<PathBuf>,
    pub windows: Vec<u32>,
    pub focal_store: Option<String>,
    pub radius: u32,
    pub output_dir: PathBuf,
    pub screen_threshold: f64,
    pub sources: Vec<SourceDef>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            observations: Vec::new(),
            categories: None,
            carried: None,
            log_dir: None,
            windows: vec![3, 7],
            focal_store: None,
            radius: 3,
            output_dir: PathBuf::from("lagscope-out"),
            screen_threshold: 0.5,
            sources: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // relative paths in a config file are relative to that file
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.observations.iter_mut().for_each(rebase);
        cfg.categories.as_mut().map(rebase);
        cfg.carried.as_mut().map(rebase);
        cfg.log_dir.as_mut().map(rebase);
        rebase(&mut cfg.output_dir);
        for s in &mut cfg.sources {
            if let SourceLocation::FileGlob { pattern } = &mut s.location {
                if Path::new(pattern.as_str()).is_relative() {
                    *pattern = base.join(&*pattern).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() || self.windows.contains(&0) {
            bail!("windows: every window size must be at least 1 day");
        }
        if self.radius < 1 {
            bail!("radius: must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.screen_threshold) {
            bail!("screen_threshold: must lie in [0, 1]");
        }
        for s in &self.sources {
            if s.name.is_empty() {
                bail!("sources: every source needs a name");
            }
        }
        Ok(())
    }
}
