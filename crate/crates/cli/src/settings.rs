//! TOML settings: profile, detection overrides and provider choices.

use std::path::{Path, PathBuf};

use kea_core::pipeline::{DetectionConfig, Profile};
use serde::Deserialize;

use crate::args::{EmbedderChoice, GlobalArgs};
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingsFile {
    profile: Option<String>,
    detection: Option<toml::Table>,
    #[serde(default)]
    providers: ProviderSettings,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSettings {
    pub embedder: Option<EmbedderChoice>,
    pub llm_fixtures: Option<PathBuf>,
    pub wikidata_fixture: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub sparql_endpoint: Option<String>,
    pub query_timeout_secs: Option<f64>,
    pub sparql_concurrency: Option<usize>,
    pub request_cap: Option<usize>,
    pub embedding_batch_size: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub profile: Option<Profile>,
    pub detection: DetectionConfig,
    pub providers: ProviderSettings,
}

fn profile_config(name: &str) -> Result<(Option<Profile>, DetectionConfig), CliError> {
    if name.eq_ignore_ascii_case("custom") {
        return Ok((None, DetectionConfig::default()));
    }
    Profile::parse(name)
        .map(|p| (Some(p), p.config()))
        .ok_or_else(|| CliError::Usage(format!("unknown profile {name:?} (summeval, qags_c, wikibio, custom)")))
}

fn overlay(base: &DetectionConfig, table: toml::Table) -> Result<DetectionConfig, CliError> {
    let mut merged = toml::Table::try_from(base).map_err(|e| CliError::Usage(e.to_string()))?;
    merged.extend(table);
    merged
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("[detection]: {}", e.message())))
}

impl Settings {
    /// Defaults, then profile, then the `[detection]` table, then flags.
    pub fn resolve(global: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &global.config {
            Some(path) => load_file(path)?,
            None => SettingsFile::default(),
        };
        let profile_name = global.profile.clone().or(file.profile.clone());
        let (profile, mut detection) = match &profile_name {
            Some(name) => profile_config(name)?,
            None => (None, DetectionConfig::default()),
        };
        if let Some(table) = file.detection {
            detection = overlay(&detection, table)?;
        }
        if let Some(t) = global.threshold {
            detection.kernel_threshold = t;
        }
        if let Some(h) = global.iterations {
            detection.wl_iterations = h;
        }
        detection.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let mut providers = file.providers;
        if global.embedder.is_some() {
            providers.embedder = global.embedder;
        }
        if global.llm_fixtures.is_some() {
            providers.llm_fixtures = global.llm_fixtures.clone();
        }
        if global.wikidata_fixture.is_some() {
            providers.wikidata_fixture = global.wikidata_fixture.clone();
        }
        if global.cache_dir.is_some() {
            providers.cache_dir = global.cache_dir.clone();
        }
        Ok(Self {
            profile,
            detection,
            providers,
        })
    }
}

fn load_file(path: &Path) -> Result<SettingsFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
}
