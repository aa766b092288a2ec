//! Settings from an optional TOML file, overridden by `STATVIZ_*` variables,
//! overridden in turn by command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use statviz_core::pipeline::Paths;
use statviz_core::synth::RankingWeights;
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_SESSION_TTL_SECS: u64 = 3600;
const DEFAULT_CONFIG: &str = "statviz.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{name}={value:?} is not valid: {message}")]
    Env { name: &'static str, value: String, message: String },
    #[error("weights must be three non-negative numbers \"ws,wv,wi\" with a positive sum, got {0:?}")]
    Weights(String),
}

/// The config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub assets: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub port: Option<u16>,
    pub weights: Option<String>,
    pub templates: Option<PathBuf>,
    pub session_ttl_secs: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })
    }

    /// `explicit` if given, else `statviz.toml` in the working directory when present.
    pub fn discover(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None if Path::new(DEFAULT_CONFIG).is_file() => Self::load(Path::new(DEFAULT_CONFIG)),
            None => Ok(Self::default()),
        }
    }

    /// Applies `STATVIZ_*` variables read through `var`.
    pub fn with_env(mut self, var: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        if let Some(v) = var("STATVIZ_ASSETS") {
            self.assets = Some(v.into());
        }
        if let Some(v) = var("STATVIZ_MODEL") {
            self.model = Some(v.into());
        }
        if let Some(v) = var("STATVIZ_EMBEDDINGS") {
            self.embeddings = Some(v.into());
        }
        if let Some(v) = var("STATVIZ_TEMPLATES") {
            self.templates = Some(v.into());
        }
        if let Some(v) = var("STATVIZ_WEIGHTS") {
            self.weights = Some(v);
        }
        if let Some(v) = var("STATVIZ_PORT") {
            let port = v.parse().map_err(|e: std::num::ParseIntError| ConfigError::Env {
                name: "STATVIZ_PORT",
                value: v.clone(),
                message: e.to_string(),
            })?;
            self.port = Some(port);
        }
        if let Some(v) = var("STATVIZ_SESSION_TTL_SECS") {
            let ttl = v.parse().map_err(|e: std::num::ParseIntError| ConfigError::Env {
                name: "STATVIZ_SESSION_TTL_SECS",
                value: v.clone(),
                message: e.to_string(),
            })?;
            self.session_ttl_secs = Some(ttl);
        }
        Ok(self)
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub paths: Paths,
    pub port: u16,
    pub weights: RankingWeights,
    pub templates: PathBuf,
    pub session_ttl_secs: u64,
}

pub fn parse_weights(s: &str) -> Result<RankingWeights, ConfigError> {
    RankingWeights::parse(s).ok_or_else(|| ConfigError::Weights(s.to_string()))
}

impl Settings {
    /// Model and embeddings default to their places inside the asset
    /// directory; templates live next to it.
    pub fn resolve(file: FileConfig) -> Result<Self, ConfigError> {
        let assets = file.assets.unwrap_or_else(|| PathBuf::from("assets"));
        let defaults = Paths::in_assets(&assets);
        let weights = match &file.weights {
            Some(w) => parse_weights(w)?,
            None => RankingWeights::default(),
        };
        Ok(Settings {
            paths: Paths {
                model: file.model.unwrap_or(defaults.model),
                embeddings: file.embeddings.unwrap_or(defaults.embeddings),
                assets,
            },
            port: file.port.unwrap_or(DEFAULT_PORT),
            weights,
            templates: file.templates.unwrap_or_else(|| PathBuf::from("templates.jsonl")),
            session_ttl_secs: file.session_ttl_secs.unwrap_or(DEFAULT_SESSION_TTL_SECS),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn env_overrides_file() {
        let file: FileConfig = toml::from_str("assets = \"a\"\nport = 9000\nweights = \"1,1,1\"").unwrap();
        let env = HashMap::from([("STATVIZ_PORT", "9100"), ("STATVIZ_MODEL", "m.json")]);
        let s = Settings::resolve(file.with_env(|k| env.get(k).map(|v| v.to_string())).unwrap()).unwrap();
        assert_eq!(s.port, 9100);
        assert_eq!(s.paths.assets, PathBuf::from("a"));
        assert_eq!(s.paths.model, PathBuf::from("m.json"));
        assert_eq!(s.paths.embeddings, PathBuf::from("a/embeddings.txt"));
        assert_eq!(s.weights, RankingWeights { semantic: 1.0, visual: 1.0, informative: 1.0 });
    }

    #[test]
    fn rejects_bad_values() {
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
        assert!(FileConfig::default().with_env(|k| (k == "STATVIZ_PORT").then(|| "x".into())).is_err());
        assert!(Settings::resolve(FileConfig { weights: Some("1,2".into()), ..Default::default() }).is_err());
    }
}
