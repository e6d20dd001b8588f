//! Service configuration: TOML file plus `CHESSVOX_*` environment overrides.

use std::path::{Path, PathBuf};

use chessvox_core::chess::ComputerPolicy;
use chessvox_core::FeatureKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::DEFAULT_TAKES_PER_WORD;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("environment variable {name}: cannot parse {value:?}")]
    Env { name: &'static str, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub corpus_root: PathBuf,
    pub feature_kind: FeatureKind,
    pub k: usize,
    /// Hold recognised moves until the client confirms them.
    pub confirm_moves: bool,
    pub listen: String,
    pub takes_per_word: usize,
    pub computer: ComputerPolicy,
    /// Events included in a state snapshot.
    pub snapshot_events: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            corpus_root: PathBuf::from("corpus"),
            feature_kind: FeatureKind::Gammatone,
            k: 1,
            confirm_moves: true,
            listen: "127.0.0.1:8080".into(),
            takes_per_word: DEFAULT_TAKES_PER_WORD,
            computer: ComputerPolicy::default(),
            snapshot_events: 20,
        }
    }
}

fn env_value<T: std::str::FromStr>(
    get: &impl Fn(&str) -> Option<String>,
    name: &'static str,
) -> Result<Option<T>, ConfigError> {
    match get(name) {
        None => Ok(None),
        Some(value) => value.trim().parse().map(Some).map_err(|_| ConfigError::Env { name, value }),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl ServiceConfig {
    /// Defaults, then the file (if given), then the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let base = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        base.with_env(|name| std::env::var(name).ok())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    /// Applies `CHESSVOX_CORPUS_ROOT`, `CHESSVOX_FEATURE_KIND`, `CHESSVOX_K`,
    /// `CHESSVOX_CONFIRM_MOVES` and `CHESSVOX_LISTEN` from `get`.
    pub fn with_env(mut self, get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        if let Some(root) = get("CHESSVOX_CORPUS_ROOT") {
            self.corpus_root = root.into();
        }
        if let Some(kind) = env_value::<FeatureKind>(&get, "CHESSVOX_FEATURE_KIND")? {
            self.feature_kind = kind;
        }
        if let Some(k) = env_value::<usize>(&get, "CHESSVOX_K")? {
            self.k = k;
        }
        if let Some(value) = get("CHESSVOX_CONFIRM_MOVES") {
            self.confirm_moves = parse_bool(&value).ok_or(ConfigError::Env { name: "CHESSVOX_CONFIRM_MOVES", value })?;
        }
        if let Some(listen) = get("CHESSVOX_LISTEN") {
            self.listen = listen;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::Invalid("k must be at least 1"));
        }
        if self.takes_per_word < crate::profiles::MIN_TAKES_PER_WORD {
            return Err(ConfigError::Invalid("takes_per_word is below the minimum of 3"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_then_env() {
        let cfg: ServiceConfig = toml::from_str(
            r#"
            corpus_root = "/data/corpus"
            feature_kind = "MEL"
            k = 3
            computer = { policy = "RANDOM", seed = 7 }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.feature_kind, FeatureKind::Mel);
        assert_eq!(cfg.computer, ComputerPolicy::Random { seed: 7 });
        assert!(cfg.confirm_moves);

        let env = |name: &str| match name {
            "CHESSVOX_K" => Some("5".to_string()),
            "CHESSVOX_FEATURE_KIND" => Some("gtcc".to_string()),
            "CHESSVOX_CONFIRM_MOVES" => Some("off".to_string()),
            _ => None,
        };
        let cfg = cfg.with_env(env).unwrap();
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.feature_kind, FeatureKind::Gammatone);
        assert!(!cfg.confirm_moves);
        assert_eq!(cfg.corpus_root, PathBuf::from("/data/corpus"));
    }

    #[test]
    fn bad_env_values_are_reported() {
        let err = ServiceConfig::default()
            .with_env(|n| (n == "CHESSVOX_K").then(|| "many".to_string()))
            .unwrap_err();
        assert!(matches!(err, ConfigError::Env { name: "CHESSVOX_K", .. }));
        let err = ServiceConfig::default()
            .with_env(|n| (n == "CHESSVOX_K").then(|| "0".to_string()))
            .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }
}
