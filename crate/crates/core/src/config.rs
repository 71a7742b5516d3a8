//! Run configuration: every module's parameters plus the master seed, read
//! from a schema-versioned TOML file with `section.key=value` overrides.

use serde::{Deserialize, Serialize};

use crate::dsp::DspConfig;
use crate::error::ConfigError;
use crate::session::SessionConfig;
use crate::wakeword::{DetectConfig, MfccConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaceConfig {
    /// Seed of the projection embedder; stored in every enrollment database.
    pub embedder_seed: u64,
}

impl Default for FaceConfig {
    fn default() -> Self {
        Self { embedder_seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Master seed for every synthetic artefact.
    pub seed: u64,
    pub dsp: DspConfig,
    pub mfcc: MfccConfig,
    pub detect: DetectConfig,
    pub face: FaceConfig,
    pub session: SessionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            dsp: DspConfig::default(),
            mfcc: MfccConfig::default(),
            detect: DetectConfig::default(),
            face: FaceConfig::default(),
            session: SessionConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_table(toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses `text` (or the defaults when `None`) and applies
    /// `section.key=value` overrides in order. Values are TOML literals;
    /// anything that does not parse as one is taken as a string.
    pub fn with_overrides(text: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = match text {
            Some(t) => toml::from_str(t).map_err(|e| ConfigError::Parse(e.to_string()))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (path, raw) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::Override(o.clone()))?;
            let keys: Vec<&str> = path.trim().split('.').collect();
            if keys.iter().any(|k| k.is_empty()) || keys.len() > 2 {
                return Err(ConfigError::Override(o.clone()));
            }
            let value = parse_value(raw.trim());
            let mut cursor = &mut table;
            for k in &keys[..keys.len() - 1] {
                let entry = cursor
                    .entry(k.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                cursor = entry
                    .as_table_mut()
                    .ok_or_else(|| ConfigError::Override(o.clone()))?;
            }
            cursor.insert(keys[keys.len() - 1].to_string(), value);
        }
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        if let Some(v) = table.get("schema_version") {
            let n = v
                .as_integer()
                .ok_or_else(|| ConfigError::Parse("schema_version must be an integer".into()))?;
            if n != SCHEMA_VERSION as i64 {
                return Err(ConfigError::Version(n.try_into().unwrap_or(u32::MAX)));
            }
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: String| ConfigError::Invalid {
            key: key.into(),
            reason,
        };
        self.dsp
            .validate()
            .map_err(|e| invalid("dsp", e.to_string()))?;
        self.mfcc
            .validate(self.session.sample_rate)
            .map_err(|e| invalid("mfcc", e.to_string()))?;
        self.detect
            .validate()
            .map_err(|e| invalid("detect", e.to_string()))?;
        self.session
            .validate()
            .map_err(|e| invalid("session", e.to_string()))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // Parse as the right-hand side of a one-key document.
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::parse("").unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            RunConfig::parse("sed = 3"),
            Err(ConfigError::Parse(_))
        ));
        assert!(RunConfig::parse("[dsp]\nwindow = 512").is_err());
        assert!(RunConfig::with_overrides(None, &["session.ttl=3".into()]).is_err());
    }

    #[test]
    fn schema_version_checked() {
        assert!(matches!(
            RunConfig::parse("schema_version = 2"),
            Err(ConfigError::Version(2))
        ));
    }

    #[test]
    fn overrides_apply_in_order() {
        let c = RunConfig::with_overrides(
            Some("seed = 5\n[session]\ngate_enabled = true"),
            &[
                "session.gate_enabled=false".into(),
                "seed=9".into(),
                "dsp.aec_taps=256".into(),
                "seed=11".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.seed, 11);
        assert!(!c.session.gate_enabled);
        assert_eq!(c.dsp.aec_taps, 256);
    }

    #[test]
    fn bad_overrides() {
        assert!(matches!(
            RunConfig::with_overrides(None, &["seed".into()]),
            Err(ConfigError::Override(_))
        ));
        assert!(matches!(
            RunConfig::with_overrides(None, &["a.b.c=1".into()]),
            Err(ConfigError::Override(_))
        ));
        assert!(RunConfig::with_overrides(None, &["seed.x=1".into()]).is_err());
        assert!(matches!(
            RunConfig::with_overrides(None, &["session.auth_ttl_s=-1".into()]),
            Err(ConfigError::Invalid { .. })
        ));
    }
}
