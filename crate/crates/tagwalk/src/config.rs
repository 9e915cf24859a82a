//! Simulator configuration file.
//!
//! ```json
//! { "laser": { "period_ps": 1860.465, "mean_photon_number": 0.01, ... },
//!   "detector": { "tau_bias_ps": 40000, ... } }
//! ```
//!
//! Missing keys take their defaults; unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tagwalk_core::{DetectorConfig, LaserConfig};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub laser: LaserConfig,
    pub detector: DetectorConfig,
}

impl SimConfig {
    /// Checks both halves, reporting the offending field as `laser.x` or
    /// `detector.x`.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let prefixed = |section: &str, e: tagwalk_core::Error| match e {
            tagwalk_core::Error::Config { field, reason } => format!("{section}.{field}: {reason}"),
            other => format!("{section}: {other}"),
        };
        self.laser.validate().map_err(|e| prefixed("laser", e))?;
        self.detector.validate().map_err(|e| prefixed("detector", e))?;
        Ok(())
    }
}

pub fn parse_config(text: &str) -> std::result::Result<SimConfig, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." { e.inner().to_string() } else { format!("{path}: {}", e.inner()) }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|message| Error::Schema { path: path.into(), message })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_defaults() {
        assert_eq!(parse_config("{}").unwrap(), SimConfig::default());
    }

    #[test]
    fn partial_override() {
        let c = parse_config(r#"{"detector": {"intrinsic_jitter_sigma_ps": 0}}"#).unwrap();
        assert_eq!(c.detector.intrinsic_jitter_sigma_ps, 0.0);
        assert_eq!(c.detector.tau_bias_ps, DetectorConfig::default().tau_bias_ps);
    }

    #[test]
    fn unknown_key_names_path() {
        let e = parse_config(r#"{"detector": {"tau_bias": 1}}"#).unwrap_err();
        assert!(e.starts_with("detector"), "{e}");
        assert!(e.contains("tau_bias"), "{e}");
    }

    #[test]
    fn validation_names_field() {
        let e = parse_config(r#"{"detector": {"threshold_mv": 130}}"#).unwrap_err();
        assert!(e.starts_with("detector.threshold_mv"), "{e}");
        let e = parse_config(r#"{"laser": {"period_ps": -1}}"#).unwrap_err();
        assert!(e.starts_with("laser.period_ps"), "{e}");
    }

    #[test]
    fn round_trip() {
        let c = SimConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config(&text).unwrap(), c);
    }
}
