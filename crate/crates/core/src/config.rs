//! Detector configuration, indicator presets and the config fingerprint.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canny::CannyParams;
use crate::error::{Error, Result};
use crate::scan::ScanParams;
use crate::scoring::{Aggregation, ConsistencyParams, Indicator, LocalEquation, Method, Plane, RegionHeight};
use crate::select::SelectionParams;

const PRESETS_TOML: &str = include_str!("../presets/presets.toml");

/// Preset used when a configuration names none.
pub const DEFAULT_PRESET: &str = "entry22";

/// One named indicator configuration with its threshold and consistency setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub description: String,
    pub method: Method,
    pub local_equation: LocalEquation,
    pub plane: Plane,
    pub aggregation: Aggregation,
    #[serde(default = "one_pixel")]
    pub region_height: RegionHeight,
    pub threshold: f64,
    pub consistency: bool,
}

fn one_pixel() -> RegionHeight {
    RegionHeight::OnePixel
}

impl Preset {
    pub fn indicator(&self) -> Indicator {
        Indicator {
            method: self.method,
            local_equation: self.local_equation,
            plane: self.plane,
            aggregation: self.aggregation,
            region_height: self.region_height,
        }
    }
}

/// All shipped presets keyed by name (`entry1` ... `entry35`).
pub fn presets() -> &'static BTreeMap<String, Preset> {
    static PRESETS: OnceLock<BTreeMap<String, Preset>> = OnceLock::new();
    PRESETS.get_or_init(|| toml::from_str(PRESETS_TOML).expect("shipped presets parse"))
}

pub fn preset(name: &str) -> Result<&'static Preset> {
    presets()
        .get(name)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))
}

/// Preset names in entry order.
pub fn preset_names() -> Vec<&'static str> {
    let mut names: Vec<&str> = presets().keys().map(String::as_str).collect();
    names.sort_by_key(|n| n.trim_start_matches("entry").parse::<u32>().unwrap_or(u32::MAX));
    names
}

/// A fully resolved detector configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Preset the configuration started from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub indicator: Indicator,
    #[serde(default)]
    pub scan: ScanParams,
    #[serde(default)]
    pub selection: SelectionParams,
    #[serde(default)]
    pub consistency: ConsistencyParams,
    #[serde(default)]
    pub canny: CannyParams,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self::from_preset(DEFAULT_PRESET).expect("default preset exists")
    }
}

impl DetectorConfig {
    pub fn from_preset(name: &str) -> Result<Self> {
        let p = preset(name)?;
        Ok(Self {
            preset: Some(name.to_string()),
            indicator: p.indicator(),
            scan: ScanParams::default(),
            selection: SelectionParams {
                threshold: p.threshold,
                ..SelectionParams::default()
            },
            consistency: ConsistencyParams {
                enabled: p.consistency,
                ..ConsistencyParams::default()
            },
            canny: CannyParams::default(),
        })
    }

    /// Resolves a configuration file. `preset_override` (from the command
    /// line) replaces the file's preset; explicit file sections then override
    /// the preset's values field by field.
    pub fn resolve(file: &ConfigFile, preset_override: Option<&str>) -> Result<Self> {
        let name = preset_override.or(file.preset.as_deref());
        let mut cfg = Self::from_preset(name.unwrap_or(DEFAULT_PRESET))?;
        // a preset named on the command line beats an indicator in the file
        if let (Some(ind), None) = (file.indicator, preset_override) {
            cfg.indicator = ind;
            cfg.preset = None;
        }
        if let Some(scan) = file.scan {
            cfg.scan = scan;
        }
        if let Some(s) = &file.selection {
            if let Some(t) = s.threshold {
                cfg.selection.threshold = t;
            }
            if s.min_separation.is_some() {
                cfg.selection.min_separation = s.min_separation;
            }
            if s.n_phases.is_some() {
                cfg.selection.n_phases = s.n_phases;
            }
        }
        if let Some(c) = &file.consistency {
            if let Some(e) = c.enabled {
                cfg.consistency.enabled = e;
            }
            if let Some(f) = c.frac {
                cfg.consistency.frac = f;
            }
            if let Some(m) = c.min_change {
                cfg.consistency.min_change = m;
            }
        }
        if let Some(canny) = file.canny {
            cfg.canny = canny;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses and resolves TOML configuration text.
    pub fn from_toml(text: &str, preset_override: Option<&str>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(&file, preset_override)
    }

    /// Checks every numeric range; failures are configuration errors.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Param(m) => Error::Config(m),
            other => other,
        };
        self.indicator.validate().map_err(as_config)?;
        self.scan.validate().map_err(as_config)?;
        self.selection.validate().map_err(as_config)?;
        self.consistency.validate().map_err(as_config)?;
        if !(self.canny.sigma > 0.0) {
            return Err(Error::Config(format!("canny sigma must be positive, got {}", self.canny.sigma)));
        }
        if let Some((lo, hi)) = self.canny.thresholds {
            if !(0.0 <= lo && lo <= hi) {
                return Err(Error::Config(format!("canny thresholds must satisfy 0 <= low <= high, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the configuration's canonical JSON.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Configuration file contents before resolution; every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub indicator: Option<Indicator>,
    pub scan: Option<ScanParams>,
    pub selection: Option<SelectionOverride>,
    pub consistency: Option<ConsistencyOverride>,
    pub canny: Option<CannyParams>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionOverride {
    pub threshold: Option<f64>,
    pub min_separation: Option<usize>,
    pub n_phases: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyOverride {
    pub enabled: Option<bool>,
    pub frac: Option<f64>,
    pub min_change: Option<f64>,
}
