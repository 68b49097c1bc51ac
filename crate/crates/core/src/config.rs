//! Engine configuration file (TOML) with sections `context`, `detector`,
//! `tracker`, `events` and `output`. Every field has a default; a detector
//! table that omits some context labels inherits the defaults for them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::context::{ContextConfigTable, ContextLabel, ReferenceThresholds};
use crate::error::{Error, Result};
use crate::events::EventParams;
use crate::tracking::TrackerParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextSection {
    /// Label for frames that carry neither logits nor features.
    pub fallback_label: ContextLabel,
    pub reference: ReferenceThresholds,
}

impl Default for ContextSection {
    fn default() -> Self {
        ContextSection {
            fallback_label: ContextLabel::MediumAltitude,
            reference: ReferenceThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSection {
    /// IoU at or above which same-class duplicates are merged.
    pub nms_iou: f64,
    pub configs: ContextConfigTable,
}

impl Default for DetectorSection {
    fn default() -> Self {
        DetectorSection {
            nms_iou: 0.5,
            configs: ContextConfigTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputOptions {
    /// Indent the GeoJSON output.
    pub pretty_cop: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { pretty_cop: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub context: ContextSection,
    pub detector: DetectorSection,
    pub tracker: TrackerParams,
    pub events: EventParams,
    pub output: OutputOptions,
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: EngineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let defaults = ContextConfigTable::default();
        for (label, table) in defaults.0 {
            cfg.detector.configs.0.entry(label).or_insert(table);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.context.reference;
        if !(0.0..=1.0).contains(&r.uneventful_max_clutter) || !(0.0..=1.0).contains(&r.water_min_fraction) {
            return Err(Error::Config(
                "context.reference fractions must be within [0, 1]".into(),
            ));
        }
        if !(r.medium_altitude_min_m >= 0.0 && r.high_altitude_min_m >= r.medium_altitude_min_m) {
            return Err(Error::Config(
                "context.reference altitude bins must satisfy 0 <= medium <= high".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.detector.nms_iou) {
            return Err(Error::Config("detector.nms_iou must be within [0, 1]".into()));
        }
        self.detector.configs.validate()?;
        self.tracker.validate()?;
        self.events.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObjectClass;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = EngineConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        assert_eq!(EngineConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(EngineConfig::from_toml("").unwrap(), EngineConfig::default());
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let cfg = EngineConfig::from_toml(
            r#"
            [tracker]
            max_misses = 0

            [detector.configs.water]
            scales = [1.0]
            tile_size = 640
            overlap_frac = 0.1
            [detector.configs.water.class_gates.vessel]
            min_confidence = 0.6
            "#,
        )
        .unwrap();
        assert_eq!(cfg.tracker.max_misses, 0);
        assert_eq!(cfg.tracker.iou_threshold, 0.3);
        let water = &cfg.detector.configs.0[&ContextLabel::Water];
        assert_eq!(water.tile_size, 640);
        assert_eq!(water.class_gates[&ObjectClass::Vessel].min_confidence, 0.6);
        assert!(!water.class_gates.contains_key(&ObjectClass::Person));
        assert_eq!(
            cfg.detector.configs.0[&ContextLabel::LowAltitude],
            ContextConfigTable::default().0[&ContextLabel::LowAltitude]
        );
    }

    #[test]
    fn rejects_bad_values() {
        assert!(EngineConfig::from_toml("[tracker]\niou_threshold = 1.5").is_err());
        assert!(EngineConfig::from_toml("[events]\ncrowd_min_count = 1").is_err());
        assert!(EngineConfig::from_toml("[detector]\nnms_iou = -0.1").is_err());
        assert!(EngineConfig::from_toml("[tracker\n").is_err());
    }
}
