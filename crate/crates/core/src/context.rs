//! Scene-context classification and context-driven detector configuration.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cataloging::{ClassGate, DetectorConfig};
use crate::error::{Error, Result};
use crate::model::ObjectClass;

/// Scene context. Declaration order is the probability-vector index order
/// and the argmax tie-break precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextLabel {
    HighAltitude,
    MediumAltitude,
    LowAltitude,
    Water,
    Uneventful,
}

impl ContextLabel {
    pub const ALL: [ContextLabel; 5] = [
        ContextLabel::HighAltitude,
        ContextLabel::MediumAltitude,
        ContextLabel::LowAltitude,
        ContextLabel::Water,
        ContextLabel::Uneventful,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ContextLabel::HighAltitude => "high_altitude",
            ContextLabel::MediumAltitude => "medium_altitude",
            ContextLabel::LowAltitude => "low_altitude",
            ContextLabel::Water => "water",
            ContextLabel::Uneventful => "uneventful",
        }
    }
}

impl fmt::Display for ContextLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneContext {
    pub label: ContextLabel,
    pub probs: [f64; 5],
}

impl SceneContext {
    pub fn one_hot(label: ContextLabel) -> Self {
        let mut probs = [0.0; 5];
        probs[label.index()] = 1.0;
        SceneContext { label, probs }
    }
}

/// Per-frame scene descriptors supplied by the stream in place of an image
/// backbone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextFeatures {
    pub altitude_m: f64,
    pub water_fraction: f64,
    pub clutter_score: f64,
}

impl ContextFeatures {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_m.is_finite() && self.altitude_m >= 0.0) {
            return Err(Error::invalid("features.altitude_m", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.water_fraction) {
            return Err(Error::invalid("features.water_fraction", "must be within [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.clutter_score) {
            return Err(Error::invalid("features.clutter_score", "must be within [0, 1]"));
        }
        Ok(())
    }
}

/// Rule thresholds for [`classify_reference`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceThresholds {
    /// Frames with clutter strictly below this are uneventful.
    pub uneventful_max_clutter: f64,
    pub water_min_fraction: f64,
    pub medium_altitude_min_m: f64,
    pub high_altitude_min_m: f64,
}

impl Default for ReferenceThresholds {
    fn default() -> Self {
        ReferenceThresholds {
            uneventful_max_clutter: 0.1,
            water_min_fraction: 0.5,
            medium_altitude_min_m: 1000.0,
            high_altitude_min_m: 3000.0,
        }
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::invalid("logits", "must be non-empty"));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::invalid("logits", "values must be finite"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax head over five externally computed logits.
pub fn classify_from_logits(logits: &[f64]) -> Result<SceneContext> {
    if logits.len() != ContextLabel::ALL.len() {
        return Err(Error::invalid(
            "logits",
            format!("expected 5 values, got {}", logits.len()),
        ));
    }
    let p = softmax(logits)?;
    // argmax over the logits themselves: exp() can collapse distinct
    // large-gap logits to equal probabilities.
    let label = ContextLabel::ALL[argmax(logits)];
    let mut probs = [0.0; 5];
    probs.copy_from_slice(&p);
    Ok(SceneContext { label, probs })
}

/// Rule-based classifier over stream-supplied features. Precedence is
/// uneventful, then water, then altitude bins.
pub fn classify_reference(f: &ContextFeatures, t: &ReferenceThresholds) -> SceneContext {
    let label = if f.clutter_score < t.uneventful_max_clutter {
        ContextLabel::Uneventful
    } else if f.water_fraction >= t.water_min_fraction {
        ContextLabel::Water
    } else if f.altitude_m >= t.high_altitude_min_m {
        ContextLabel::HighAltitude
    } else if f.altitude_m >= t.medium_altitude_min_m {
        ContextLabel::MediumAltitude
    } else {
        ContextLabel::LowAltitude
    };
    SceneContext::one_hot(label)
}

/// False only for uneventful frames, which skip cataloging and events.
pub fn is_actionable(ctx: &SceneContext) -> bool {
    ctx.label != ContextLabel::Uneventful
}

/// Detector configuration per actionable context label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextConfigTable(pub BTreeMap<ContextLabel, DetectorConfig>);

impl ContextConfigTable {
    pub fn validate(&self) -> Result<()> {
        for label in ContextLabel::ALL {
            if label == ContextLabel::Uneventful {
                continue;
            }
            match self.0.get(&label) {
                Some(cfg) => cfg.validate().map_err(|e| {
                    Error::Config(format!("detector config for {label}: {e}"))
                })?,
                None => {
                    return Err(Error::Config(format!(
                        "detector config table has no entry for {label}"
                    )))
                }
            }
        }
        Ok(())
    }
}

impl Default for ContextConfigTable {
    fn default() -> Self {
        use ContextLabel::*;
        let mut table = BTreeMap::new();
        // scale > 1 upsamples small high-altitude targets
        table.insert(
            HighAltitude,
            default_config(vec![1.0, 2.0], 0.0005, 0.002, 0.9),
        );
        table.insert(MediumAltitude, default_config(vec![1.0], 0.002, 0.02, 0.9));
        table.insert(LowAltitude, default_config(vec![0.5, 1.0], 0.01, 0.02, 0.9));
        table.insert(Water, default_config(vec![1.0], 0.01, 0.02, 0.5));
        ContextConfigTable(table)
    }
}

fn default_config(
    scales: Vec<f64>,
    person_max_frac: f64,
    vehicle_max_frac: f64,
    vessel_min_conf: f64,
) -> DetectorConfig {
    let gate = |min_confidence: f64, max_area_frac: Option<f64>| ClassGate {
        min_confidence,
        min_area_px2: 0.0,
        max_area_px2: None,
        max_area_frac,
    };
    let mut class_gates = BTreeMap::new();
    class_gates.insert(ObjectClass::Person, gate(0.5, Some(person_max_frac)));
    class_gates.insert(ObjectClass::Vehicle, gate(0.5, Some(vehicle_max_frac)));
    class_gates.insert(ObjectClass::Vessel, gate(vessel_min_conf, Some(0.1)));
    class_gates.insert(ObjectClass::Building, gate(0.5, None));
    class_gates.insert(ObjectClass::Plane, gate(0.5, None));
    DetectorConfig {
        scales,
        tile_size: 1280,
        overlap_frac: 0.2,
        class_gates,
    }
}

/// Looks up the detector configuration for an actionable label.
pub fn select_config(label: ContextLabel, table: &ContextConfigTable) -> Result<&DetectorConfig> {
    if label == ContextLabel::Uneventful {
        return Err(Error::invalid(
            "context label",
            "uneventful frames have no detector configuration; gate before selecting",
        ));
    }
    table
        .0
        .get(&label)
        .ok_or_else(|| Error::Config(format!("detector config table has no entry for {label}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn softmax_uniform() {
        let p = softmax(&[0.0; 5]).unwrap();
        assert!(p.iter().all(|v| close(*v, 0.2, 1e-15)));
    }

    #[test]
    fn softmax_one_hot_logit() {
        // e/(e+4) and 1/(e+4)
        let e = std::f64::consts::E;
        let p = softmax(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(close(p[0], e / (e + 4.0), 1e-15));
        assert!(close(p[0], 0.40461, 1e-6));
        for v in &p[1..] {
            assert!(close(*v, 0.148848, 1e-6));
        }
    }

    #[test]
    fn softmax_shift_invariant_and_overflow_safe() {
        let z = [1.0, -2.0, 0.5, 3.0, 0.0];
        let shifted: Vec<f64> = z.iter().map(|v| v + 1000.0).collect();
        let a = softmax(&z).unwrap();
        let b = softmax(&shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(close(*x, *y, 1e-12));
        }
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(softmax(&[]).is_err());
        assert!(softmax(&[0.0, f64::NAN]).is_err());
        assert!(softmax(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn logits_labels() {
        let l = |z: [f64; 5]| classify_from_logits(&z).unwrap().label;
        assert_eq!(l([9.0, 0.0, 0.0, 0.0, 0.0]), ContextLabel::HighAltitude);
        assert_eq!(l([1.0; 5]), ContextLabel::HighAltitude);
        assert_eq!(l([0.0, 0.0, 0.0, 0.0, 9.0]), ContextLabel::Uneventful);
        assert!(classify_from_logits(&[0.0; 4]).is_err());
    }

    #[test]
    fn reference_rules() {
        let t = ReferenceThresholds::default();
        let f = |altitude_m, water_fraction, clutter_score| ContextFeatures {
            altitude_m,
            water_fraction,
            clutter_score,
        };
        assert_eq!(classify_reference(&f(5000.0, 0.0, 0.4), &t).label, ContextLabel::HighAltitude);
        assert_eq!(classify_reference(&f(500.0, 0.8, 0.5), &t).label, ContextLabel::Water);
        assert_eq!(classify_reference(&f(500.0, 0.8, 0.02), &t).label, ContextLabel::Uneventful);
        assert_eq!(classify_reference(&f(1000.0, 0.2, 0.5), &t).label, ContextLabel::MediumAltitude);
        assert_eq!(classify_reference(&f(2999.0, 0.2, 0.5), &t).label, ContextLabel::MediumAltitude);
        assert_eq!(classify_reference(&f(999.0, 0.2, 0.5), &t).label, ContextLabel::LowAltitude);
        assert_eq!(classify_reference(&f(3000.0, 0.2, 0.1), &t).label, ContextLabel::HighAltitude);
        let one_hot = classify_reference(&f(500.0, 0.8, 0.5), &t).probs;
        assert_eq!(one_hot, [0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn actionable() {
        assert!(!is_actionable(&SceneContext::one_hot(ContextLabel::Uneventful)));
        assert!(is_actionable(&SceneContext::one_hot(ContextLabel::Water)));
        assert!(is_actionable(&SceneContext::one_hot(ContextLabel::LowAltitude)));
    }

    #[test]
    fn config_selection() {
        let table = ContextConfigTable::default();
        table.validate().unwrap();
        let vessel_conf =
            |label| select_config(label, &table).unwrap().class_gates[&ObjectClass::Vessel].min_confidence;
        assert_eq!(vessel_conf(ContextLabel::Water), 0.5);
        for label in [
            ContextLabel::HighAltitude,
            ContextLabel::MediumAltitude,
            ContextLabel::LowAltitude,
        ] {
            assert!(vessel_conf(label) >= 0.9);
        }
        assert!(select_config(ContextLabel::Uneventful, &table).is_err());

        let mut partial = table.clone();
        partial.0.remove(&ContextLabel::Water);
        assert!(select_config(ContextLabel::Water, &partial).is_err());
        assert!(partial.validate().is_err());
    }

    #[test]
    fn high_altitude_vehicles_are_smaller() {
        let table = ContextConfigTable::default();
        let frac = |label| {
            select_config(label, &table).unwrap().class_gates[&ObjectClass::Vehicle]
                .max_area_frac
                .unwrap()
        };
        assert!(frac(ContextLabel::HighAltitude) < frac(ContextLabel::MediumAltitude));
        assert!(frac(ContextLabel::HighAltitude) < frac(ContextLabel::LowAltitude));
    }
}
