//! Multi-scale tiling, tile-to-frame mapping, context-tuned gates and
//! cross-tile duplicate merging.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, Detection, ObjectClass};

/// Confidence and size gate for one class. Size is box area in px².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassGate {
    pub min_confidence: f64,
    #[serde(default)]
    pub min_area_px2: f64,
    /// Absolute upper area bound; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_area_px2: Option<f64>,
    /// Upper area bound as a fraction of the frame area. Folded into
    /// `max_area_px2` by [`DetectorConfig::resolved_for_frame`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_area_frac: Option<f64>,
}

impl ClassGate {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::invalid("min_confidence", "must be within [0, 1]"));
        }
        if !(self.min_area_px2.is_finite() && self.min_area_px2 >= 0.0) {
            return Err(Error::invalid("min_area_px2", "must be >= 0"));
        }
        if let Some(max) = self.max_area_px2 {
            if !(max > self.min_area_px2) {
                return Err(Error::invalid("max_area_px2", "must exceed min_area_px2"));
            }
        }
        if let Some(frac) = self.max_area_frac {
            if !(frac > 0.0 && frac.is_finite()) {
                return Err(Error::invalid("max_area_frac", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn admits(&self, d: &Detection) -> bool {
        let area = d.bbox.area();
        d.confidence >= self.min_confidence
            && area >= self.min_area_px2
            && self.max_area_px2.map_or(true, |max| area <= max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Tile pixels per frame pixel, one pyramid level each.
    pub scales: Vec<f64>,
    pub tile_size: u32,
    pub overlap_frac: f64,
    pub class_gates: BTreeMap<ObjectClass, ClassGate>,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::invalid("scales", "must be non-empty"));
        }
        if self.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("scales", "every scale must be > 0"));
        }
        if self.tile_size == 0 {
            return Err(Error::invalid("tile_size", "must be > 0"));
        }
        if !(0.0..=0.9).contains(&self.overlap_frac) {
            return Err(Error::invalid("overlap_frac", "must be within [0, 0.9]"));
        }
        for (class, gate) in &self.class_gates {
            gate.validate().map_err(|e| match e {
                Error::Invalid { field, message } => {
                    Error::invalid(format!("class_gates.{class}.{field}"), message)
                }
                other => other,
            })?;
        }
        Ok(())
    }

    /// Copy with every fractional area bound turned into pixels for a
    /// `width x height` frame. The tighter of the two bounds wins.
    pub fn resolved_for_frame(&self, width: u32, height: u32) -> DetectorConfig {
        let frame_area = f64::from(width) * f64::from(height);
        let mut cfg = self.clone();
        for gate in cfg.class_gates.values_mut() {
            if let Some(frac) = gate.max_area_frac.take() {
                let from_frac = frac * frame_area;
                gate.max_area_px2 = Some(gate.max_area_px2.map_or(from_frac, |m| m.min(from_frac)));
            }
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    /// Top-left corner in frame pixels.
    pub origin_x: f64,
    pub origin_y: f64,
    /// Extent in tile pixels; smaller than the tile size only when the
    /// scaled frame is smaller than one tile.
    pub width: u32,
    pub height: u32,
    pub scale: f64,
}

impl Tile {
    /// The tile's footprint in frame pixels.
    pub fn frame_rect(&self) -> BBox {
        BBox::new(
            self.origin_x,
            self.origin_y,
            f64::from(self.width) / self.scale,
            f64::from(self.height) / self.scale,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilePlan {
    pub tiles: Vec<Tile>,
}

/// Offsets of tiles of side `tile` along an axis of length `extent`. The
/// last offset is clamped so the final tile ends exactly at the edge.
fn axis_offsets(extent: u32, tile: u32, stride: u32) -> Vec<u32> {
    if tile >= extent {
        return vec![0];
    }
    let mut offsets = Vec::new();
    let mut o = 0u32;
    loop {
        if o + tile >= extent {
            offsets.push(extent - tile);
            break;
        }
        offsets.push(o);
        o += stride;
    }
    offsets
}

/// Lays a grid of overlapping tiles over every scaled copy of the frame.
pub fn plan_pyramid(frame_w: u32, frame_h: u32, cfg: &DetectorConfig) -> TilePlan {
    let tile = cfg.tile_size.max(1);
    let stride = ((f64::from(tile) * (1.0 - cfg.overlap_frac)).floor() as u32).max(1);
    let mut tiles = Vec::new();
    for &scale in &cfg.scales {
        let scaled_w = ((f64::from(frame_w) * scale).ceil() as u32).max(1);
        let scaled_h = ((f64::from(frame_h) * scale).ceil() as u32).max(1);
        let tw = tile.min(scaled_w);
        let th = tile.min(scaled_h);
        let xs = axis_offsets(scaled_w, tile, stride);
        let ys = axis_offsets(scaled_h, tile, stride);
        for &oy in &ys {
            for &ox in &xs {
                tiles.push(Tile {
                    origin_x: f64::from(ox) / scale,
                    origin_y: f64::from(oy) / scale,
                    width: tw,
                    height: th,
                    scale,
                });
            }
        }
    }
    TilePlan { tiles }
}

/// Maps a tile-local detection into frame coordinates.
pub fn map_tile_to_frame(d: &Detection, tile: &Tile) -> Result<Detection> {
    let s = tile.scale;
    if !(s > 0.0) {
        return Err(Error::invalid("tile.scale", "must be > 0"));
    }
    let b = d.bbox;
    Ok(Detection {
        class: d.class.clone(),
        bbox: BBox::new(tile.origin_x + b.x / s, tile.origin_y + b.y / s, b.w / s, b.h / s),
        confidence: d.confidence,
        tile: None,
    })
}

/// Inverse of [`map_tile_to_frame`].
pub fn map_frame_to_tile(d: &Detection, tile: &Tile, index: usize) -> Result<Detection> {
    let s = tile.scale;
    if !(s > 0.0) {
        return Err(Error::invalid("tile.scale", "must be > 0"));
    }
    let b = d.bbox;
    Ok(Detection {
        class: d.class.clone(),
        bbox: BBox::new((b.x - tile.origin_x) * s, (b.y - tile.origin_y) * s, b.w * s, b.h * s),
        confidence: d.confidence,
        tile: Some(index),
    })
}

/// Keeps detections that pass their class gate; ungated classes are dropped.
pub fn apply_gates(dets: &[Detection], cfg: &DetectorConfig) -> Vec<Detection> {
    dets.iter()
        .filter(|d| cfg.class_gates.get(&d.class).is_some_and(|g| g.admits(d)))
        .cloned()
        .collect()
}

/// Class-aware greedy non-maximum suppression.
///
/// Candidates are visited by confidence descending, then smaller area, then
/// input order. A candidate survives when its IoU with every kept box of the
/// same class is below `iou_threshold`. Survivors are returned in visiting
/// order.
pub fn nms_merge(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        db.confidence
            .partial_cmp(&da.confidence)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                da.bbox
                    .area()
                    .partial_cmp(&db.bbox.area())
                    .unwrap_or(Ordering::Equal)
            })
            .then(a.cmp(&b))
    });

    let mut kept: Vec<&Detection> = Vec::new();
    for i in order {
        let d = &dets[i];
        let suppressed = kept
            .iter()
            .any(|k| k.class == d.class && k.bbox.iou(&d.bbox) >= iou_threshold);
        if !suppressed {
            kept.push(d);
        }
    }
    kept.into_iter().cloned().collect()
}

/// Cross entropy of a prediction with true-class probability `p`, scaled by
/// the modulating factor `(1 - p)^gamma`.
pub fn focal_loss(p: f64, gamma: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("p", "must be within (0, 1]"));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", "must be >= 0"));
    }
    // +0.0 turns the -0.0 from ln(1) into 0
    Ok((1.0 - p).powf(gamma) * -p.ln() + 0.0)
}
