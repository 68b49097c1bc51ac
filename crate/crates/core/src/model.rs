//! Geometry and stream record types shared by every stage.
//!
//! Boxes use a top-left origin with `x` growing rightward and `y` growing
//! downward, stored as `(x, y, w, h)` in real-valued pixels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::ContextFeatures;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    /// Box centered on `(cx, cy)`.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.w.hypot(self.h)
    }

    /// Area of the overlap rectangle, 0 when the boxes are disjoint.
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    /// Intersection over union; 0 when the union is empty.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BBox) -> BBox {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        BBox::new(
            x,
            y,
            self.right().max(other.right()) - x,
            self.bottom().max(other.bottom()) - y,
        )
    }

    /// Whether `(px, py)` lies inside the closed box.
    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px <= self.right() && py >= self.y && py <= self.bottom()
    }

    /// Whether the box touches the `width x height` frame rectangle.
    pub fn touches_frame(&self, width: f64, height: f64) -> bool {
        self.x <= width && self.right() >= 0.0 && self.y <= height && self.bottom() >= 0.0
    }

    /// Clip to the frame rectangle; `None` when nothing with positive area remains.
    pub fn clip_to_frame(&self, width: f64, height: f64) -> Option<BBox> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.right().min(width);
        let y1 = self.bottom().min(height);
        if x1 > x0 && y1 > y0 {
            Some(BBox::new(x0, y0, x1 - x0, y1 - y0))
        } else {
            None
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w >= 0.0
            && self.h >= 0.0
    }
}

/// Object category. Event rules only ever look at the named variants;
/// anything else a detector reports is carried as [`ObjectClass::Other`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum ObjectClass {
    Person,
    Vehicle,
    Vessel,
    Building,
    Plane,
    Other(String),
}

impl ObjectClass {
    pub const NAMED: [ObjectClass; 5] = [
        ObjectClass::Person,
        ObjectClass::Vehicle,
        ObjectClass::Vessel,
        ObjectClass::Building,
        ObjectClass::Plane,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            ObjectClass::Person => "person",
            ObjectClass::Vehicle => "vehicle",
            ObjectClass::Vessel => "vessel",
            ObjectClass::Building => "building",
            ObjectClass::Plane => "plane",
            ObjectClass::Other(name) => name,
        }
    }

    /// Vehicles and vessels, the classes a person can get into or out of.
    pub fn is_container(&self) -> bool {
        matches!(self, ObjectClass::Vehicle | ObjectClass::Vessel)
    }
}

impl From<String> for ObjectClass {
    fn from(s: String) -> Self {
        match s.as_str() {
            "person" => ObjectClass::Person,
            "vehicle" => ObjectClass::Vehicle,
            "vessel" => ObjectClass::Vessel,
            "building" => ObjectClass::Building,
            "plane" => ObjectClass::Plane,
            _ => ObjectClass::Other(s),
        }
    }
}

impl From<ObjectClass> for String {
    fn from(c: ObjectClass) -> Self {
        match c {
            ObjectClass::Other(name) => name,
            named => named.as_str().to_owned(),
        }
    }
}

impl FromStr for ObjectClass {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(ObjectClass::from(s.to_owned()))
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: ObjectClass,
    pub bbox: BBox,
    pub confidence: f64,
    /// Index into the frame's tile plan when the box is in tile-local
    /// coordinates; absent for frame-global boxes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile: Option<usize>,
}

impl Detection {
    pub fn new(class: ObjectClass, bbox: BBox, confidence: f64) -> Self {
        Detection {
            class,
            bbox,
            confidence,
            tile: None,
        }
    }
}

/// Platform metadata for a frame: where the image center is on the ground,
/// its ground sample distance, and which way image-up points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoMeta {
    pub center_lat: f64,
    pub center_lon: f64,
    pub gsd_m_per_px: f64,
    /// Image-up direction, degrees clockwise from true north.
    pub heading_deg: f64,
}

impl GeoMeta {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_lat.is_finite() && (-90.0..=90.0).contains(&self.center_lat)) {
            return Err(Error::invalid("geo.center_lat", "must be within [-90, 90]"));
        }
        if !(self.center_lon.is_finite() && (-180.0..=180.0).contains(&self.center_lon)) {
            return Err(Error::invalid("geo.center_lon", "must be within [-180, 180]"));
        }
        if !(self.gsd_m_per_px.is_finite() && self.gsd_m_per_px > 0.0) {
            return Err(Error::invalid("geo.gsd_m_per_px", "must be > 0"));
        }
        if !(self.heading_deg.is_finite() && (0.0..360.0).contains(&self.heading_deg)) {
            return Err(Error::invalid("geo.heading_deg", "must be within [0, 360)"));
        }
        Ok(())
    }
}

/// One line of a detection stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub timestamp_ms: i64,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<ContextFeatures>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_logits: Option<Vec<f64>>,
    #[serde(default)]
    pub detections: Vec<Detection>,
}

impl FrameRecord {
    pub fn new(frame_id: u64, timestamp_ms: i64, width: u32, height: u32) -> Self {
        FrameRecord {
            frame_id,
            timestamp_ms,
            width,
            height,
            geo: None,
            features: None,
            context_logits: None,
            detections: Vec::new(),
        }
    }

    /// Checks every per-record invariant. Ordering across records is the
    /// stream reader's job.
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::invalid("width", "must be > 0"));
        }
        if self.height == 0 {
            return Err(Error::invalid("height", "must be > 0"));
        }
        if let Some(geo) = &self.geo {
            geo.validate()?;
        }
        if let Some(features) = &self.features {
            features.validate()?;
        }
        if let Some(logits) = &self.context_logits {
            if logits.len() != crate::context::ContextLabel::ALL.len() {
                return Err(Error::invalid(
                    "context_logits",
                    format!("expected 5 values, got {}", logits.len()),
                ));
            }
            if logits.iter().any(|z| !z.is_finite()) {
                return Err(Error::invalid("context_logits", "values must be finite"));
            }
        }
        let (fw, fh) = (f64::from(self.width), f64::from(self.height));
        for (i, d) in self.detections.iter().enumerate() {
            if !(d.confidence.is_finite() && (0.0..=1.0).contains(&d.confidence)) {
                return Err(Error::invalid(
                    format!("detections[{i}].confidence"),
                    format!("{} outside [0, 1]", d.confidence),
                ));
            }
            if !d.bbox.is_valid() {
                return Err(Error::invalid(
                    format!("detections[{i}].bbox"),
                    "coordinates must be finite with w >= 0 and h >= 0",
                ));
            }
            if d.tile.is_none() && !d.bbox.touches_frame(fw, fh) {
                return Err(Error::invalid(
                    format!("detections[{i}].bbox"),
                    "does not intersect the frame",
                ));
            }
        }
        Ok(())
    }
}
