//! Scripted scenario simulation with exact ground truth.
//!
//! A scenario lists entities moving along keyframed center paths (linear
//! interpolation, held constant outside the keyframes) and activities that
//! edit those paths and visibility windows so the scripted event happens
//! at its trigger frame:
//!
//! * `enter_vehicle` / `board_vessel`: the person walks onto the container
//!   over `approach` frames, stays on it for `dwell` frames, and is not
//!   seen from the trigger frame on.
//! * `exit_vehicle` / `disembark_vessel`: the person first appears on the
//!   container at the trigger frame, stays `dwell` frames, then walks back
//!   onto its scripted path over `approach` frames.
//! * `meeting` / `crowd`: participants converge onto evenly spaced slots on
//!   a circle of `radius` around the meeting point, arriving at the trigger
//!   frame, hold for `dwell` frames, then return to their paths.
//!
//! Noise is applied separately by [`add_noise`] with a ChaCha8 generator
//! seeded from [`NoiseParams::seed`].

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::context::ContextFeatures;
use crate::error::{Error, Result};
use crate::events::EventType;
use crate::model::{BBox, Detection, FrameRecord, GeoMeta, ObjectClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSegment {
    /// First frame the features apply to; they hold until the next segment.
    #[serde(default)]
    pub from_frame: u64,
    #[serde(flatten)]
    pub features: ContextFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub class: ObjectClass,
    /// Box width and height in pixels.
    pub size: [f64; 2],
    /// `[frame, center_x, center_y]` keyframes, strictly increasing in frame.
    pub waypoints: Vec<[f64; 3]>,
    /// Half-open `[start, end)` frame intervals; the whole scenario when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible: Option<Vec<[u64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    #[serde(rename = "type")]
    pub event_type: EventType,
    pub participants: Vec<String>,
    pub trigger_frame: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach: Option<u64>,
    /// Gathering circle radius in pixels (meeting and crowd).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Gathering point; the participants' mean scripted position at the
    /// trigger frame when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[f64; 2]>,
}

impl Activity {
    fn dwell(&self) -> u64 {
        self.dwell.unwrap_or(if self.event_type.is_transition() { 5 } else { 60 })
    }

    fn approach(&self) -> u64 {
        self.approach.unwrap_or(20)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub frame_count: u64,
    pub frame_w: u32,
    pub frame_h: u32,
    pub fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoMeta>,
    #[serde(default)]
    pub context: Vec<ContextSegment>,
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub activities: Vec<Activity>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(vec![e.to_string()]))
    }

    /// Every violation found, or `Ok` when the scenario is consistent.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.frame_w == 0 || self.frame_h == 0 {
            v.push("frame_w and frame_h must be > 0".to_owned());
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            v.push("fps must be > 0".to_owned());
        }
        if let Some(g) = &self.geo {
            if let Err(e) = g.validate() {
                v.push(e.to_string());
            }
        }
        for (i, seg) in self.context.iter().enumerate() {
            if let Err(e) = seg.features.validate() {
                v.push(format!("context[{i}]: {e}"));
            }
            if i > 0 && seg.from_frame <= self.context[i - 1].from_frame {
                v.push(format!("context[{i}]: from_frame must increase"));
            }
        }
        let mut classes: BTreeMap<&str, &ObjectClass> = BTreeMap::new();
        for e in &self.entities {
            if classes.insert(&e.id, &e.class).is_some() {
                v.push(format!("entity {}: duplicate id", e.id));
            }
            if !(e.size[0] > 0.0 && e.size[1] > 0.0) {
                v.push(format!("entity {}: size must be positive", e.id));
            }
            if e.waypoints.is_empty() {
                v.push(format!("entity {}: needs at least one waypoint", e.id));
            }
            if e.waypoints.iter().flatten().any(|c| !c.is_finite()) {
                v.push(format!("entity {}: waypoints must be finite", e.id));
            }
            if e.waypoints.windows(2).any(|w| w[1][0] <= w[0][0]) {
                v.push(format!("entity {}: waypoint frames must strictly increase", e.id));
            }
            for r in e.visible.iter().flatten() {
                if r[0] > r[1] {
                    v.push(format!("entity {}: visible range {:?} is reversed", e.id, r));
                }
            }
        }
        for (i, a) in self.activities.iter().enumerate() {
            let tag = format!("activity[{i}] ({})", a.event_type);
            if a.trigger_frame >= self.frame_count {
                v.push(format!("{tag}: trigger_frame {} outside [0, {})", a.trigger_frame, self.frame_count));
            }
            let mut resolved = Vec::new();
            for p in &a.participants {
                match classes.get(p.as_str()) {
                    Some(c) => resolved.push(*c),
                    None => v.push(format!("{tag}: unknown participant {p}")),
                }
            }
            if resolved.len() != a.participants.len() {
                continue;
            }
            match a.event_type.container_class() {
                Some(container) => {
                    let persons = resolved.iter().filter(|c| ***c == ObjectClass::Person).count();
                    let containers = resolved.iter().filter(|c| ***c == container).count();
                    if resolved.len() != 2 || persons != 1 || containers != 1 {
                        v.push(format!("{tag}: needs exactly one person and one {container}"));
                    }
                }
                None => {
                    if resolved.len() < 2 || resolved.iter().any(|c| **c != ObjectClass::Person) {
                        v.push(format!("{tag}: needs two or more persons"));
                    }
                }
            }
            if a.dwell() == 0 {
                v.push(format!("{tag}: dwell must be >= 1"));
            }
            if a.radius.is_some_and(|r| !(r >= 0.0)) {
                v.push(format!("{tag}: radius must be >= 0"));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Scenario(v))
        }
    }

    pub fn features_at(&self, frame: u64) -> Option<ContextFeatures> {
        self.context
            .iter()
            .take_while(|s| s.from_frame <= frame)
            .last()
            .or(self.context.first())
            .map(|s| s.features)
    }
}

/// One scripted activity as it must be detected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub truth_id: u64,
    #[serde(rename = "type")]
    pub event_type: EventType,
    pub trigger_frame: u64,
    pub end_frame: u64,
    pub participants: Vec<String>,
}

type Path = Vec<(f64, f64, f64)>;

fn position(path: &Path, frame: f64) -> (f64, f64) {
    let first = path[0];
    if frame <= first.0 {
        return (first.1, first.2);
    }
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if frame <= b.0 {
            let t = (frame - a.0) / (b.0 - a.0);
            return (a.1 + t * (b.1 - a.1), a.2 + t * (b.2 - a.2));
        }
    }
    let last = path[path.len() - 1];
    (last.1, last.2)
}

/// Replaces the path strictly inside `(from, to)` with `points`, pinning
/// the old positions at `from` (unless `keep_before` is false) and `to`
/// (unless `keep_after` is false).
fn splice(path: &Path, from: f64, to: f64, points: &[(f64, f64, f64)], keep_before: bool, keep_after: bool) -> Path {
    let mut out: Path = Vec::new();
    if keep_before {
        out.extend(path.iter().copied().filter(|p| p.0 < from));
        let (x, y) = position(path, from);
        out.push((from, x, y));
    }
    out.extend(points.iter().copied());
    if keep_after {
        let (x, y) = position(path, to);
        out.push((to, x, y));
        out.extend(path.iter().copied().filter(|p| p.0 > to));
    }
    // collapse keyframes that landed on the same frame; later edits win
    let mut dedup: Path = Vec::with_capacity(out.len());
    for p in out {
        match dedup.last_mut() {
            Some(last) if last.0 >= p.0 => {
                if last.0 == p.0 {
                    *last = p;
                }
            }
            _ => dedup.push(p),
        }
    }
    dedup
}

struct Realized {
    path: Path,
    size: (f64, f64),
    class: ObjectClass,
    ranges: Vec<(u64, u64)>,
    lower: u64,
    upper: u64,
}

impl Realized {
    fn visible(&self, f: u64) -> bool {
        f >= self.lower && f < self.upper && self.ranges.iter().any(|&(a, b)| f >= a && f < b)
    }
}

/// Renders a scenario into a noise-free detection stream and its ground truth.
pub fn simulate(s: &Scenario) -> Result<(Vec<FrameRecord>, Vec<GroundTruth>)> {
    s.validate()?;

    let mut realized: Vec<Realized> = s
        .entities
        .iter()
        .map(|e| Realized {
            path: e.waypoints.iter().map(|w| (w[0], w[1], w[2])).collect(),
            size: (e.size[0], e.size[1]),
            class: e.class.clone(),
            ranges: match &e.visible {
                Some(r) => r.iter().map(|r| (r[0], r[1])).collect(),
                None => vec![(0, s.frame_count)],
            },
            lower: 0,
            upper: u64::MAX,
        })
        .collect();
    let index: BTreeMap<&str, usize> =
        s.entities.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();

    let mut order: Vec<usize> = (0..s.activities.len()).collect();
    order.sort_by_key(|&i| (s.activities[i].trigger_frame, i));

    let mut truth = Vec::with_capacity(s.activities.len());
    for ai in order {
        let a = &s.activities[ai];
        let trigger = a.trigger_frame;
        let dwell = a.dwell();
        let approach = a.approach();
        let tf = trigger as f64;
        let ids: Vec<usize> = a.participants.iter().map(|p| index[p.as_str()]).collect();

        let end_frame = match a.event_type.container_class() {
            Some(_) => {
                let (pi, ci) = if realized[ids[0]].class == ObjectClass::Person {
                    (ids[0], ids[1])
                } else {
                    (ids[1], ids[0])
                };
                let container = realized[ci].path.clone();
                let person = &mut realized[pi];
                let at = |f: f64| {
                    let (x, y) = position(&container, f);
                    (f, x, y)
                };
                match a.event_type {
                    EventType::EnterVehicle | EventType::BoardVessel => {
                        let arrive = tf - dwell as f64;
                        let leave = arrive - approach as f64;
                        let last_seen = (tf - 1.0).max(arrive);
                        person.path = splice(&person.path, leave, tf, &[at(arrive), at(last_seen)], true, false);
                        person.upper = person.upper.min(trigger);
                    }
                    _ => {
                        let depart = tf + dwell as f64;
                        let rejoin = depart + approach as f64;
                        person.path = splice(&person.path, tf, rejoin, &[at(tf), at(depart)], false, true);
                        person.lower = person.lower.max(trigger);
                    }
                }
                trigger
            }
            None => {
                let k = ids.len() as f64;
                let center = a.at.map(|[x, y]| (x, y)).unwrap_or_else(|| {
                    let (sx, sy) = ids.iter().fold((0.0, 0.0), |(sx, sy), &i| {
                        let (x, y) = position(&realized[i].path, tf);
                        (sx + x, sy + y)
                    });
                    (sx / k, sy / k)
                });
                let mean_diag = ids
                    .iter()
                    .map(|&i| realized[i].size.0.hypot(realized[i].size.1))
                    .sum::<f64>()
                    / k;
                let radius = a.radius.unwrap_or(match a.event_type {
                    EventType::Meeting => 0.3 * mean_diag,
                    _ => 1.7 * mean_diag,
                });
                let start = tf - approach as f64;
                let hold = tf + dwell as f64;
                let rejoin = hold + approach as f64;
                // slots follow each participant's bearing from the center
                let mut bearing: Vec<(f64, usize)> = ids
                    .iter()
                    .map(|&i| {
                        let (x, y) = position(&realized[i].path, start);
                        ((y - center.1).atan2(x - center.0), i)
                    })
                    .collect();
                bearing.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let phase = bearing[0].0;
                for (slot, &(_, i)) in bearing.iter().enumerate() {
                    let theta = phase + TAU * slot as f64 / k;
                    let (x, y) = (center.0 + radius * theta.cos(), center.1 + radius * theta.sin());
                    let r = &mut realized[i];
                    r.path = splice(&r.path, start, rejoin, &[(tf, x, y), (hold, x, y)], true, true);
                }
                trigger + dwell
            }
        };
        truth.push(GroundTruth {
            truth_id: ai as u64,
            event_type: a.event_type,
            trigger_frame: trigger,
            end_frame: end_frame.min(s.frame_count.saturating_sub(1)),
            participants: a.participants.clone(),
        });
    }
    truth.sort_by_key(|t| t.truth_id);

    let (fw, fh) = (f64::from(s.frame_w), f64::from(s.frame_h));
    let mut stream = Vec::with_capacity(s.frame_count as usize);
    for f in 0..s.frame_count {
        let mut rec = FrameRecord::new(f, (f as f64 * 1000.0 / s.fps).round() as i64, s.frame_w, s.frame_h);
        rec.geo = s.geo;
        rec.features = s.features_at(f);
        for r in &realized {
            if !r.visible(f) {
                continue;
            }
            let (cx, cy) = position(&r.path, f as f64);
            if let Some(b) = BBox::from_center(cx, cy, r.size.0, r.size.1).clip_to_frame(fw, fh) {
                rec.detections.push(Detection::new(r.class.clone(), b, 1.0));
            }
        }
        stream.push(rec);
    }
    Ok((stream, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    pub jitter_sigma_px: f64,
    pub drop_prob: f64,
    /// Expected spurious detections per frame.
    pub false_positive_rate: f64,
    pub confidence_sigma: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma_px >= 0.0 && self.jitter_sigma_px.is_finite()) {
            return Err(Error::invalid("jitter_sigma_px", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::invalid("drop_prob", "must be within [0, 1]"));
        }
        if !(self.false_positive_rate >= 0.0 && self.false_positive_rate.is_finite()) {
            return Err(Error::invalid("false_positive_rate", "must be >= 0"));
        }
        if !(self.confidence_sigma >= 0.0 && self.confidence_sigma.is_finite()) {
            return Err(Error::invalid("confidence_sigma", "must be >= 0"));
        }
        Ok(())
    }
}

/// Spurious detections draw their class from this list.
const SPURIOUS_CLASSES: [ObjectClass; 5] = ObjectClass::NAMED;

/// Seeded detector noise: drops, per-coordinate Gaussian jitter, confidence
/// perturbation, and Poisson-distributed spurious detections.
///
/// Draw order per frame: for each detection one uniform drop draw, then
/// four jitter normals (x, y, w, h) when jitter is on, then one confidence
/// normal when that is on; after the detections, one Poisson count and per
/// spurious box a class index, w, h, center x, center y and confidence.
pub fn add_noise(stream: &[FrameRecord], n: &NoiseParams) -> Result<Vec<FrameRecord>> {
    n.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
    let jitter = (n.jitter_sigma_px > 0.0)
        .then(|| Normal::new(0.0, n.jitter_sigma_px).expect("validated sigma"));
    let conf = (n.confidence_sigma > 0.0)
        .then(|| Normal::new(0.0, n.confidence_sigma).expect("validated sigma"));
    let spurious = (n.false_positive_rate > 0.0)
        .then(|| Poisson::new(n.false_positive_rate).expect("validated rate"));

    let mut out = Vec::with_capacity(stream.len());
    for frame in stream {
        let (fw, fh) = (f64::from(frame.width), f64::from(frame.height));
        let mut rec = frame.clone();
        rec.detections.clear();
        for d in &frame.detections {
            let u: f64 = rng.random();
            if u < n.drop_prob {
                continue;
            }
            let mut d = d.clone();
            if let Some(j) = &jitter {
                let b = d.bbox;
                let jittered = BBox::new(
                    b.x + j.sample(&mut rng),
                    b.y + j.sample(&mut rng),
                    (b.w + j.sample(&mut rng)).max(1.0),
                    (b.h + j.sample(&mut rng)).max(1.0),
                );
                match jittered.clip_to_frame(fw, fh) {
                    Some(clipped) => d.bbox = clipped,
                    None => continue,
                }
            }
            if let Some(c) = &conf {
                d.confidence = (d.confidence + c.sample(&mut rng)).clamp(0.0, 1.0);
            }
            rec.detections.push(d);
        }
        if let Some(poisson) = &spurious {
            let count = poisson.sample(&mut rng) as u64;
            for _ in 0..count {
                let class = SPURIOUS_CLASSES[rng.random_range(0..SPURIOUS_CLASSES.len())].clone();
                let w = rng.random_range(8.0..64.0);
                let h = rng.random_range(8.0..64.0);
                let cx = rng.random_range(0.0..fw);
                let cy = rng.random_range(0.0..fh);
                let confidence = rng.random_range(0.3..1.0);
                if let Some(b) = BBox::from_center(cx, cy, w, h).clip_to_frame(fw, fh) {
                    rec.detections.push(Detection::new(class, b, confidence));
                }
            }
        }
        out.push(rec);
    }
    Ok(out)
}
