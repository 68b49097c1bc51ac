//! Consecutive-frame IoU tracking-by-detection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, Detection, ObjectClass};

/// Intersection over union of two boxes, 0 when both are empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerParams {
    pub iou_threshold: f64,
    /// Consecutive unmatched frames a track survives.
    pub max_misses: u32,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            iou_threshold: 0.3,
            max_misses: 3,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(Error::invalid("tracker.iou_threshold", "must be within [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub frame_id: u64,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u64,
    pub class: ObjectClass,
    pub observations: Vec<Observation>,
    pub birth_frame: u64,
    pub death_frame: Option<u64>,
    pub misses: u32,
}

impl Track {
    pub fn last(&self) -> &Observation {
        self.observations
            .last()
            .expect("a track is born with one observation")
    }

    pub fn last_bbox(&self) -> BBox {
        self.last().bbox
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub matches: Vec<(u64, usize)>,
    pub unmatched_tracks: Vec<u64>,
    pub unmatched_dets: Vec<usize>,
}

/// Greedy same-class matching of detections to the tracks' latest boxes.
///
/// Candidate pairs need equal class and IoU at or above the threshold; they
/// are accepted in descending IoU order (ties: lower track id, then lower
/// detection index), each side at most once.
pub fn associate(active: &[Track], dets: &[Detection], iou_threshold: f64) -> Assignment {
    let mut candidates: Vec<(f64, u64, usize, usize)> = Vec::new();
    for (ti, track) in active.iter().enumerate() {
        let last = track.last_bbox();
        for (di, d) in dets.iter().enumerate() {
            if d.class != track.class {
                continue;
            }
            let overlap = last.iou(&d.bbox);
            if overlap >= iou_threshold {
                candidates.push((overlap, track.track_id, ti, di));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.3.cmp(&b.3))
    });

    let mut track_used = vec![false; active.len()];
    let mut det_used = vec![false; dets.len()];
    let mut out = Assignment::default();
    for (_, track_id, ti, di) in candidates {
        if track_used[ti] || det_used[di] {
            continue;
        }
        track_used[ti] = true;
        det_used[di] = true;
        out.matches.push((track_id, di));
    }
    out.unmatched_tracks = active
        .iter()
        .zip(&track_used)
        .filter(|(_, used)| !**used)
        .map(|(t, _)| t.track_id)
        .collect();
    out.unmatched_dets = (0..dets.len()).filter(|&i| !det_used[i]).collect();
    out
}

/// What one [`Tracker::step`] did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    pub births: Vec<u64>,
    pub deaths: Vec<u64>,
    /// Track id each input detection ended up in, by detection index.
    pub det_tracks: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackerParams,
    active: Vec<Track>,
    terminated: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Tracker {
            params,
            active: Vec::new(),
            terminated: Vec::new(),
            next_id: 0,
            last_frame: None,
        }
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    pub fn active(&self) -> &[Track] {
        &self.active
    }

    pub fn terminated(&self) -> &[Track] {
        &self.terminated
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.last_frame
    }

    /// Looks a track up among active and terminated tracks.
    pub fn track(&self, track_id: u64) -> Option<&Track> {
        self.active
            .iter()
            .chain(self.terminated.iter())
            .find(|t| t.track_id == track_id)
    }

    /// Advances one frame: extends matched tracks, ages unmatched ones
    /// (terminating those past `max_misses`) and opens a track for every
    /// unmatched detection.
    pub fn step(&mut self, frame_id: u64, dets: &[Detection]) -> Result<StepOutcome> {
        if let Some(last) = self.last_frame {
            if frame_id <= last {
                return Err(Error::invalid(
                    "frame_id",
                    format!("{frame_id} does not follow previously processed frame {last}"),
                ));
            }
        }
        self.last_frame = Some(frame_id);

        let assignment = associate(&self.active, dets, self.params.iou_threshold);
        let mut det_tracks = vec![u64::MAX; dets.len()];

        for &(track_id, di) in &assignment.matches {
            let d = &dets[di];
            let track = self
                .active
                .iter_mut()
                .find(|t| t.track_id == track_id)
                .expect("matched track is active");
            track.observations.push(Observation {
                frame_id,
                bbox: d.bbox,
                confidence: d.confidence,
            });
            track.misses = 0;
            det_tracks[di] = track_id;
        }

        let mut deaths = Vec::new();
        for track in self.active.iter_mut() {
            if assignment.unmatched_tracks.contains(&track.track_id) {
                track.misses += 1;
                if track.misses > self.params.max_misses {
                    track.death_frame = Some(frame_id);
                    deaths.push(track.track_id);
                }
            }
        }
        if !deaths.is_empty() {
            let (dead, alive): (Vec<Track>, Vec<Track>) = std::mem::take(&mut self.active)
                .into_iter()
                .partition(|t| t.death_frame.is_some());
            self.active = alive;
            self.terminated.extend(dead);
        }

        let mut births = Vec::new();
        for &di in &assignment.unmatched_dets {
            let d = &dets[di];
            let track_id = self.next_id;
            self.next_id += 1;
            self.active.push(Track {
                track_id,
                class: d.class.clone(),
                observations: vec![Observation {
                    frame_id,
                    bbox: d.bbox,
                    confidence: d.confidence,
                }],
                birth_frame: frame_id,
                death_frame: None,
                misses: 0,
            });
            det_tracks[di] = track_id;
            births.push(track_id);
        }

        Ok(StepOutcome {
            births,
            deaths,
            det_tracks,
        })
    }
}
