//! Rule-based salient event detection over tracks.
//!
//! Group events (meetings, crowds) are detected per frame from the person
//! boxes observed in that frame and confirmed by [`GroupDebouncer`].
//! Transition events (getting into or out of a vehicle or vessel) are
//! instantaneous and come from track births and deaths, see
//! [`TransitionDetector`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::context::ContextLabel;
use crate::error::{Error, Result};
use crate::geo::{self, GeoPoint};
use crate::model::{BBox, GeoMeta, ObjectClass};
use crate::tracking::{StepOutcome, Track, Tracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Meeting,
    Crowd,
    EnterVehicle,
    ExitVehicle,
    BoardVessel,
    DisembarkVessel,
}

impl EventType {
    pub const ALL: [EventType; 6] = [
        EventType::Meeting,
        EventType::Crowd,
        EventType::EnterVehicle,
        EventType::ExitVehicle,
        EventType::BoardVessel,
        EventType::DisembarkVessel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Meeting => "meeting",
            EventType::Crowd => "crowd",
            EventType::EnterVehicle => "enter_vehicle",
            EventType::ExitVehicle => "exit_vehicle",
            EventType::BoardVessel => "board_vessel",
            EventType::DisembarkVessel => "disembark_vessel",
        }
    }

    pub fn is_transition(self) -> bool {
        !matches!(self, EventType::Meeting | EventType::Crowd)
    }

    /// Container class a transition involves.
    pub fn container_class(self) -> Option<ObjectClass> {
        match self {
            EventType::EnterVehicle | EventType::ExitVehicle => Some(ObjectClass::Vehicle),
            EventType::BoardVessel | EventType::DisembarkVessel => Some(ObjectClass::Vessel),
            _ => None,
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: u64,
    #[serde(rename = "type")]
    pub event_type: EventType,
    pub start_frame: u64,
    pub end_frame: u64,
    pub start_timestamp_ms: i64,
    pub end_timestamp_ms: i64,
    /// Track ids, ascending.
    pub participants: Vec<u64>,
    /// Union of the participants' boxes when the event started.
    pub anchor_bbox: BBox,
    pub geo: Option<GeoPoint>,
    pub context_label: ContextLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventParams {
    /// Two people are close when their center distance is at most this
    /// multiple of their mean box diagonal.
    pub meeting_k: f64,
    pub crowd_min_count: usize,
    /// Crowd radius as a multiple of the mean person diagonal.
    pub crowd_radius_k: f64,
    pub interaction_iou: f64,
    /// A person track this many frames old or younger counts as new.
    pub new_track_age: u64,
    pub debounce_frames: u32,
    pub cooldown_frames: u64,
}

impl Default for EventParams {
    fn default() -> Self {
        EventParams {
            meeting_k: 1.0,
            crowd_min_count: 5,
            crowd_radius_k: 2.0,
            interaction_iou: 0.1,
            new_track_age: 2,
            debounce_frames: 3,
            cooldown_frames: 30,
        }
    }
}

impl EventParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.meeting_k > 0.0 && self.meeting_k.is_finite()) {
            return Err(Error::invalid("events.meeting_k", "must be > 0"));
        }
        if self.crowd_min_count < 2 {
            return Err(Error::invalid("events.crowd_min_count", "must be >= 2"));
        }
        if !(self.crowd_radius_k > 0.0 && self.crowd_radius_k.is_finite()) {
            return Err(Error::invalid("events.crowd_radius_k", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.interaction_iou) {
            return Err(Error::invalid("events.interaction_iou", "must be within [0, 1]"));
        }
        if self.debounce_frames < 1 {
            return Err(Error::invalid("events.debounce_frames", "must be >= 1"));
        }
        Ok(())
    }
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn union_box(boxes: impl IntoIterator<Item = BBox>) -> BBox {
    boxes
        .into_iter()
        .reduce(|a, b| a.union(&b))
        .unwrap_or_default()
}

/// Connected components of the proximity graph: two people are joined when
/// their boxes overlap or their centers are within `meeting_k` times their
/// mean diagonal. Components of two or more are returned, each sorted, in
/// order of their smallest member.
pub fn detect_meetings(people: &[(u64, BBox)], p: &EventParams) -> Vec<Vec<u64>> {
    let n = people.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&people[i].1, &people[j].1);
            let reach = p.meeting_k * (a.diagonal() + b.diagonal()) / 2.0;
            if a.iou(b) > 0.0 || distance(a.center(), b.center()) <= reach {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(people[i].0);
    }
    let mut groups: Vec<Vec<u64>> = components
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    groups.sort();
    groups
}

/// Centroid clustering: people whose centers lie within `crowd_radius_k`
/// mean person diagonals of the centroid of everyone considered form a
/// crowd when there are at least `crowd_min_count` of them. The people left
/// out get one more pass to catch a second cluster.
pub fn detect_crowds(people: &[(u64, BBox)], p: &EventParams) -> Vec<Vec<u64>> {
    fn pass(people: &[(u64, BBox)], p: &EventParams) -> (Option<Vec<u64>>, Vec<(u64, BBox)>) {
        if people.len() < p.crowd_min_count {
            return (None, people.to_vec());
        }
        let n = people.len() as f64;
        let (sx, sy) = people.iter().fold((0.0, 0.0), |(sx, sy), (_, b)| {
            let (cx, cy) = b.center();
            (sx + cx, sy + cy)
        });
        let centroid = (sx / n, sy / n);
        let mean_diag = people.iter().map(|(_, b)| b.diagonal()).sum::<f64>() / n;
        let radius = p.crowd_radius_k * mean_diag;
        let (inside, outside): (Vec<(u64, BBox)>, Vec<(u64, BBox)>) = people
            .iter()
            .copied()
            .partition(|(_, b)| distance(b.center(), centroid) <= radius);
        if inside.len() >= p.crowd_min_count {
            let mut ids: Vec<u64> = inside.iter().map(|(id, _)| *id).collect();
            ids.sort_unstable();
            (Some(ids), outside)
        } else {
            (None, outside)
        }
    }

    let mut crowds = Vec::new();
    let (first, rest) = pass(people, p);
    crowds.extend(first);
    if !rest.is_empty() && rest.len() < people.len() {
        crowds.extend(pass(&rest, p).0);
    }
    crowds
}

/// An instantaneous transition firing before it becomes an [`Event`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawTransition {
    pub event_type: EventType,
    pub person: u64,
    pub container: u64,
    pub start_frame: u64,
    pub anchor: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Contact {
    container: u64,
    bbox: BBox,
}

#[derive(Debug, Clone, PartialEq)]
struct LogEntry {
    frame_id: u64,
    bbox: BBox,
    vehicle: Option<Contact>,
    vessel: Option<Contact>,
}

impl LogEntry {
    fn contact(&self, class: &ObjectClass) -> Option<Contact> {
        match class {
            ObjectClass::Vehicle => self.vehicle,
            ObjectClass::Vessel => self.vessel,
            _ => None,
        }
    }
}

/// Person/container interaction: IoU at or above `interaction_iou`, or the
/// person's center inside the container box.
pub fn interacts(person: &BBox, container: &BBox, interaction_iou: f64) -> bool {
    let (cx, cy) = person.center();
    person.iou(container) >= interaction_iou || container.contains_point(cx, cy)
}

/// Watches person tracks for getting into and out of vehicles and vessels.
///
/// Every person observation is logged with the container of each class it
/// interacts with (containers are the latest boxes of active vehicle and
/// vessel tracks). A person track that dies while interacting fires an
/// enter/board event, provided the interaction began at least
/// `new_track_age` frames after birth and was preceded by a frame without
/// it. A person track that interacts with a container while no older than
/// `new_track_age` fires an exit/disembark event dated at its birth, as long
/// as the container was tracked before the person first appeared. Exits
/// are held back until the person track has `debounce_frames` observations.
///
/// A new person track that appears on a container next to where an older,
/// established person track is still coasting is taken as the tracker re-acquiring
/// that person: it fires no exit, and when the
/// older track dies its history passes to the new one.
#[derive(Debug, Clone, Default)]
pub struct TransitionDetector {
    logs: BTreeMap<u64, Vec<LogEntry>>,
    /// Exits fire once per person track; entries fire at most once since a
    /// track dies once.
    fired: BTreeSet<(EventType, u64)>,
    /// Exits waiting for the person track to be seen `debounce_frames` times.
    pending: BTreeMap<(EventType, u64), RawTransition>,
    /// Lost person track -> the track that re-acquired it on a container.
    successors: BTreeMap<u64, u64>,
    /// Birth frame and log handed down from a lost predecessor.
    inherited: BTreeMap<u64, (u64, Vec<LogEntry>)>,
}

impl TransitionDetector {
    /// An established, currently missing person track last seen within one
    /// box diagonal of `bbox`.
    fn lost_near(&self, tracker: &Tracker, person: &Track, bbox: &BBox, p: &EventParams) -> Option<u64> {
        tracker
            .active()
            .iter()
            .filter(|t| {
                t.class == ObjectClass::Person
                    && t.track_id != person.track_id
                    && t.misses > 0
                    && t.observations.len() >= p.debounce_frames as usize
                    && t.birth_frame < person.birth_frame
                    && !self.successors.contains_key(&t.track_id)
            })
            .find(|t| {
                let last = t.last_bbox();
                distance(last.center(), bbox.center()) <= (last.diagonal() + bbox.diagonal()) / 2.0
            })
            .map(|t| t.track_id)
    }

    /// `next_frame_after(f)` must return the first processed frame id after `f`.
    pub fn observe(
        &mut self,
        frame_id: u64,
        tracker: &Tracker,
        outcome: &StepOutcome,
        p: &EventParams,
        next_frame_after: impl Fn(u64) -> u64,
    ) -> Vec<RawTransition> {
        let containers: Vec<(u64, &ObjectClass, BBox)> = tracker
            .active()
            .iter()
            .filter(|t| t.class.is_container())
            .map(|t| (t.track_id, &t.class, t.last_bbox()))
            .collect();
        let best_contact = |person: &BBox, class: &ObjectClass| -> Option<Contact> {
            containers
                .iter()
                .filter(|(_, c, b)| *c == class && interacts(person, b, p.interaction_iou))
                .map(|(id, _, b)| (person.iou(b), *id, *b))
                // highest IoU, then lowest id
                .fold(None::<(f64, u64, BBox)>, |best, cand| match best {
                    Some(b) if b.0 >= cand.0 => Some(b),
                    _ => Some(cand),
                })
                .map(|(_, container, bbox)| Contact { container, bbox })
        };

        let mut fired = Vec::new();

        // deaths: enter / board
        let mut deaths = outcome.deaths.clone();
        deaths.sort_unstable();
        for track_id in deaths {
            for event_type in [EventType::ExitVehicle, EventType::DisembarkVessel] {
                self.pending.remove(&(event_type, track_id));
            }
            let Some(track) = tracker.track(track_id) else {
                continue;
            };
            let (birth_frame, mut log) = self
                .inherited
                .remove(&track_id)
                .unwrap_or((track.birth_frame, Vec::new()));
            log.extend(self.logs.remove(&track_id).unwrap_or_default());
            if let Some(succ) = self.successors.remove(&track_id) {
                if tracker.track(succ).is_some_and(|t| t.death_frame.is_none()) {
                    self.inherited.insert(succ, (birth_frame, log));
                    continue;
                }
            }
            self.successors.retain(|_, s| *s != track_id);
            for event_type in [EventType::EnterVehicle, EventType::BoardVessel] {
                let class = event_type.container_class().expect("transition");
                let Some(last) = log.last() else { continue };
                let Some(contact) = last.contact(&class) else {
                    continue;
                };
                let onset = log
                    .iter()
                    .rposition(|e| e.contact(&class).is_none())
                    .map(|i| i + 1);
                let Some(onset) = onset else {
                    // interacting since birth
                    continue;
                };
                if log[onset].frame_id - birth_frame < p.new_track_age {
                    continue;
                }
                if self.fired.insert((event_type, track_id)) {
                    fired.push(RawTransition {
                        event_type,
                        person: track_id,
                        container: contact.container,
                        start_frame: next_frame_after(last.frame_id),
                        anchor: last.bbox.union(&contact.bbox),
                    });
                }
            }
        }

        // this frame's person observations
        for &track_id in &outcome.det_tracks {
            let Some(track) = tracker.track(track_id) else {
                continue;
            };
            if track.class != ObjectClass::Person || track.death_frame.is_some() {
                continue;
            }
            let obs = track.last();
            if obs.frame_id != frame_id {
                continue;
            }
            let entry = LogEntry {
                frame_id,
                bbox: obs.bbox,
                vehicle: best_contact(&obs.bbox, &ObjectClass::Vehicle),
                vessel: best_contact(&obs.bbox, &ObjectClass::Vessel),
            };
            if frame_id - track.birth_frame <= p.new_track_age {
                for event_type in [EventType::ExitVehicle, EventType::DisembarkVessel] {
                    let class = event_type.container_class().expect("transition");
                    let Some(contact) = entry.contact(&class) else {
                        continue;
                    };
                    // the container must already have been in view
                    let predates = tracker
                        .track(contact.container)
                        .is_some_and(|c| c.birth_frame < track.birth_frame);
                    if !predates {
                        continue;
                    }
                    if let Some(lost) = self.lost_near(tracker, track, &entry.bbox, p) {
                        self.successors.insert(lost, track_id);
                        continue;
                    }
                    let reacquired = self.inherited.contains_key(&track_id)
                        || self.successors.values().any(|&s| s == track_id);
                    if reacquired {
                        continue;
                    }
                    let key = (event_type, track_id);
                    if !self.fired.contains(&key) {
                        self.pending.entry(key).or_insert(RawTransition {
                            event_type,
                            person: track_id,
                            container: contact.container,
                            start_frame: track.birth_frame,
                            anchor: entry.bbox.union(&contact.bbox),
                        });
                    }
                }
            }
            if track.observations.len() >= p.debounce_frames as usize {
                for event_type in [EventType::ExitVehicle, EventType::DisembarkVessel] {
                    if let Some(t) = self.pending.remove(&(event_type, track_id)) {
                        self.fired.insert((event_type, track_id));
                        fired.push(t);
                    }
                }
            }
            self.logs.entry(track_id).or_default().push(entry);
        }

        fired
    }
}

/// A candidate group being tracked across frames for one event type.
#[derive(Debug, Clone)]
struct Candidate {
    members: BTreeSet<u64>,
    all_members: BTreeSet<u64>,
    first_frame: u64,
    last_frame: u64,
    run_len: u32,
    anchor: BBox,
    label: ContextLabel,
    event: Option<usize>,
}

/// One raw group seen in a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGroup {
    pub members: BTreeSet<u64>,
    pub anchor: BBox,
}

/// What the debouncer asks its owner to do after a frame.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupUpdate {
    /// A candidate persisted long enough; create its event.
    Confirm {
        candidate: usize,
        start_frame: u64,
        members: Vec<u64>,
        anchor: BBox,
        label: ContextLabel,
    },
    /// A confirmed event was seen again in this frame.
    Extend {
        event: usize,
        last_frame: u64,
        members: Vec<u64>,
    },
}

pub fn jaccard(a: &BTreeSet<u64>, b: &BTreeSet<u64>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Persistence filter for group events.
///
/// Raw groups are matched to open candidates by participant Jaccard ≥ 0.5.
/// A candidate seen in `debounce_frames` consecutive processed frames is
/// confirmed as one event starting at its first frame. A confirmed
/// candidate absorbs matching groups until it has gone unseen for more than
/// `cooldown_frames`, so a brief break does not fire the event again.
#[derive(Debug, Clone, Default)]
pub struct GroupDebouncer {
    candidates: Vec<Candidate>,
}

impl GroupDebouncer {
    pub const MIN_JACCARD: f64 = 0.5;

    pub fn observe(
        &mut self,
        frame_id: u64,
        label: ContextLabel,
        groups: Vec<RawGroup>,
        p: &EventParams,
    ) -> Vec<GroupUpdate> {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, c) in self.candidates.iter().enumerate() {
            for (gi, g) in groups.iter().enumerate() {
                let j = jaccard(&c.members, &g.members);
                if j >= Self::MIN_JACCARD {
                    pairs.push((j, ci, gi));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut cand_match: Vec<Option<usize>> = vec![None; self.candidates.len()];
        let mut group_used = vec![false; groups.len()];
        for (_, ci, gi) in pairs {
            if cand_match[ci].is_none() && !group_used[gi] {
                cand_match[ci] = Some(gi);
                group_used[gi] = true;
            }
        }

        let mut updates = Vec::new();
        let mut kept = Vec::with_capacity(self.candidates.len());
        for (c, matched) in std::mem::take(&mut self.candidates).into_iter().zip(cand_match) {
            let mut c = c;
            match matched {
                Some(gi) => {
                    let g = &groups[gi];
                    c.members = g.members.clone();
                    c.all_members.extend(g.members.iter().copied());
                    c.last_frame = frame_id;
                    c.run_len += 1;
                    kept.push(c);
                }
                // unconfirmed candidates must persist without a break
                None if c.event.is_none() => {}
                None if frame_id - c.last_frame > p.cooldown_frames => {}
                None => kept.push(c),
            }
        }
        for (gi, g) in groups.into_iter().enumerate() {
            if group_used[gi] {
                continue;
            }
            kept.push(Candidate {
                all_members: g.members.clone(),
                members: g.members,
                first_frame: frame_id,
                last_frame: frame_id,
                run_len: 1,
                anchor: g.anchor,
                label,
                event: None,
            });
        }
        self.candidates = kept;

        for (ci, c) in self.candidates.iter().enumerate() {
            if c.last_frame != frame_id {
                continue;
            }
            match c.event {
                Some(event) => updates.push(GroupUpdate::Extend {
                    event,
                    last_frame: frame_id,
                    members: c.all_members.iter().copied().collect(),
                }),
                None if c.run_len >= p.debounce_frames => updates.push(GroupUpdate::Confirm {
                    candidate: ci,
                    start_frame: c.first_frame,
                    members: c.all_members.iter().copied().collect(),
                    anchor: c.anchor,
                    label: c.label,
                }),
                None => {}
            }
        }
        updates
    }

    /// Binds a confirmed candidate to the index of its event.
    pub fn bind(&mut self, candidate: usize, event: usize) {
        self.candidates[candidate].event = Some(event);
    }
}

/// Frame facts the event engine needs to date and place events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameInfo {
    pub frame_id: u64,
    pub timestamp_ms: i64,
    pub width: u32,
    pub height: u32,
    pub geo: Option<GeoMeta>,
    pub label: ContextLabel,
}

/// Runs every rule over a stream of tracker steps and assembles events.
#[derive(Debug, Clone)]
pub struct EventEngine {
    params: EventParams,
    transitions: TransitionDetector,
    meetings: GroupDebouncer,
    crowds: GroupDebouncer,
    frames: BTreeMap<u64, FrameInfo>,
    events: Vec<Event>,
}

impl EventEngine {
    pub fn new(params: EventParams) -> Self {
        EventEngine {
            params,
            transitions: TransitionDetector::default(),
            meetings: GroupDebouncer::default(),
            crowds: GroupDebouncer::default(),
            frames: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    fn new_event(
        &mut self,
        event_type: EventType,
        start_frame: u64,
        end_frame: u64,
        participants: Vec<u64>,
        anchor_bbox: BBox,
        label: ContextLabel,
    ) -> usize {
        let start = self.frames[&start_frame];
        let end = self.frames[&end_frame];
        let ev = Event {
            event_id: self.events.len() as u64,
            event_type,
            start_frame,
            end_frame,
            start_timestamp_ms: start.timestamp_ms,
            end_timestamp_ms: end.timestamp_ms,
            participants,
            anchor_bbox,
            geo: None,
            context_label: label,
        };
        let ev = geo::geolocate_event(
            ev,
            start.geo.as_ref(),
            f64::from(start.width),
            f64::from(start.height),
        );
        self.events.push(ev);
        self.events.len() - 1
    }

    /// Processes one actionable frame after the tracker has stepped on it.
    pub fn observe(&mut self, frame: FrameInfo, tracker: &Tracker, outcome: &StepOutcome) {
        self.frames.insert(frame.frame_id, frame);
        let p = self.params;

        let frames = &self.frames;
        let raw = self.transitions.observe(frame.frame_id, tracker, outcome, &p, |f| {
            frames
                .range(f + 1..)
                .next()
                .map(|(id, _)| *id)
                .unwrap_or(frame.frame_id)
        });
        for t in raw {
            let label = self.frames[&t.start_frame].label;
            let mut participants = vec![t.person, t.container];
            participants.sort_unstable();
            self.new_event(t.event_type, t.start_frame, t.start_frame, participants, t.anchor, label);
        }

        let people: Vec<(u64, BBox)> = outcome
            .det_tracks
            .iter()
            .filter_map(|&id| tracker.track(id))
            .filter(|t| t.class == ObjectClass::Person && t.last().frame_id == frame.frame_id)
            .map(|t| (t.track_id, t.last_bbox()))
            .collect();
        let boxes: BTreeMap<u64, BBox> = people.iter().copied().collect();
        let to_raw = |groups: Vec<Vec<u64>>| -> Vec<RawGroup> {
            groups
                .into_iter()
                .map(|g| RawGroup {
                    anchor: union_box(g.iter().map(|id| boxes[id])),
                    members: g.into_iter().collect(),
                })
                .collect()
        };
        let meeting_groups = to_raw(detect_meetings(&people, &p));
        let crowd_groups = to_raw(detect_crowds(&people, &p));

        let updates = self.meetings.observe(frame.frame_id, frame.label, meeting_groups, &p);
        self.apply_group_updates(EventType::Meeting, updates);
        let updates = self.crowds.observe(frame.frame_id, frame.label, crowd_groups, &p);
        self.apply_group_updates(EventType::Crowd, updates);
    }

    fn apply_group_updates(&mut self, event_type: EventType, updates: Vec<GroupUpdate>) {
        for u in updates {
            match u {
                GroupUpdate::Confirm {
                    candidate,
                    start_frame,
                    members,
                    anchor,
                    label,
                } => {
                    let last = *self.frames.keys().next_back().expect("frame recorded");
                    let idx = self.new_event(event_type, start_frame, last, members, anchor, label);
                    match event_type {
                        EventType::Meeting => self.meetings.bind(candidate, idx),
                        _ => self.crowds.bind(candidate, idx),
                    }
                }
                GroupUpdate::Extend {
                    event,
                    last_frame,
                    members,
                } => {
                    let ts = self.frames[&last_frame].timestamp_ms;
                    let ev = &mut self.events[event];
                    ev.end_frame = last_frame;
                    ev.end_timestamp_ms = ts;
                    ev.participants = members;
                }
            }
        }
    }
}
