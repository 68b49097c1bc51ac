//! Event log (JSON lines) and common-operating-picture (GeoJSON) output.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::events::Event;

pub fn export_events(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_events(text: &str) -> Result<Vec<Event>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Line {
                line: i + 1,
                field: "event".into(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// One GeoJSON point feature per geolocated event; events without a
/// location are left out.
pub fn cop_feature_collection(events: &[Event]) -> Value {
    let features: Vec<Value> = events
        .iter()
        .filter_map(|e| {
            let g = e.geo?;
            Some(json!({
                "type": "Feature",
                "id": e.event_id,
                "geometry": {
                    "type": "Point",
                    "coordinates": [g.lon, g.lat],
                },
                "properties": {
                    "event_id": e.event_id,
                    "type": e.event_type,
                    "start_frame": e.start_frame,
                    "end_frame": e.end_frame,
                    "start_timestamp_ms": e.start_timestamp_ms,
                    "end_timestamp_ms": e.end_timestamp_ms,
                    "participants": e.participants,
                    "context_label": e.context_label,
                },
            }))
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "features": features,
    })
}

pub fn export_cop(events: &[Event], pretty: bool) -> String {
    let fc = cop_feature_collection(events);
    let mut s = if pretty {
        serde_json::to_string_pretty(&fc)
    } else {
        serde_json::to_string(&fc)
    }
    .expect("json values serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
