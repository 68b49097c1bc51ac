//! Context-gated object cataloging, tracking and salient event detection
//! for aerial full-motion video detection streams.
//!
//! Each frame of a stream is classified into a scene context. Uneventful
//! frames are skipped; the rest have their detections filtered by the
//! context's detector configuration, linked into tracks, and fed to the
//! event rules. Confirmed events are geolocated and exported as a line log
//! and a GeoJSON feature collection. A scenario simulator produces streams
//! with exact ground truth for closed-loop evaluation.

pub mod cataloging;
pub mod config;
pub mod context;
pub mod error;
pub mod eval;
pub mod events;
pub mod export;
pub mod geo;
pub mod model;
pub mod pipeline;
pub mod simulator;
pub mod stream;
pub mod tracking;

pub use config::EngineConfig;
pub use error::{Error, Result};
pub use events::{Event, EventType};
pub use model::{BBox, Detection, FrameRecord, ObjectClass};
pub use pipeline::{run_pipeline, PipelineStats};
