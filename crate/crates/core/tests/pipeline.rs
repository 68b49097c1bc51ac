use std::path::Path;

use fmv_sense::context::ContextLabel;
use fmv_sense::eval::evaluate;
use fmv_sense::simulator::{simulate, Scenario};
use fmv_sense::stream::{parse_stream, stream_to_string};
use fmv_sense::tracking::{Tracker, TrackerParams};
use fmv_sense::{run_pipeline, BBox, Detection, EngineConfig, EventType, FrameRecord, ObjectClass};

fn load(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"));
    Scenario::from_toml(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn steady_walker_is_one_track() {
    let mut tracker = Tracker::new(TrackerParams::default());
    for f in 0..50u64 {
        let b = BBox::new(100.0 + 2.0 * f as f64, 200.0, 20.0, 40.0);
        tracker.step(f, &[Detection::new(ObjectClass::Person, b, 0.9)]).unwrap();
    }
    assert_eq!(tracker.next_id(), 1);
    assert_eq!(tracker.active().len(), 1);
    assert_eq!(tracker.active()[0].observations.len(), 50);
}

#[test]
fn enter_vehicle_matches_truth_exactly() {
    let (stream, truth) = simulate(&load("enter_vehicle_basic")).unwrap();
    let (events, stats) = run_pipeline(stream.into_iter().map(Ok), &EngineConfig::default()).unwrap();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].event_type, EventType::EnterVehicle);
    assert_eq!(events[0].start_frame, truth[0].trigger_frame);
    assert_eq!(events[0].context_label, ContextLabel::LowAltitude);
    assert!(events[0].geo.is_some());
    assert_eq!(stats.tracks_died, 1);
    let report = evaluate(&events, &truth, 0);
    assert_eq!(report.overall.f1, 1.0);
}

#[test]
fn shipped_streams_round_trip() {
    for name in [
        "meeting_basic",
        "crowd_basic",
        "enter_vehicle_basic",
        "exit_vehicle_basic",
        "board_vessel_basic",
        "disembark_vessel_basic",
        "uneventful_basic",
    ] {
        let (stream, _) = simulate(&load(name)).unwrap();
        let text = stream_to_string(&stream);
        assert_eq!(parse_stream(&text).unwrap(), stream, "{name}");
    }
}

#[test]
fn tiled_detections_reach_the_tracker_in_frame_coordinates() {
    // a 4K frame at medium altitude: tile 3 starts at x = 2560
    let mut frames = Vec::new();
    for f in 0..10u64 {
        let mut r = FrameRecord::new(f, f as i64 * 33, 3840, 2160);
        r.context_logits = Some(vec![0.0, 4.0, 0.0, 0.0, 0.0]);
        let mut d = Detection::new(ObjectClass::Vehicle, BBox::new(100.0 + f as f64, 50.0, 60.0, 30.0), 0.8);
        d.tile = Some(3);
        // the same car seen untiled by an overlapping pass, less confident
        let dup = Detection::new(ObjectClass::Vehicle, BBox::new(2661.0 + f as f64, 50.0, 60.0, 30.0), 0.7);
        r.detections = vec![d, dup];
        frames.push(r);
    }
    let (_, stats) = run_pipeline(frames.into_iter().map(Ok), &EngineConfig::default()).unwrap();
    assert_eq!(stats.detections_after_gates, 20);
    assert_eq!(stats.detections_after_nms, 10);
    assert_eq!(stats.tracks_born, 1);
}

#[test]
fn context_can_switch_mid_stream() {
    // a 0.85 vessel is admitted while the features say water, then gated
    let mut frames = Vec::new();
    for f in 0..20u64 {
        let mut r = FrameRecord::new(f, f as i64 * 33, 1920, 1080);
        r.features = Some(fmv_sense::context::ContextFeatures {
            altitude_m: 400.0,
            water_fraction: if f < 10 { 0.9 } else { 0.1 },
            clutter_score: 0.3,
        });
        r.detections = vec![Detection::new(ObjectClass::Vessel, BBox::new(500.0, 500.0, 120.0, 40.0), 0.85)];
        frames.push(r);
    }
    let (_, stats) = run_pipeline(frames.into_iter().map(Ok), &EngineConfig::default()).unwrap();
    assert_eq!(stats.detections_after_gates, 10);
    assert_eq!(stats.tracks_born, 1);
    assert_eq!(stats.tracks_died, 1);
}
