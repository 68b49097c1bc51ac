//! Per-frame driver: context, cataloging, tracking, events.

use serde::{Deserialize, Serialize};

use crate::cataloging::{self, TilePlan};
use crate::config::EngineConfig;
use crate::context::{self, SceneContext};
use crate::error::{Error, Result};
use crate::events::{Event, EventEngine, FrameInfo};
use crate::model::{Detection, FrameRecord};
use crate::tracking::Tracker;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub frames_processed: u64,
    pub frames_skipped: u64,
    /// Times the cataloging stage ran; uneventful frames never reach it.
    pub cataloging_invocations: u64,
    pub detections_in: u64,
    pub detections_after_gates: u64,
    pub detections_after_nms: u64,
    pub tracks_born: u64,
    pub tracks_died: u64,
    pub events_emitted: u64,
    pub events_ungeolocated: u64,
}

/// Scene context for a frame: external logits win over features; frames
/// with neither get the configured fallback label.
pub fn classify_frame(frame: &FrameRecord, cfg: &EngineConfig) -> Result<SceneContext> {
    if let Some(logits) = &frame.context_logits {
        return context::classify_from_logits(logits);
    }
    if let Some(features) = &frame.features {
        return Ok(context::classify_reference(features, &cfg.context.reference));
    }
    Ok(SceneContext::one_hot(cfg.context.fallback_label))
}

/// Streaming engine state for one detection stream.
pub struct Pipeline<'a> {
    cfg: &'a EngineConfig,
    tracker: Tracker,
    events: EventEngine,
    stats: PipelineStats,
    last_frame: Option<u64>,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a EngineConfig) -> Self {
        Pipeline {
            cfg,
            tracker: Tracker::new(cfg.tracker),
            events: EventEngine::new(cfg.events),
            stats: PipelineStats::default(),
            last_frame: None,
        }
    }

    pub fn stats(&self) -> &PipelineStats {
        &self.stats
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    /// Gating, mapping and duplicate merging for one actionable frame.
    fn catalog(&mut self, frame: &FrameRecord, ctx: &SceneContext) -> Result<Vec<Detection>> {
        self.stats.cataloging_invocations += 1;
        let cfg = context::select_config(ctx.label, &self.cfg.detector.configs)?
            .resolved_for_frame(frame.width, frame.height);

        let mut plan: Option<TilePlan> = None;
        let mut global = Vec::with_capacity(frame.detections.len());
        for d in &frame.detections {
            match d.tile {
                None => global.push(d.clone()),
                Some(i) => {
                    let plan = plan.get_or_insert_with(|| {
                        cataloging::plan_pyramid(frame.width, frame.height, &cfg)
                    });
                    let tile = plan.tiles.get(i).ok_or_else(|| {
                        Error::invalid(
                            "detections.tile",
                            format!(
                                "frame {}: tile {i} outside a plan of {} tiles",
                                frame.frame_id,
                                plan.tiles.len()
                            ),
                        )
                    })?;
                    global.push(cataloging::map_tile_to_frame(d, tile)?);
                }
            }
        }

        let gated = cataloging::apply_gates(&global, &cfg);
        self.stats.detections_after_gates += gated.len() as u64;
        let merged = cataloging::nms_merge(&gated, self.cfg.detector.nms_iou);
        self.stats.detections_after_nms += merged.len() as u64;
        Ok(merged)
    }

    pub fn process(&mut self, frame: &FrameRecord) -> Result<()> {
        frame.validate()?;
        if let Some(last) = self.last_frame {
            if frame.frame_id <= last {
                return Err(Error::invalid(
                    "frame_id",
                    format!("{} is not greater than previous frame {last}", frame.frame_id),
                ));
            }
        }
        self.last_frame = Some(frame.frame_id);
        self.stats.frames_processed += 1;
        self.stats.detections_in += frame.detections.len() as u64;

        let ctx = classify_frame(frame, self.cfg)?;
        if !context::is_actionable(&ctx) {
            self.stats.frames_skipped += 1;
            return Ok(());
        }

        let dets = self.catalog(frame, &ctx)?;
        let outcome = self.tracker.step(frame.frame_id, &dets)?;
        self.stats.tracks_born += outcome.births.len() as u64;
        self.stats.tracks_died += outcome.deaths.len() as u64;

        let info = FrameInfo {
            frame_id: frame.frame_id,
            timestamp_ms: frame.timestamp_ms,
            width: frame.width,
            height: frame.height,
            geo: frame.geo,
            label: ctx.label,
        };
        self.events.observe(info, &self.tracker, &outcome);
        Ok(())
    }

    /// Closes the stream. Open group events end at their last observed frame.
    pub fn finish(mut self) -> (Vec<Event>, PipelineStats) {
        let events = self.events.into_events();
        self.stats.events_emitted = events.len() as u64;
        self.stats.events_ungeolocated = events.iter().filter(|e| e.geo.is_none()).count() as u64;
        (events, self.stats)
    }
}

/// Runs a whole stream through the engine.
pub fn run_pipeline<I>(stream: I, cfg: &EngineConfig) -> Result<(Vec<Event>, PipelineStats)>
where
    I: IntoIterator<Item = Result<FrameRecord>>,
{
    cfg.validate()?;
    let mut pipeline = Pipeline::new(cfg);
    for frame in stream {
        pipeline.process(&frame?)?;
    }
    Ok(pipeline.finish())
}
