//! Scoring predicted events against simulator ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Event, EventType};
use crate::simulator::GroundTruth;

/// Ground truth as JSON lines, one record per scripted activity.
pub fn export_truth(truth: &[GroundTruth]) -> String {
    let mut out = String::new();
    for t in truth {
        out.push_str(&serde_json::to_string(t).expect("truth serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_truth(text: &str) -> Result<Vec<GroundTruth>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Line {
                line: i + 1,
                field: "truth".into(),
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    /// 1 when nothing was predicted.
    pub precision: f64,
    /// 1 when nothing was expected.
    pub recall: f64,
    pub f1: f64,
    /// Mean |predicted start − truth trigger| over matched pairs; `None`
    /// without matches.
    pub mean_abs_frame_error: Option<f64>,
}

impl Score {
    fn from_counts(tp: u64, fp: u64, fn_: u64, abs_err_sum: u64) -> Self {
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1,
            mean_abs_frame_error: (tp > 0).then(|| abs_err_sum as f64 / tp as f64),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tol_frames: u64,
    pub overall: Score,
    pub per_type: BTreeMap<EventType, Score>,
}

/// Greedy one-to-one matching of same-type (frame, frame) pairs within
/// `tol` frames. Pairs are taken by ascending frame difference, then by
/// earlier and later frame of the pair, then by index; the ordering
/// depends only on the pair's frames, so swapping the two sides only swaps
/// false positives with false negatives.
fn match_frames(pred: &[u64], truth: &[u64], tol: u64) -> (u64, u64) {
    let mut pairs: Vec<(u64, u64, u64, usize, usize)> = Vec::new();
    for (pi, &p) in pred.iter().enumerate() {
        for (ti, &t) in truth.iter().enumerate() {
            let diff = p.abs_diff(t);
            if diff <= tol {
                pairs.push((diff, p.min(t), p.max(t), pi, ti));
            }
        }
    }
    pairs.sort_by_key(|&(diff, lo, hi, pi, ti)| (diff, lo, hi, pi.min(ti), pi.max(ti)));
    let mut pred_used = vec![false; pred.len()];
    let mut truth_used = vec![false; truth.len()];
    let (mut tp, mut err) = (0, 0);
    for (diff, _, _, pi, ti) in pairs {
        if pred_used[pi] || truth_used[ti] {
            continue;
        }
        pred_used[pi] = true;
        truth_used[ti] = true;
        tp += 1;
        err += diff;
    }
    (tp, err)
}

pub fn evaluate(predicted: &[Event], truth: &[GroundTruth], tol_frames: u64) -> EvalReport {
    let mut report = EvalReport {
        tol_frames,
        ..EvalReport::default()
    };
    let (mut tp_all, mut fp_all, mut fn_all, mut err_all) = (0, 0, 0, 0);
    for ty in EventType::ALL {
        let pred: Vec<u64> = predicted
            .iter()
            .filter(|e| e.event_type == ty)
            .map(|e| e.start_frame)
            .collect();
        let gt: Vec<u64> = truth
            .iter()
            .filter(|t| t.event_type == ty)
            .map(|t| t.trigger_frame)
            .collect();
        let (tp, err) = match_frames(&pred, &gt, tol_frames);
        let fp = pred.len() as u64 - tp;
        let fn_ = gt.len() as u64 - tp;
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        err_all += err;
        report.per_type.insert(ty, Score::from_counts(tp, fp, fn_, err));
    }
    report.overall = Score::from_counts(tp_all, fp_all, fn_all, err_all);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::ContextLabel;
    use crate::model::BBox;

    pub(crate) fn pred(ty: EventType, start: u64) -> Event {
        Event {
            event_id: 0,
            event_type: ty,
            start_frame: start,
            end_frame: start,
            start_timestamp_ms: 0,
            end_timestamp_ms: 0,
            participants: vec![0, 1],
            anchor_bbox: BBox::default(),
            geo: None,
            context_label: ContextLabel::LowAltitude,
        }
    }

    fn truth(ty: EventType, trigger: u64) -> GroundTruth {
        GroundTruth {
            truth_id: 0,
            event_type: ty,
            trigger_frame: trigger,
            end_frame: trigger,
            participants: vec![],
        }
    }

    #[test]
    fn truth_lines_round_trip() {
        let t = vec![truth(EventType::Crowd, 4), truth(EventType::BoardVessel, 9)];
        assert_eq!(parse_truth(&export_truth(&t)).unwrap(), t);
        assert!(parse_truth("{}").is_err());
    }

    #[test]
    fn perfect() {
        let r = evaluate(
            &[pred(EventType::Meeting, 10), pred(EventType::Crowd, 50)],
            &[truth(EventType::Meeting, 10), truth(EventType::Crowd, 50)],
            0,
        );
        assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (1.0, 1.0, 1.0));
        assert_eq!(r.overall.mean_abs_frame_error, Some(0.0));
    }

    #[test]
    fn nothing_predicted() {
        let r = evaluate(&[], &[truth(EventType::Meeting, 10), truth(EventType::Crowd, 50)], 5);
        assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (1.0, 0.0, 0.0));
        assert_eq!(r.overall.true_positives, 0);
    }

    #[test]
    fn half_recall() {
        let r = evaluate(
            &[pred(EventType::Meeting, 12)],
            &[truth(EventType::Meeting, 10), truth(EventType::Meeting, 100)],
            5,
        );
        assert_eq!((r.overall.precision, r.overall.recall), (1.0, 0.5));
        assert_eq!(r.overall.mean_abs_frame_error, Some(2.0));
    }

    #[test]
    fn type_and_tolerance_must_agree() {
        let r = evaluate(&[pred(EventType::Crowd, 10)], &[truth(EventType::Meeting, 10)], 5);
        assert_eq!((r.overall.true_positives, r.overall.false_positives, r.overall.false_negatives), (0, 1, 1));
        let r = evaluate(&[pred(EventType::Meeting, 20)], &[truth(EventType::Meeting, 10)], 9);
        assert_eq!(r.overall.true_positives, 0);
        let r = evaluate(&[pred(EventType::Meeting, 20)], &[truth(EventType::Meeting, 10)], 10);
        assert_eq!(r.overall.true_positives, 1);
    }

    #[test]
    fn leftmost_tie_break_finds_both() {
        // truth {0, 10}, pred {5, 15}, tol 5: all three pairs tie at 5
        let (tp, _) = match_frames(&[5, 15], &[0, 10], 5);
        assert_eq!(tp, 2);
        let (tp, _) = match_frames(&[0, 10], &[5, 15], 5);
        assert_eq!(tp, 2);
    }
}
