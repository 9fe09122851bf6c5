//! Aggregation of match results and risk ranks into risk-ranked recall
//! (`r3_1`/`r3_2`/`r3_3`), overall recall, and precision, swept over a
//! list of confidence thresholds.
//!
//! Undefined ratios (0/0) are reported as absent, never as 0 or 1, and
//! serialize as JSON nulls / empty CSV cells. Accumulation is plain
//! integer addition, so reports are independent of frame ordering and
//! of the parallel schedule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{GroundTruthObject, IngestError, LoadedFrame};
use crate::matching::{match_frame, MatchError, Prediction};
use crate::risk::{rank_object, RiskError, RiskParams, RiskRank};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("invalid sweep: {reason}")]
    InvalidSweep { reason: String },
    #[error("duplicate frame_id `{id}` in dataset")]
    DuplicateFrame { id: String },
}

/// Default confidence sweep: 0.5 through 0.95 in 0.05 steps.
pub const DEFAULT_SWEEP: [f64; 10] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

/// Named class-filter preset; off unless requested.
pub const CLASS_FILTER_PRESET: [&str; 4] = ["Pedestrian", "Cycle", "Vehicle", "Road Sign"];

/// `tp / (tp + fn)`; absent when there is nothing to recall.
pub fn recall(tp: usize, false_negatives: usize) -> Option<f64> {
    let denom = tp + false_negatives;
    (denom > 0).then(|| tp as f64 / denom as f64)
}

/// `tp / (tp + fp)`; absent when nothing was predicted.
pub fn precision(tp: usize, false_positives: usize) -> Option<f64> {
    let denom = tp + false_positives;
    (denom > 0).then(|| tp as f64 / denom as f64)
}

/// Per-rank and overall TP/FN/FP counts at one confidence threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RankTally {
    /// IoG-rule true positives, indexed by `RiskRank::index()`.
    pub tp_by_rank: [usize; 3],
    /// Ground-truth objects per rank (TP + FN denominator).
    pub gt_by_rank: [usize; 3],
    /// IoU-rule true positives across all ranks.
    pub tp_overall: usize,
    /// IoU-rule unmatched predictions.
    pub false_positives: usize,
}

impl RankTally {
    pub fn objects(&self) -> usize {
        self.gt_by_rank.iter().sum()
    }

    pub fn r3(&self, rank: RiskRank) -> Option<f64> {
        let i = rank.index();
        recall(self.tp_by_rank[i], self.gt_by_rank[i] - self.tp_by_rank[i])
    }

    pub fn recall_overall(&self) -> Option<f64> {
        recall(self.tp_overall, self.objects() - self.tp_overall)
    }

    pub fn precision_overall(&self) -> Option<f64> {
        precision(self.tp_overall, self.false_positives)
    }

    fn merge(&mut self, other: &RankTally) {
        for i in 0..3 {
            self.tp_by_rank[i] += other.tp_by_rank[i];
            self.gt_by_rank[i] += other.gt_by_rank[i];
        }
        self.tp_overall += other.tp_overall;
        self.false_positives += other.false_positives;
    }
}

/// Metrics at one confidence threshold of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub conf_threshold: f64,
    pub r3_1: Option<f64>,
    pub r3_2: Option<f64>,
    pub r3_3: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
}

/// Dataset-level counts after class filtering.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub frames: usize,
    pub objects: usize,
    pub imminent: usize,
    pub potential: usize,
    pub other: usize,
    pub predictions: usize,
    /// Prediction records referencing unknown frame ids.
    pub predictions_dropped: usize,
}

/// Full configuration echo, so every reported number is reproducible
/// from the report alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub a_max: f64,
    pub l_comp: f64,
    pub dt: f64,
    pub tau_iog: f64,
    pub tau_iou: f64,
    pub sweep: Vec<f64>,
    pub class_filter: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ConfigEcho,
    pub totals: Totals,
    pub sweep: Vec<SweepPoint>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per sweep point; absent metrics are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,r3_1,r3_2,r3_3,recall,precision\n");
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for p in &self.sweep {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.conf_threshold,
                cell(p.r3_1),
                cell(p.r3_2),
                cell(p.r3_3),
                cell(p.recall),
                cell(p.precision),
            );
        }
        out
    }
}

/// Matching thresholds and the confidence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalThresholds {
    pub tau_iog: f64,
    pub tau_iou: f64,
    pub sweep: Vec<f64>,
}

impl Default for EvalThresholds {
    fn default() -> Self {
        EvalThresholds {
            tau_iog: 0.8,
            tau_iou: 0.8,
            sweep: DEFAULT_SWEEP.to_vec(),
        }
    }
}

impl EvalThresholds {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.sweep.is_empty() {
            return Err(EvalError::InvalidSweep {
                reason: "sweep must be non-empty".into(),
            });
        }
        for &v in &self.sweep {
            if !(v > 0.0 && v <= 1.0) || !v.is_finite() {
                return Err(EvalError::InvalidSweep {
                    reason: format!("sweep value {v} outside (0, 1]"),
                });
            }
        }
        for w in self.sweep.windows(2) {
            if w[0] >= w[1] {
                return Err(EvalError::InvalidSweep {
                    reason: format!("sweep not strictly increasing at {} >= {}", w[0], w[1]),
                });
            }
        }
        Ok(())
    }
}

struct FramePartial {
    rank_counts: [usize; 3],
    tallies: Vec<RankTally>,
    warnings: Vec<String>,
}

fn class_kept(obj: &GroundTruthObject, filter: Option<&BTreeSet<String>>) -> bool {
    filter.map_or(true, |set| set.contains(&obj.class_label))
}

fn process_frame(
    loaded: &LoadedFrame,
    preds: &[Prediction],
    params: &RiskParams,
    thresholds: &EvalThresholds,
    class_filter: Option<&BTreeSet<String>>,
) -> Result<FramePartial, EvalError> {
    let frame = &loaded.frame;
    let kept: Vec<&GroundTruthObject> = frame
        .objects
        .iter()
        .filter(|o| class_kept(o, class_filter))
        .collect();

    // Ranks are a property of the scene, independent of the detector
    // and of the confidence threshold: computed once.
    let mut rank_counts = [0usize; 3];
    let mut ranks = Vec::with_capacity(kept.len());
    for obj in &kept {
        let rank = rank_object(&frame.ego, &obj.world, params)?;
        rank_counts[rank.index()] += 1;
        ranks.push(rank);
    }

    let gts: Vec<(String, crate::matching::ImageBox)> = kept
        .iter()
        .map(|o| (o.object_id.clone(), o.image_box))
        .collect();

    let mut tallies = Vec::with_capacity(thresholds.sweep.len());
    for &conf in &thresholds.sweep {
        let result = match_frame(&gts, preds, conf, thresholds.tau_iog, thresholds.tau_iou)?;
        let mut tally = RankTally {
            gt_by_rank: rank_counts,
            ..RankTally::default()
        };
        for (obj, rank) in kept.iter().zip(&ranks) {
            let m = &result.per_gt[&obj.object_id];
            if m.is_tp_iog {
                tally.tp_by_rank[rank.index()] += 1;
            }
            if m.is_tp_iou {
                tally.tp_overall += 1;
            }
        }
        tally.false_positives = result.unmatched_predictions;
        tallies.push(tally);
    }

    Ok(FramePartial {
        rank_counts,
        tallies,
        warnings: loaded.warnings.clone(),
    })
}

const BATCH: usize = 64;

/// Runs the full evaluation over a stream of frames joined with their
/// predictions.
///
/// For every sweep threshold, ground truth is matched under both rules
/// and tallied per rank; prediction records whose frame id never
/// appears in the stream are dropped with a warning. Frames are
/// processed in parallel batches; the report is identical for any
/// batch size or frame order.
pub fn evaluate<I>(
    frames: I,
    mut predictions: BTreeMap<String, Vec<Prediction>>,
    params: &RiskParams,
    thresholds: &EvalThresholds,
    class_filter: Option<&BTreeSet<String>>,
) -> Result<EvalReport, EvalError>
where
    I: IntoIterator<Item = Result<LoadedFrame, IngestError>>,
{
    params.validate()?;
    thresholds.validate()?;

    let predictions_total: usize = predictions.values().map(Vec::len).sum();
    let mut totals = Totals {
        predictions: predictions_total,
        ..Totals::default()
    };
    let mut sweep_tallies = vec![RankTally::default(); thresholds.sweep.len()];
    let mut warnings: Vec<String> = Vec::new();
    let mut seen_frames: BTreeSet<String> = BTreeSet::new();

    let mut batch: Vec<(LoadedFrame, Vec<Prediction>)> = Vec::with_capacity(BATCH);
    let mut frames = frames.into_iter();
    loop {
        batch.clear();
        for item in frames.by_ref().take(BATCH) {
            let loaded = item?;
            if !seen_frames.insert(loaded.frame.frame_id.clone()) {
                return Err(EvalError::DuplicateFrame {
                    id: loaded.frame.frame_id,
                });
            }
            let preds = predictions.remove(&loaded.frame.frame_id).unwrap_or_default();
            batch.push((loaded, preds));
        }
        if batch.is_empty() {
            break;
        }
        let partials: Vec<FramePartial> = batch
            .par_iter()
            .map(|(loaded, preds)| process_frame(loaded, preds, params, thresholds, class_filter))
            .collect::<Result<_, _>>()?;
        for partial in partials {
            totals.frames += 1;
            totals.imminent += partial.rank_counts[0];
            totals.potential += partial.rank_counts[1];
            totals.other += partial.rank_counts[2];
            for (acc, t) in sweep_tallies.iter_mut().zip(&partial.tallies) {
                acc.merge(t);
            }
            warnings.extend(partial.warnings);
        }
    }
    totals.objects = totals.imminent + totals.potential + totals.other;

    for (frame_id, dropped) in &predictions {
        totals.predictions_dropped += dropped.len();
        warnings.push(format!(
            "{} prediction record(s) for unknown frame_id `{frame_id}` dropped",
            dropped.len()
        ));
    }
    // Canonical order: the report must not depend on frame order.
    warnings.sort();

    let sweep = thresholds
        .sweep
        .iter()
        .zip(&sweep_tallies)
        .map(|(&conf, tally)| SweepPoint {
            conf_threshold: conf,
            r3_1: tally.r3(RiskRank::Imminent),
            r3_2: tally.r3(RiskRank::Potential),
            r3_3: tally.r3(RiskRank::Other),
            recall: tally.recall_overall(),
            precision: tally.precision_overall(),
        })
        .collect();

    Ok(EvalReport {
        config: ConfigEcho {
            a_max: params.a_max,
            l_comp: params.l_comp,
            dt: params.dt,
            tau_iog: thresholds.tau_iog,
            tau_iou: thresholds.tau_iou,
            sweep: thresholds.sweep.clone(),
            class_filter: class_filter.map(|s| s.iter().cloned().collect()),
        },
        totals,
        sweep,
        warnings,
    })
}
