//! Image-plane matching of predicted boxes to ground truth.
//!
//! Two true-positive rules run side by side:
//!
//! * **IoG** (intersection over ground truth): a ground-truth box is a
//!   true positive when some single prediction covers at least `τ_iog`
//!   of its area. One prediction may cover several ground truths; class
//!   labels are ignored. This feeds the per-rank recall metrics.
//! * **IoU**: classic greedy one-to-one assignment at threshold
//!   `τ_iou`, ignoring class labels. This feeds overall recall, and its
//!   unmatched predictions count as false positives for precision.
//!
//! Predictions are filtered by confidence strictly before matching.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("degenerate image box: {reason}")]
    DegenerateBox { reason: String },
    #[error("confidence {value} outside [0, 1]")]
    InvalidConfidence { value: f64 },
    #[error("threshold {value} outside (0, 1]")]
    InvalidThreshold { value: f64 },
    #[error("confidence threshold {value} outside [0, 1]")]
    InvalidConfidenceThreshold { value: f64 },
    #[error("duplicate ground-truth id `{id}`")]
    DuplicateGtId { id: String },
}

/// Axis-aligned image-plane rectangle, in (real-valued) pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl ImageBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        ImageBox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        for (name, v) in [
            ("x_min", self.x_min),
            ("y_min", self.y_min),
            ("x_max", self.x_max),
            ("y_max", self.y_max),
        ] {
            if !v.is_finite() {
                return Err(MatchError::DegenerateBox {
                    reason: format!("{name} is not finite"),
                });
            }
        }
        if !(self.x_min < self.x_max) {
            return Err(MatchError::DegenerateBox {
                reason: format!("x_min ({}) must be < x_max ({})", self.x_min, self.x_max),
            });
        }
        if !(self.y_min < self.y_max) {
            return Err(MatchError::DegenerateBox {
                reason: format!("y_min ({}) must be < y_max ({})", self.y_min, self.y_max),
            });
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn intersection_area(&self, other: &ImageBox) -> f64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        w * h
    }
}

/// One detector output box with its confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub image_box: ImageBox,
    pub confidence: f64,
    pub class_label: Option<String>,
}

impl Prediction {
    pub fn validate(&self) -> Result<(), MatchError> {
        self.image_box.validate()?;
        if !(0.0..=1.0).contains(&self.confidence) || !self.confidence.is_finite() {
            return Err(MatchError::InvalidConfidence {
                value: self.confidence,
            });
        }
        Ok(())
    }
}

/// Fraction of the ground-truth box covered by the prediction.
/// Asymmetric; saturates at 1 when the prediction contains the box.
pub fn iog(gt: &ImageBox, pred: &ImageBox) -> Result<f64, MatchError> {
    gt.validate()?;
    pred.validate()?;
    Ok(gt.intersection_area(pred) / gt.area())
}

/// Intersection over union; symmetric, in [0, 1].
pub fn iou(a: &ImageBox, b: &ImageBox) -> Result<f64, MatchError> {
    a.validate()?;
    b.validate()?;
    let inter = a.intersection_area(b);
    Ok(inter / (a.area() + b.area() - inter))
}

/// Match outcome for one ground-truth box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtMatch {
    pub is_tp_iog: bool,
    /// Best single-prediction coverage, 0 when no prediction passed the
    /// confidence filter.
    pub best_iog: f64,
    pub is_tp_iou: bool,
    pub best_iou: f64,
}

/// Per-frame matching result under both rules.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub per_gt: BTreeMap<String, GtMatch>,
    /// Predictions that passed the confidence filter.
    pub considered_predictions: usize,
    /// Considered predictions left unmatched by the one-to-one IoU rule
    /// (the false positives for precision).
    pub unmatched_predictions: usize,
}

fn check_unit_threshold(value: f64) -> Result<(), MatchError> {
    if !(value > 0.0 && value <= 1.0) || !value.is_finite() {
        return Err(MatchError::InvalidThreshold { value });
    }
    Ok(())
}

/// Matches one frame's predictions against its ground truth.
///
/// Predictions with confidence below `conf_threshold` are dropped
/// first. The result does not depend on the input order of
/// predictions: ties in the greedy IoU assignment are broken by a
/// canonical prediction order (confidence descending, then `x_min`,
/// then `y_min`), then by ground-truth id.
pub fn match_frame(
    gts: &[(String, ImageBox)],
    preds: &[Prediction],
    conf_threshold: f64,
    tau_iog: f64,
    tau_iou: f64,
) -> Result<MatchResult, MatchError> {
    check_unit_threshold(tau_iog)?;
    check_unit_threshold(tau_iou)?;
    if !(0.0..=1.0).contains(&conf_threshold) || !conf_threshold.is_finite() {
        return Err(MatchError::InvalidConfidenceThreshold {
            value: conf_threshold,
        });
    }

    let mut seen = std::collections::HashSet::new();
    for (id, gt_box) in gts {
        gt_box.validate()?;
        if !seen.insert(id.as_str()) {
            return Err(MatchError::DuplicateGtId { id: id.clone() });
        }
    }

    let mut filtered: Vec<&Prediction> = preds
        .iter()
        .filter(|p| p.confidence >= conf_threshold)
        .collect();
    for p in &filtered {
        p.validate()?;
    }
    filtered.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(a.image_box.x_min.total_cmp(&b.image_box.x_min))
            .then(a.image_box.y_min.total_cmp(&b.image_box.y_min))
    });

    // IoG rule: best coverage by any single prediction.
    let mut per_gt = BTreeMap::new();
    let mut iou_table = vec![vec![0.0f64; filtered.len()]; gts.len()];
    for (gi, (id, gt_box)) in gts.iter().enumerate() {
        let mut best_iog = 0.0f64;
        let mut best_iou = 0.0f64;
        for (pi, p) in filtered.iter().enumerate() {
            best_iog = best_iog.max(iog(gt_box, &p.image_box)?);
            let v = iou(gt_box, &p.image_box)?;
            iou_table[gi][pi] = v;
            best_iou = best_iou.max(v);
        }
        per_gt.insert(
            id.clone(),
            GtMatch {
                is_tp_iog: best_iog >= tau_iog,
                best_iog,
                is_tp_iou: false,
                best_iou,
            },
        );
    }

    // IoU rule: greedy one-to-one assignment, best pairs first.
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, row) in iou_table.iter().enumerate() {
        for (pi, &v) in row.iter().enumerate() {
            if v >= tau_iou {
                pairs.push((v, pi, gi));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(gts[a.2].0.cmp(&gts[b.2].0))
    });
    let mut gt_taken = vec![false; gts.len()];
    let mut pred_taken = vec![false; filtered.len()];
    let mut matched = 0usize;
    for (_, pi, gi) in pairs {
        if !gt_taken[gi] && !pred_taken[pi] {
            gt_taken[gi] = true;
            pred_taken[pi] = true;
            matched += 1;
            per_gt.get_mut(&gts[gi].0).unwrap().is_tp_iou = true;
        }
    }

    Ok(MatchResult {
        per_gt,
        considered_predictions: filtered.len(),
        unmatched_predictions: filtered.len() - matched,
    })
}
