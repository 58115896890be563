//! Multi-task training losses as pure, batch-size-independent functions.
//!
//! No optimizer lives here; these evaluate oracle or recorded predictions.
//! Offset losses are supervised only on points whose ground-truth label is
//! non-background, mirrored by the `mask` arguments.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoints::KEYPOINTS_PER_OBJECT;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        // keypoint, semantic, center
        Self {
            lambda1: 12.0,
            lambda2: 1.0,
            lambda3: 12.0,
        }
    }
}

/// A masked mean; `supported == 0` flags an empty mask (value 0).
#[derive(Debug, Clone, Copy)]
pub struct MaskedLoss {
    pub value: f64,
    pub supported: usize,
}

impl MaskedLoss {
    pub fn is_empty_mask(&self) -> bool {
        self.supported == 0
    }
}

/// Mean over masked points and keypoints of the per-vector L1 error
/// `|Δx| + |Δy| + |Δz|`.
pub fn keypoint_l1_loss(
    predicted: &[[Vector3<f64>; KEYPOINTS_PER_OBJECT]],
    ground_truth: &[[Vector3<f64>; KEYPOINTS_PER_OBJECT]],
    mask: &[bool],
) -> MaskedLoss {
    assert_eq!(predicted.len(), ground_truth.len());
    assert_eq!(predicted.len(), mask.len());
    let mut sum = 0.0;
    let mut supported = 0usize;
    for i in 0..predicted.len() {
        if !mask[i] {
            continue;
        }
        supported += 1;
        for j in 0..KEYPOINTS_PER_OBJECT {
            let d = predicted[i][j] - ground_truth[i][j];
            sum += d.x.abs() + d.y.abs() + d.z.abs();
        }
    }
    if supported == 0 {
        MaskedLoss {
            value: 0.0,
            supported: 0,
        }
    } else {
        MaskedLoss {
            value: sum / (supported * KEYPOINTS_PER_OBJECT) as f64,
            supported,
        }
    }
}

/// As [`keypoint_l1_loss`] with a single target per point.
pub fn center_l1_loss(
    predicted: &[Vector3<f64>],
    ground_truth: &[Vector3<f64>],
    mask: &[bool],
) -> MaskedLoss {
    assert_eq!(predicted.len(), ground_truth.len());
    assert_eq!(predicted.len(), mask.len());
    let mut sum = 0.0;
    let mut supported = 0usize;
    for i in 0..predicted.len() {
        if !mask[i] {
            continue;
        }
        supported += 1;
        let d = predicted[i] - ground_truth[i];
        sum += d.x.abs() + d.y.abs() + d.z.abs();
    }
    if supported == 0 {
        MaskedLoss {
            value: 0.0,
            supported: 0,
        }
    } else {
        MaskedLoss {
            value: sum / supported as f64,
            supported,
        }
    }
}

const PROBABILITY_CLAMP: f64 = 1e-12;

/// Focal loss over per-point class probability vectors:
/// mean of `−α·(1 − p_gt)^γ·ln(p_gt)` with `p_gt` clamped to `≥ 1e-12`.
///
/// Errors if a probability vector is negative, does not sum to 1 within
/// 1e-6, or a label is out of range.
pub fn focal_semantic_loss(
    class_scores: &[Vec<f64>],
    gt_labels: &[u16],
    gamma: f64,
    alpha: f64,
) -> Result<f64> {
    if class_scores.len() != gt_labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} score vectors for {} labels",
            class_scores.len(),
            gt_labels.len()
        )));
    }
    if class_scores.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (scores, &label) in class_scores.iter().zip(gt_labels.iter()) {
        let total: f64 = scores.iter().sum();
        if scores.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::Data(format!(
                "invalid probability vector (sum {total})"
            )));
        }
        let p = scores
            .get(usize::from(label))
            .copied()
            .ok_or_else(|| Error::Data(format!("label {label} outside {} classes", scores.len())))?
            .max(PROBABILITY_CLAMP);
        sum += -alpha * (1.0 - p).powf(gamma) * p.ln();
    }
    Ok(sum / class_scores.len() as f64)
}

/// `λ₁·L_keypoints + λ₂·L_semantic + λ₃·L_center`.
pub fn multi_task_loss(l_keypoints: f64, l_semantic: f64, l_center: f64, w: &LossWeights) -> f64 {
    w.lambda1 * l_keypoints + w.lambda2 * l_semantic + w.lambda3 * l_center
}
