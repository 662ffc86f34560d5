use alloc::vec::Vec;

use thiserror::Error;

use crate::matrix::Matrix;
use crate::real::{exp, ln, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("segmentation scores have {found} columns, dice loss needs 2")]
    SegClasses { found: usize },
    #[error("{scores} score rows but {labels} node labels")]
    LabelCount { scores: usize, labels: usize },
    #[error("invalid loss configuration: {0}")]
    Config(&'static str),
}

/// Weights of the two loss terms and dice smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub cls_weight: Real,
    pub seg_weight: Real,
    pub dsc_smooth: Real,
    /// Average the foreground dice with the background dice. With the
    /// foreground term alone, predicting every node as foreground is a
    /// saturating fixed point that Adam drives into within a few epochs.
    pub dice_background: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { cls_weight: 1.0, seg_weight: 1.0, dsc_smooth: 1.0, dice_background: true }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.cls_weight >= 0.0) || !(self.seg_weight >= 0.0) {
            return Err(LossError::Config("loss weights must be nonnegative"));
        }
        if !(self.dsc_smooth > 0.0) {
            return Err(LossError::Config("dice smoothing must be positive"));
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[Real]) -> Vec<Real> {
    let max = scores.iter().copied().fold(Real::NEG_INFINITY, Real::max);
    let mut p: Vec<Real> = scores.iter().map(|&s| exp(s - max)).collect();
    let z: Real = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

/// Returns `(−log softmax(scores)[label], softmax − one_hot)`.
pub fn softmax_cross_entropy(scores: &[Real], label: usize) -> Result<(Real, Vec<Real>), LossError> {
    if label >= scores.len() {
        return Err(LossError::Label { label, classes: scores.len() });
    }
    let max = scores.iter().copied().fold(Real::NEG_INFINITY, Real::max);
    let z: Real = scores.iter().map(|&s| exp(s - max)).sum();
    let loss = ln(z) - (scores[label] - max);
    let mut grad = softmax(scores);
    grad[label] -= 1.0;
    // Rounding can leave a tiny negative value when the label dominates.
    Ok((if loss < 0.0 { 0.0 } else { loss }, grad))
}

fn check_seg_shape(seg_scores: &Matrix, node_labels: &[u8]) -> Result<(), LossError> {
    if seg_scores.cols() != 2 {
        return Err(LossError::SegClasses { found: seg_scores.cols() });
    }
    if node_labels.len() != seg_scores.rows() {
        return Err(LossError::LabelCount { scores: seg_scores.rows(), labels: node_labels.len() });
    }
    Ok(())
}

/// Class-1 probability of each row, as a logistic of the score difference.
fn foreground_probability(seg_scores: &Matrix) -> Vec<Real> {
    (0..seg_scores.rows())
        .map(|i| {
            let r = seg_scores.row(i);
            1.0 / (1.0 + exp(r[0] - r[1]))
        })
        .collect()
}

/// Dice loss of probabilities `p` against `target(i)` and `∂loss/∂p`.
fn dice_terms(p: &[Real], target: impl Fn(usize) -> Real, smooth: Real) -> (Real, Vec<Real>) {
    let mut inter = 0.0;
    let mut sum_p = 0.0;
    let mut sum_g = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        let g = target(i);
        inter += pi * g;
        sum_p += pi;
        sum_g += g;
    }
    let num = 2.0 * inter + smooth;
    let den = sum_p + sum_g + smooth;
    let dl_dp = (0..p.len()).map(|i| -(2.0 * target(i) * den - num) / (den * den)).collect();
    (1.0 - num / den, dl_dp)
}

/// Soft dice on the foreground (class 1) probability of an `N x 2` score
/// matrix: `1 − (2 Σ p g + ε) / (Σ p + Σ g + ε)`.
pub fn soft_dice_loss(seg_scores: &Matrix, node_labels: &[u8], smooth: Real) -> Result<(Real, Matrix), LossError> {
    check_seg_shape(seg_scores, node_labels)?;
    let p = foreground_probability(seg_scores);
    let (loss, dl_dp) = dice_terms(&p, |i| node_labels[i] as Real, smooth);
    let mut grad = Matrix::zeros(p.len(), 2);
    for i in 0..p.len() {
        let d = dl_dp[i] * p[i] * (1.0 - p[i]);
        grad[(i, 1)] = d;
        grad[(i, 0)] = -d;
    }
    Ok((loss, grad))
}

/// Mean of the foreground soft dice and the background soft dice
/// (computed on `1 − p` against `1 − g`).
pub fn two_class_dice_loss(seg_scores: &Matrix, node_labels: &[u8], smooth: Real) -> Result<(Real, Matrix), LossError> {
    check_seg_shape(seg_scores, node_labels)?;
    let p = foreground_probability(seg_scores);
    let (fg, d_fg) = dice_terms(&p, |i| node_labels[i] as Real, smooth);
    let q: Vec<Real> = p.iter().map(|&v| 1.0 - v).collect();
    let (bg, d_bg) = dice_terms(&q, |i| 1.0 - node_labels[i] as Real, smooth);
    let mut grad = Matrix::zeros(p.len(), 2);
    for i in 0..p.len() {
        // dq/dp = -1
        let d = 0.5 * (d_fg[i] - d_bg[i]) * p[i] * (1.0 - p[i]);
        grad[(i, 1)] = d;
        grad[(i, 0)] = -d;
    }
    Ok((0.5 * (fg + bg), grad))
}

/// Weighted loss of one sample with upstream gradients for both heads.
#[derive(Debug, Clone)]
pub struct JointLoss {
    pub total: Real,
    pub ce: Real,
    pub dsc: Real,
    pub d_cls: Vec<Real>,
    pub d_seg: Matrix,
}

pub fn joint_loss(
    cls_scores: &[Real],
    label: usize,
    seg_scores: &Matrix,
    node_labels: &[u8],
    cfg: &LossConfig,
) -> Result<JointLoss, LossError> {
    let (ce, mut d_cls) = softmax_cross_entropy(cls_scores, label)?;
    let (dsc, mut d_seg) = if cfg.dice_background {
        two_class_dice_loss(seg_scores, node_labels, cfg.dsc_smooth)?
    } else {
        soft_dice_loss(seg_scores, node_labels, cfg.dsc_smooth)?
    };
    d_cls.iter_mut().for_each(|v| *v *= cfg.cls_weight);
    d_seg.scale(cfg.seg_weight);
    Ok(JointLoss { total: cfg.cls_weight * ce + cfg.seg_weight * dsc, ce, dsc, d_cls, d_seg })
}

/// Per-sample class index predictions from `N x C` scores.
pub fn argmax_rows(scores: &Matrix) -> Vec<u8> {
    (0..scores.rows())
        .map(|i| {
            let r = scores.row(i);
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best as u8
        })
        .collect()
}
