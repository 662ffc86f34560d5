//! Classification and segmentation metrics: ROC/AUC, Youden operating
//! point, accuracy and node-level dice.

use alloc::vec::Vec;

use thiserror::Error;

use crate::dataset::LabeledSample;
use crate::nn::{GraphNetModel, NnError};
use crate::real::Real;
use crate::train::{argmax_rows, softmax};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("ROC needs both classes; got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },
    #[error("{0} scores but {1} labels")]
    Length(usize, usize),
    #[error("label {0} is not 0 or 1")]
    Label(u8),
    #[error("score {0} is not finite")]
    NonFinite(usize),
    #[error("evaluation set is empty")]
    Empty,
    #[error("ROC evaluation needs a two-class model, this one has {0} classes")]
    NotBinary(usize),
    #[error("sample {sample}: {source}")]
    Model { sample: usize, source: NnError },
}

/// One threshold of the sweep; a sample is called positive when its score
/// is at least `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: Real,
    pub sensitivity: Real,
    pub specificity: Real,
    pub true_positives: usize,
    pub false_positives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Descending thresholds from `+inf` to `-inf`.
    pub points: Vec<RocPoint>,
    pub auc: Real,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: Real,
    pub sensitivity: Real,
    pub specificity: Real,
    pub accuracy: Real,
}

/// ROC over every distinct score plus the two infinite thresholds. The
/// trapezoid area is accumulated in integer counts, so it equals the
/// Mann–Whitney statistic with ties counted one half.
pub fn roc_auc(scores: &[Real], labels: &[u8]) -> Result<RocCurve, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::Length(scores.len(), labels.len()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(MetricsError::Label(l));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass { positives, negatives });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let point = |threshold, tp: usize, fp: usize| RocPoint {
        threshold,
        sensitivity: tp as Real / positives as Real,
        specificity: (negatives - fp) as Real / negatives as Real,
        true_positives: tp,
        false_positives: fp,
    };
    let mut points = Vec::with_capacity(scores.len() + 2);
    points.push(point(Real::INFINITY, 0, 0));
    let (mut tp, mut fp) = (0usize, 0usize);
    // Twice the area, scaled by positives * negatives.
    let mut area2: u128 = 0;
    let mut k = 0;
    while k < order.len() {
        let t = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == t {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area2 += ((fp - fp0) as u128) * ((tp + tp0) as u128);
        points.push(point(t, tp, fp));
    }
    points.push(point(Real::NEG_INFINITY, positives, negatives));
    let auc = area2 as Real / (2 * positives as u128 * negatives as u128) as Real;
    Ok(RocCurve { points, auc, positives, negatives })
}

/// Maximiser of `sensitivity + specificity − 1`, compared exactly on counts;
/// ties go to the higher specificity, then to the higher threshold.
pub fn youden_point(curve: &RocCurve) -> OperatingPoint {
    let (p, n) = (curve.positives as u128, curve.negatives as u128);
    let key = |pt: &RocPoint| {
        let tn = (curve.negatives - pt.false_positives) as u128;
        (pt.true_positives as u128 * n + tn * p, tn)
    };
    let mut best = &curve.points[0];
    for pt in &curve.points[1..] {
        if key(pt) > key(best) {
            best = pt;
        }
    }
    let total = (curve.positives + curve.negatives) as Real;
    let tn = curve.negatives - best.false_positives;
    OperatingPoint {
        threshold: best.threshold,
        sensitivity: best.sensitivity,
        specificity: best.specificity,
        accuracy: (best.true_positives + tn) as Real / total,
    }
}

/// Accuracy implied by an operating point on a set with the given class counts.
pub fn accuracy_at(sensitivity: Real, specificity: Real, positives: usize, negatives: usize) -> Real {
    (sensitivity * positives as Real + specificity * negatives as Real) / (positives + negatives) as Real
}

/// `2|P ∩ G| / (|P| + |G|)`, and 1 when both masks are empty.
pub fn node_dsc(pred: &[u8], truth: &[u8]) -> Result<Real, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::Length(pred.len(), truth.len()));
    }
    let (mut inter, mut np, mut ng) = (0usize, 0usize, 0usize);
    for (&a, &b) in pred.iter().zip(truth) {
        if a > 1 || b > 1 {
            return Err(MetricsError::Label(a.max(b)));
        }
        let (a, b) = (a == 1, b == 1);
        inter += (a && b) as usize;
        np += a as usize;
        ng += b as usize;
    }
    if np + ng == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as Real / (np + ng) as Real)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Accuracy when class 1 is predicted at probability >= 0.5.
    pub accuracy: Real,
    pub roc: RocCurve,
    pub youden: OperatingPoint,
    pub mean_node_dsc: Real,
    pub per_sample_dsc: Vec<Real>,
    /// Class-1 probability per sample.
    pub scores: Vec<Real>,
    pub labels: Vec<u8>,
    /// Mean wall-clock time of one forward pass, milliseconds.
    pub mean_latency_ms: Real,
}

impl EvalReport {
    /// Equality ignoring the latency measurement.
    pub fn same_results(&self, other: &EvalReport) -> bool {
        let strip = |r: &EvalReport| EvalReport { mean_latency_ms: 0.0, ..r.clone() };
        strip(self) == strip(other)
    }
}

/// Per-sample class-1 probability and node labels of one forward pass.
pub fn predict(model: &GraphNetModel, sample: &LabeledSample) -> Result<(Vec<Real>, Vec<u8>), NnError> {
    let out = model.forward_graph(&sample.graph, &sample.aux)?;
    Ok((softmax(&out.cls_scores), argmax_rows(&out.seg_scores)))
}

/// Runs the model over `data`. `clock` returns a monotonic time in
/// milliseconds; each forward pass (adjacency normalisation included) is timed,
/// after one untimed warm-up pass on the first sample.
pub fn evaluate(
    model: &GraphNetModel,
    data: &[LabeledSample],
    mut clock: impl FnMut() -> f64,
) -> Result<EvalReport, MetricsError> {
    if data.is_empty() {
        return Err(MetricsError::Empty);
    }
    if model.config().num_classes() != 2 {
        return Err(MetricsError::NotBinary(model.config().num_classes()));
    }
    let mut scores = Vec::with_capacity(data.len());
    let mut labels = Vec::with_capacity(data.len());
    let mut per_sample_dsc = Vec::with_capacity(data.len());
    let mut elapsed = 0.0;
    let mut correct = 0usize;
    model.forward_graph(&data[0].graph, &data[0].aux).map_err(|source| MetricsError::Model { sample: 0, source })?;
    for (i, s) in data.iter().enumerate() {
        let t0 = clock();
        let out = model.forward_graph(&s.graph, &s.aux).map_err(|source| MetricsError::Model { sample: i, source })?;
        elapsed += clock() - t0;
        let p1 = softmax(&out.cls_scores)[1];
        let label = (s.graph_label == 1) as u8;
        correct += ((p1 >= 0.5) == (label == 1)) as usize;
        scores.push(p1);
        labels.push(label);
        per_sample_dsc.push(node_dsc(&argmax_rows(&out.seg_scores), &s.node_labels)?);
    }
    let roc = roc_auc(&scores, &labels)?;
    let youden = youden_point(&roc);
    let count = data.len() as Real;
    Ok(EvalReport {
        accuracy: correct as Real / count,
        youden,
        mean_node_dsc: per_sample_dsc.iter().sum::<Real>() / count,
        per_sample_dsc,
        scores,
        labels,
        mean_latency_ms: (elapsed / data.len() as f64) as Real,
        roc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_and_tied() {
        let c = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(c.auc, 1.0);
        let y = youden_point(&c);
        assert_eq!((y.sensitivity, y.specificity, y.threshold), (1.0, 1.0, 0.8));
        let c = roc_auc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap();
        assert_eq!(c.auc, 0.5);
        assert_eq!(c.points.len(), 3);
    }

    #[test]
    fn curve_shape() {
        let c = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!(c.points.len(), 6);
        assert_eq!(c.points[0].sensitivity, 0.0);
        assert_eq!(c.points.last().unwrap().sensitivity, 1.0);
        assert!(c.points.windows(2).all(|w| w[0].threshold > w[1].threshold));
        assert_eq!(c.auc, 0.75);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(MetricsError::SingleClass { .. })));
    }

    #[test]
    fn dice_examples() {
        assert_eq!(node_dsc(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(node_dsc(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        let p = [0, 1, 1, 1, 0, 0];
        let g = [0, 0, 1, 1, 1, 0];
        assert!((node_dsc(&p, &g).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(node_dsc(&[0, 0], &[0, 0]).unwrap(), 1.0);
        assert!(node_dsc(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn reported_operating_points_fit_one_test_split() {
        // Three (sensitivity, specificity, accuracy) triples measured on the
        // same 234 test surfaces must agree on the positive count.
        let reported = [(0.746, 0.629, 0.662), (0.717, 0.808, 0.782), (0.717, 0.862, 0.821)];
        let fits: Vec<usize> = (1..234)
            .filter(|&p| reported.iter().all(|&(se, sp, acc)| (accuracy_at(se, sp, p, 234 - p) - acc).abs() < 5e-4))
            .collect();
        assert!(fits.contains(&66), "{fits:?}");
        let acc: Vec<Real> = reported.iter().map(|&(se, sp, _)| accuracy_at(se, sp, 66, 168)).collect();
        assert!((acc[2] - 0.8211).abs() < 1e-4);
        assert!(acc[0] < acc[1] && acc[1] < acc[2]);
    }

    #[test]
    fn youden_tie_prefers_specificity() {
        // Thresholds 0.9 and 0.7 both give J = 0.5.
        let c = roc_auc(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap();
        let j: Vec<Real> = c.points.iter().map(|p| p.sensitivity + p.specificity - 1.0).collect();
        let y = youden_point(&c);
        assert!(j.iter().all(|&v| v <= y.sensitivity + y.specificity - 1.0 + 1e-12));
        let best = j.iter().cloned().fold(Real::MIN, Real::max);
        let tied_specs: Vec<Real> = c
            .points
            .iter()
            .zip(&j)
            .filter(|(_, &v)| (v - best).abs() < 1e-12)
            .map(|(p, _)| p.specificity)
            .collect();
        assert_eq!(y.specificity, tied_specs.iter().cloned().fold(Real::MIN, Real::max));
        assert_eq!((y.threshold, y.accuracy), (0.9, 0.75));
    }
}
