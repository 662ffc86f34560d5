//! Losses, Adam, and the joint classification + segmentation training loop.

mod adam;
mod loss;

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::LabeledSample;
use crate::graph::{normalize_adjacency, NormalizedAdjacency};
use crate::nn::{GraphNetModel, Gradients, NnError};
use crate::real::Real;

pub use adam::{AdamConfig, OptimizerError, OptimizerState};
pub use loss::{argmax_rows, joint_loss, soft_dice_loss, softmax, softmax_cross_entropy, two_class_dice_loss, JointLoss, LossConfig, LossError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("sample {sample} has {found} nodes, expected {expected}")]
    NodeCount { sample: usize, expected: usize, found: usize },
    #[error("non-finite loss or gradient at epoch {epoch} on sample {sample}")]
    NonFinite { epoch: usize, sample: usize },
    #[error("sample {sample}: {source}")]
    Model { sample: usize, source: NnError },
    #[error("sample {sample}: {source}")]
    Loss { sample: usize, source: LossError },
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    /// Fit the model's auxiliary z-scoring to the training set before the
    /// first epoch.
    pub standardize_aux: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { batch_size: 32, epochs: 100, seed: 0, shuffle: true, standardize_aux: true }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1"));
        }
        Ok(())
    }
}

/// One row of the training log. Epochs count from 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: Real,
    pub mean_ce: Real,
    pub mean_dsc_loss: Real,
    pub total: Real,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str = "epoch,lr,mean_ce,mean_dsc_loss,total";
}

/// Normalised adjacency for every sample, or `None` everywhere in PointNet mode.
pub fn prepare_adjacency(model: &GraphNetModel, data: &[LabeledSample]) -> Result<Vec<Option<NormalizedAdjacency>>, TrainError> {
    data.iter()
        .enumerate()
        .map(|(i, s)| {
            if model.pointnet_mode() {
                Ok(None)
            } else {
                normalize_adjacency(s.graph.adjacency())
                    .map(Some)
                    .map_err(|e| TrainError::Model { sample: i, source: e.into() })
            }
        })
        .collect()
}

/// Joint loss of one sample and its parameter gradients.
pub fn sample_gradients(
    model: &GraphNetModel,
    sample: &LabeledSample,
    adj: Option<&NormalizedAdjacency>,
    loss_cfg: &LossConfig,
) -> Result<(JointLoss, Gradients), TrainError> {
    let mut grads = Gradients::zeros_like(model);
    let loss = sample_loss(model, sample, adj, loss_cfg, &mut grads)?;
    Ok((loss, grads))
}

fn with_sample(e: TrainError, sample: usize) -> TrainError {
    match e {
        TrainError::Model { source, .. } => TrainError::Model { sample, source },
        TrainError::Loss { source, .. } => TrainError::Loss { sample, source },
        other => other,
    }
}

/// Mini-batch Adam on the summed loss. Gradients are averaged over each
/// batch in batch order; the last short batch is kept. `observer` sees
/// every epoch's log and the model after that epoch.
pub fn train(
    model: &mut GraphNetModel,
    data: &[LabeledSample],
    cfg: &TrainConfig,
    loss_cfg: &LossConfig,
    adam: &AdamConfig,
    mut observer: impl FnMut(&EpochLog, &GraphNetModel),
) -> Result<Vec<EpochLog>, TrainError> {
    cfg.validate()?;
    loss_cfg.validate().map_err(|source| TrainError::Loss { sample: 0, source })?;
    adam.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let n = data[0].num_nodes();
    if let Some((i, s)) = data.iter().enumerate().find(|(_, s)| s.num_nodes() != n) {
        return Err(TrainError::NodeCount { sample: i, expected: n, found: s.num_nodes() });
    }
    if cfg.standardize_aux {
        model
            .fit_aux_standardization(data.iter().map(|s| &s.aux[..]))
            .map_err(|source| TrainError::Model { sample: 0, source })?;
    }
    let adjacency = prepare_adjacency(model, data)?;
    let mut state = OptimizerState::new(*adam, model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut logs = Vec::with_capacity(cfg.epochs);
    let mut acc = Gradients::zeros_like(model);

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let lr = adam.lr_at(epoch);
        let mut ce_sum = 0.0;
        let mut dsc_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            acc.fill_zero();
            let losses = batch_gradients(model, data, &adjacency, batch, loss_cfg, &mut acc)?;
            for (&i, loss) in batch.iter().zip(&losses) {
                if !loss.total.is_finite() {
                    return Err(TrainError::NonFinite { epoch, sample: i });
                }
                ce_sum += loss.ce;
                dsc_sum += loss.dsc;
            }
            if !acc.is_finite() {
                let culprit = batch
                    .iter()
                    .copied()
                    .find(|&i| {
                        sample_gradients(model, &data[i], adjacency[i].as_ref(), loss_cfg)
                            .map_or(true, |(_, g)| !g.is_finite())
                    })
                    .unwrap_or(batch[0]);
                return Err(TrainError::NonFinite { epoch, sample: culprit });
            }
            acc.scale(1.0 / batch.len() as Real);
            state.step(model, &acc, lr)?;
        }
        let count = data.len() as Real;
        let mean_ce = ce_sum / count;
        let mean_dsc_loss = dsc_sum / count;
        let log = EpochLog {
            epoch,
            lr,
            mean_ce,
            mean_dsc_loss,
            total: loss_cfg.cls_weight * mean_ce + loss_cfg.seg_weight * mean_dsc_loss,
        };
        observer(&log, model);
        logs.push(log);
    }
    Ok(logs)
}

fn sample_loss(
    model: &GraphNetModel,
    sample: &LabeledSample,
    adj: Option<&NormalizedAdjacency>,
    loss_cfg: &LossConfig,
    acc: &mut Gradients,
) -> Result<JointLoss, TrainError> {
    let model_err = |source| TrainError::Model { sample: 0, source };
    let out = model.forward(sample.graph.features(), adj, &sample.aux).map_err(model_err)?;
    let loss = joint_loss(&out.cls_scores, sample.graph_label, &out.seg_scores, &sample.node_labels, loss_cfg)
        .map_err(|source| TrainError::Loss { sample: 0, source })?;
    model.backward_accumulate(&out.tape, &loss.d_cls, &loss.d_seg, acc).map_err(model_err)?;
    Ok(loss)
}

/// Sums the gradients of `batch` into `acc` in batch order.
#[cfg(not(feature = "parallel"))]
fn batch_gradients(
    model: &GraphNetModel,
    data: &[LabeledSample],
    adjacency: &[Option<NormalizedAdjacency>],
    batch: &[usize],
    loss_cfg: &LossConfig,
    acc: &mut Gradients,
) -> Result<Vec<JointLoss>, TrainError> {
    batch
        .iter()
        .map(|&i| sample_loss(model, &data[i], adjacency[i].as_ref(), loss_cfg, acc).map_err(|e| with_sample(e, i)))
        .collect()
}

/// Per-sample gradients run in parallel and are reduced in batch order.
#[cfg(feature = "parallel")]
fn batch_gradients(
    model: &GraphNetModel,
    data: &[LabeledSample],
    adjacency: &[Option<NormalizedAdjacency>],
    batch: &[usize],
    loss_cfg: &LossConfig,
    acc: &mut Gradients,
) -> Result<Vec<JointLoss>, TrainError> {
    use rayon::prelude::*;
    let results: Vec<(JointLoss, Gradients)> = batch
        .par_iter()
        .map(|&i| sample_gradients(model, &data[i], adjacency[i].as_ref(), loss_cfg).map_err(|e| with_sample(e, i)))
        .collect::<Result<_, _>>()?;
    let mut losses = Vec::with_capacity(results.len());
    for (loss, g) in results {
        acc.add_assign(&g);
        losses.push(loss);
    }
    Ok(losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{SparseAdjacency, SurfaceGraph};
    use crate::matrix::Matrix;
    use crate::nn::GraphNetConfig;
    use alloc::vec;

    fn tiny_config() -> GraphNetConfig {
        GraphNetConfig {
            in_features: 3,
            enc_block1: vec![8, 8],
            enc_block2: vec![8, 16],
            cls_head: vec![8, 2],
            seg_block1: vec![8],
            seg_block2: vec![8, 2],
            n_aux: 1,
            pointnet_mode: false,
            first_layer_only_adjacency: true,
            expected_nodes: None,
        }
    }

    fn sample(label: usize, n: usize) -> LabeledSample {
        let x = Matrix::from_fn(n, 3, |i, j| ((i * 7 + j * 3 + label * 5) as Real * 0.61).sin());
        let a = SparseAdjacency::from_undirected_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap();
        let labels = (0..n).map(|i| (i < n / 2) as u8).collect();
        LabeledSample::new(SurfaceGraph::new(x, a).unwrap(), label, labels, vec![label as Real], vec![]).unwrap()
    }

    #[test]
    fn loss_decreases_and_is_reproducible() {
        let data: Vec<_> = (0..4).map(|i| sample(i % 2, 10)).collect();
        let cfg = TrainConfig { batch_size: 3, epochs: 30, seed: 5, ..Default::default() };
        let run = || {
            let mut m = GraphNetModel::init(tiny_config(), 1).unwrap();
            let adam = AdamConfig { base_lr: 0.01, ..Default::default() };
            let logs = train(&mut m, &data, &cfg, &LossConfig::default(), &adam, |_, _| {}).unwrap();
            (logs, m)
        };
        let (a, ma) = run();
        let (b, mb) = run();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        assert!(a.last().unwrap().total < a[0].total);
        assert_eq!(a.len(), 30);
    }

    #[test]
    fn oversized_batch_and_errors() {
        let data: Vec<_> = (0..3).map(|i| sample(i % 2, 6)).collect();
        let mut m = GraphNetModel::init(tiny_config(), 1).unwrap();
        let cfg = TrainConfig { batch_size: 64, epochs: 2, seed: 0, shuffle: false, ..Default::default() };
        let mut seen = 0;
        train(&mut m, &data, &cfg, &LossConfig::default(), &AdamConfig::default(), |_, _| seen += 1).unwrap();
        assert_eq!(seen, 2);
        assert_eq!(train(&mut m, &[], &cfg, &LossConfig::default(), &AdamConfig::default(), |_, _| {}), Err(TrainError::EmptyDataset));
        let mixed = vec![sample(0, 6), sample(1, 7)];
        assert!(matches!(
            train(&mut m, &mixed, &cfg, &LossConfig::default(), &AdamConfig::default(), |_, _| {}),
            Err(TrainError::NodeCount { sample: 1, .. })
        ));
    }

    #[test]
    fn nan_weights_name_the_sample() {
        let data: Vec<_> = (0..3).map(|i| sample(i % 2, 6)).collect();
        let mut m = GraphNetModel::init(tiny_config(), 1).unwrap();
        m.cls_head[0].bias[0] = Real::NAN;
        let cfg = TrainConfig { batch_size: 2, epochs: 1, seed: 0, shuffle: false, ..Default::default() };
        let err = train(&mut m, &data, &cfg, &LossConfig::default(), &AdamConfig::default(), |_, _| {}).unwrap_err();
        assert_eq!(err, TrainError::NonFinite { epoch: 0, sample: 0 });
    }
}
