//! GraphNet: two GCN encoder blocks, a global max-pool, a dense
//! classification head, and a two-block GCN segmentation head fed with
//! `[local | global]` node features.
//!
//! Forward passes record a [`ForwardTape`]; [`GraphNetModel::backward`]
//! replays it in reverse to produce exact gradients for every parameter.

mod checkpoint;
mod layers;
mod model;

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::GraphError;
use crate::matrix::Matrix;
use crate::real::{sqrt, Real};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::{global_max_pool, Activation, DenseLayer, GcnBlock, GcnLayer};
pub use model::{ForwardOutput, ForwardTape, Gradients};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("invalid model configuration: {0}")]
    Config(&'static str),
    #[error("{what}: expected {expected}, found {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input")]
    EmptyInput,
    #[error("tape was recorded by a model with a different configuration")]
    TapeMismatch,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Layer widths and switches. Each block lists its output widths in order,
/// so `enc_block1 = [64, 64]` means `in_features → 64 → 64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNetConfig {
    pub in_features: usize,
    pub enc_block1: Vec<usize>,
    pub enc_block2: Vec<usize>,
    /// Dense widths after `[global | aux]`; the last entry is the class count.
    pub cls_head: Vec<usize>,
    pub seg_block1: Vec<usize>,
    /// The last entry is the number of segmentation classes.
    pub seg_block2: Vec<usize>,
    pub n_aux: usize,
    /// Ignore edges everywhere (`A = 0`).
    pub pointnet_mode: bool,
    pub first_layer_only_adjacency: bool,
    /// Node count the model was trained for; `None` when unspecified.
    pub expected_nodes: Option<usize>,
}

impl GraphNetConfig {
    /// Published widths: encoder (64, 64) and (64, 128, 1024), classifier
    /// (512, 256, C_c), segmentation (512, 256, 128) and (128, C_s).
    pub fn standard(n_aux: usize, num_classes: usize, num_seg_classes: usize) -> Self {
        Self {
            in_features: 3,
            enc_block1: vec![64, 64],
            enc_block2: vec![64, 128, 1024],
            cls_head: vec![512, 256, num_classes],
            seg_block1: vec![512, 256, 128],
            seg_block2: vec![128, num_seg_classes],
            n_aux,
            pointnet_mode: false,
            first_layer_only_adjacency: true,
            expected_nodes: None,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.in_features == 0 {
            return Err(NnError::Config("in_features must be positive"));
        }
        let blocks = [&self.enc_block1, &self.enc_block2, &self.cls_head, &self.seg_block1, &self.seg_block2];
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(NnError::Config("every block needs at least one layer"));
        }
        if blocks.iter().any(|b| b.contains(&0)) {
            return Err(NnError::Config("layer widths must be positive"));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        *self.cls_head.last().unwrap()
    }

    pub fn num_seg_classes(&self) -> usize {
        *self.seg_block2.last().unwrap()
    }

    /// Width of the per-node local feature (output of the first encoder block).
    pub fn local_width(&self) -> usize {
        *self.enc_block1.last().unwrap()
    }

    /// Width of the pooled global feature.
    pub fn global_width(&self) -> usize {
        *self.enc_block2.last().unwrap()
    }

    /// Per-node width entering the segmentation head.
    pub fn seg_input_width(&self) -> usize {
        self.local_width() + self.global_width()
    }

    pub fn cls_input_width(&self) -> usize {
        self.global_width() + self.n_aux
    }

    /// `(fan_in, fan_out)` of every weight matrix in declaration order.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        let chain = |start: usize, widths: &[usize], shapes: &mut Vec<(usize, usize)>| {
            let mut fan_in = start;
            for &w in widths {
                shapes.push((fan_in, w));
                fan_in = w;
            }
        };
        chain(self.in_features, &self.enc_block1, &mut shapes);
        chain(self.local_width(), &self.enc_block2, &mut shapes);
        chain(self.cls_input_width(), &self.cls_head, &mut shapes);
        chain(self.seg_input_width(), &self.seg_block1, &mut shapes);
        chain(*self.seg_block1.last().unwrap(), &self.seg_block2, &mut shapes);
        shapes
    }
}

/// All learnable parameters of a GraphNet.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphNetModel {
    config: GraphNetConfig,
    pub enc_block1: GcnBlock,
    pub enc_block2: GcnBlock,
    pub cls_head: Vec<DenseLayer>,
    pub seg_block1: GcnBlock,
    pub seg_block2: GcnBlock,
    /// Fixed affine map `(aux − shift) · scale` applied before the
    /// classifier. Not trained; identity unless fitted.
    pub aux_shift: Vec<Real>,
    pub aux_scale: Vec<Real>,
}

impl GraphNetModel {
    /// Builds a model whose weights come from `weight(fan_in, fan_out)` in
    /// declaration order; biases start at zero.
    pub fn from_weight_fn(
        config: GraphNetConfig,
        mut weight: impl FnMut(usize, usize) -> Matrix,
    ) -> Result<Self, NnError> {
        config.validate()?;
        let shapes = config.weight_shapes();
        let mut it = shapes.into_iter().map(|(i, o)| weight(i, o));
        let mut take = |n: usize| -> Vec<Matrix> { (&mut it).take(n).collect() };
        let only_first = config.first_layer_only_adjacency;
        let enc_block1 = GcnBlock::from_weights(take(config.enc_block1.len()), Activation::Relu, only_first)?;
        let enc_block2 = GcnBlock::from_weights(take(config.enc_block2.len()), Activation::Relu, only_first)?;
        let n_cls = config.cls_head.len();
        let cls_head = take(n_cls)
            .into_iter()
            .enumerate()
            .map(|(l, w)| {
                let act = if l + 1 == n_cls { Activation::Identity } else { Activation::Relu };
                let bias = vec![0.0; w.cols()];
                DenseLayer::new(w, bias, act)
            })
            .collect();
        let seg_block1 = GcnBlock::from_weights(take(config.seg_block1.len()), Activation::Relu, only_first)?;
        let seg_block2 = GcnBlock::from_weights(take(config.seg_block2.len()), Activation::Identity, only_first)?;
        let n_aux = config.n_aux;
        Ok(Self {
            config,
            enc_block1,
            enc_block2,
            cls_head,
            seg_block1,
            seg_block2,
            aux_shift: vec![0.0; n_aux],
            aux_scale: vec![1.0; n_aux],
        })
    }

    /// Glorot-uniform weights, zero biases, deterministic in `seed`.
    pub fn init(config: GraphNetConfig, seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_weight_fn(config, |fan_in, fan_out| {
            let limit = sqrt(6.0 / (fan_in + fan_out) as Real);
            Matrix::from_fn(fan_in, fan_out, |_, _| rng.gen_range(-limit..=limit))
        })
    }

    /// Same architecture with every parameter zero.
    pub fn zeros_like(&self) -> Self {
        let mut m = self.clone();
        m.tensors_mut().into_iter().for_each(|t| t.iter_mut().for_each(|v| *v = 0.0));
        m
    }

    pub fn config(&self) -> &GraphNetConfig {
        &self.config
    }

    pub fn n_aux(&self) -> usize {
        self.config.n_aux
    }

    pub fn pointnet_mode(&self) -> bool {
        self.config.pointnet_mode
    }

    pub fn set_pointnet_mode(&mut self, on: bool) {
        self.config.pointnet_mode = on;
    }

    pub fn set_expected_nodes(&mut self, n: Option<usize>) {
        self.config.expected_nodes = n;
    }

    /// Every parameter tensor in declaration order: encoder weights, then
    /// classifier `(W, b)` pairs, then segmentation weights.
    pub fn tensors(&self) -> Vec<&[Real]> {
        let mut out: Vec<&[Real]> = Vec::new();
        out.extend(self.enc_block1.layers.iter().map(|l| l.weight.as_slice()));
        out.extend(self.enc_block2.layers.iter().map(|l| l.weight.as_slice()));
        for d in &self.cls_head {
            out.push(d.weight.as_slice());
            out.push(&d.bias);
        }
        out.extend(self.seg_block1.layers.iter().map(|l| l.weight.as_slice()));
        out.extend(self.seg_block2.layers.iter().map(|l| l.weight.as_slice()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [Real]> {
        let mut out: Vec<&mut [Real]> = Vec::new();
        out.extend(self.enc_block1.layers.iter_mut().map(|l| l.weight.as_mut_slice()));
        out.extend(self.enc_block2.layers.iter_mut().map(|l| l.weight.as_mut_slice()));
        for d in self.cls_head.iter_mut() {
            out.push(d.weight.as_mut_slice());
            out.push(&mut d.bias);
        }
        out.extend(self.seg_block1.layers.iter_mut().map(|l| l.weight.as_mut_slice()));
        out.extend(self.seg_block2.layers.iter_mut().map(|l| l.weight.as_mut_slice()));
        out
    }

    /// Sets the auxiliary map to z-scores over `rows` (population standard
    /// deviation). Constant features are only centred.
    pub fn fit_aux_standardization<'a>(&mut self, rows: impl IntoIterator<Item = &'a [Real]>) -> Result<(), NnError> {
        let k = self.config.n_aux;
        let mut sum = vec![0.0; k];
        let mut sq = vec![0.0; k];
        let mut count = 0usize;
        let rows: Vec<&[Real]> = rows.into_iter().collect();
        for r in &rows {
            if r.len() != k {
                return Err(NnError::Dimension { what: "auxiliary feature count", expected: k, found: r.len() });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite("auxiliary features"));
            }
            r.iter().zip(sum.iter_mut()).for_each(|(v, s)| *s += v);
            count += 1;
        }
        if count == 0 {
            return Err(NnError::EmptyInput);
        }
        let mean: Vec<Real> = sum.iter().map(|s| s / count as Real).collect();
        for r in &rows {
            for j in 0..k {
                let d = r[j] - mean[j];
                sq[j] += d * d;
            }
        }
        self.aux_scale = sq
            .iter()
            .map(|s| {
                let sd = sqrt(s / count as Real);
                if sd > 1e-12 { 1.0 / sd } else { 1.0 }
            })
            .collect();
        self.aux_shift = mean;
        Ok(())
    }

    pub fn set_aux_standardization(&mut self, shift: Vec<Real>, scale: Vec<Real>) -> Result<(), NnError> {
        let k = self.config.n_aux;
        for v in [&shift, &scale] {
            if v.len() != k {
                return Err(NnError::Dimension { what: "auxiliary feature count", expected: k, found: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(NnError::NonFinite("auxiliary standardization"));
            }
        }
        self.aux_shift = shift;
        self.aux_scale = scale;
        Ok(())
    }

    /// The auxiliary vector as the classifier sees it.
    pub fn standardize_aux(&self, aux: &[Real]) -> Vec<Real> {
        aux.iter().zip(self.aux_shift.iter().zip(&self.aux_scale)).map(|(a, (m, s))| (a - m) * s).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_widths() {
        let c = GraphNetConfig::standard(35, 2, 2);
        assert_eq!(c.seg_input_width(), 1088);
        assert_eq!(c.cls_input_width(), 1059);
        let m = GraphNetModel::init(c, 1).unwrap();
        assert_eq!(m.seg_block1.layers[0].in_features(), 1088);
        assert_eq!(m.cls_head[0].in_features(), 1059);
        assert_eq!(m.cls_head.last().unwrap().activation, Activation::Identity);
        assert_eq!(m.seg_block2.layers.last().unwrap().activation, Activation::Identity);
        assert_eq!(m.enc_block2.layers.last().unwrap().out_features(), 1024);
        for b in [&m.enc_block1, &m.enc_block2, &m.seg_block1, &m.seg_block2] {
            assert!(b.layers[0].use_adjacency);
            assert!(b.layers[1..].iter().all(|l| !l.use_adjacency));
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let c = GraphNetConfig::standard(35, 2, 2);
        let a = GraphNetModel::init(c.clone(), 9).unwrap();
        let b = GraphNetModel::init(c.clone(), 9).unwrap();
        let other = GraphNetModel::init(c, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.enc_block1.layers[0].weight, other.enc_block1.layers[0].weight);
        let w = &a.enc_block1.layers[1].weight;
        assert_eq!(w.shape(), (64, 64));
        let bound = sqrt(6.0 / 128.0);
        assert!(w.as_slice().iter().all(|v| v.abs() <= bound));
        assert!(a.cls_head.iter().all(|d| d.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn aux_standardization() {
        let mut m = GraphNetModel::init(GraphNetConfig::standard(3, 2, 2), 1).unwrap();
        assert_eq!(m.standardize_aux(&[1.0, -2.0, 3.0]), vec![1.0, -2.0, 3.0]);
        let rows = [[1.0, 5.0, 0.0], [3.0, 5.0, 2.0]];
        m.fit_aux_standardization(rows.iter().map(|r| &r[..])).unwrap();
        assert_eq!(m.aux_shift, vec![2.0, 5.0, 1.0]);
        assert_eq!(m.standardize_aux(&rows[0]), vec![-1.0, 0.0, -1.0]);
        assert_eq!(m.standardize_aux(&rows[1]), vec![1.0, 0.0, 1.0]);
        assert!(m.fit_aux_standardization([&[1.0][..]]).is_err());
        assert!(m.fit_aux_standardization(core::iter::empty()).is_err());
    }

    #[test]
    fn rejects_empty_blocks() {
        let mut c = GraphNetConfig::standard(0, 2, 2);
        c.seg_block2.clear();
        assert!(matches!(GraphNetModel::init(c, 0), Err(NnError::Config(_))));
    }
}
