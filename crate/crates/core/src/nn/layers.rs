use alloc::vec::Vec;

use super::NnError;
use crate::graph::{spmm, NormalizedAdjacency};
use crate::matrix::{gemm, Matrix};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Raw scores.
    Identity,
}

impl Activation {
    #[inline]
    pub(crate) fn apply(self, xs: &mut [Real]) {
        if self == Activation::Relu {
            for v in xs.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
    }

    /// Zeroes `grad` where the recorded output had zero slope.
    #[inline]
    pub(crate) fn gate(self, output: &[Real], grad: &mut [Real]) {
        if self == Activation::Relu {
            for (g, &o) in grad.iter_mut().zip(output) {
                if !(o > 0.0) {
                    *g = 0.0;
                }
            }
        }
    }
}

/// One graph convolution `σ(Â X W)`; `use_adjacency = false` gives `σ(X W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    pub weight: Matrix,
    pub activation: Activation,
    pub use_adjacency: bool,
}

impl GcnLayer {
    pub fn new(weight: Matrix, activation: Activation, use_adjacency: bool) -> Self {
        Self { weight, activation, use_adjacency }
    }

    pub fn in_features(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_features(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub(crate) fn propagation<'a>(&self, adj: Option<&'a NormalizedAdjacency>) -> Option<&'a NormalizedAdjacency> {
        if self.use_adjacency {
            adj
        } else {
            None
        }
    }

    /// `adj = None` stands for a graph without edges, where `Â = I`.
    pub fn forward(&self, adj: Option<&NormalizedAdjacency>, x: &Matrix) -> Result<Matrix, NnError> {
        if x.cols() != self.in_features() {
            return Err(NnError::Dimension { what: "gcn input width", expected: self.in_features(), found: x.cols() });
        }
        let mut z = match self.propagation(adj) {
            None => x.matmul(&self.weight),
            Some(a) => {
                check_nodes(a, x.rows())?;
                // Multiply on the narrower side of the weight.
                if self.in_features() <= self.out_features() {
                    spmm(a, x)?.matmul(&self.weight)
                } else {
                    spmm(a, &x.matmul(&self.weight))?
                }
            }
        };
        self.activation.apply(z.as_mut_slice());
        Ok(z)
    }

    /// Adds this layer's weight gradient to `d_weight` and returns `dX` when requested.
    pub(crate) fn backward(
        &self,
        adj: Option<&NormalizedAdjacency>,
        input: &Matrix,
        output: &Matrix,
        mut d_output: Matrix,
        d_weight: &mut Matrix,
        want_input_grad: bool,
    ) -> Result<Option<Matrix>, NnError> {
        self.activation.gate(output.as_slice(), d_output.as_mut_slice());
        let g = match self.propagation(adj) {
            Some(a) => spmm(a, &d_output)?,
            None => d_output,
        };
        gemm(input, true, &g, false, d_weight, true);
        Ok(want_input_grad.then(|| g.matmul_t(&self.weight)))
    }
}

pub(crate) fn check_nodes(a: &NormalizedAdjacency, n: usize) -> Result<(), NnError> {
    if a.num_nodes() != n {
        return Err(NnError::Dimension { what: "adjacency size", expected: n, found: a.num_nodes() });
    }
    Ok(())
}

/// `L` chained graph convolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnBlock {
    pub layers: Vec<GcnLayer>,
    pub first_layer_only_adjacency: bool,
}

impl GcnBlock {
    /// Builds a block from chained weights. Hidden layers use ReLU; the last
    /// layer uses `final_activation`. With `first_layer_only_adjacency`, only
    /// layer 0 propagates over edges.
    pub fn from_weights(
        weights: Vec<Matrix>,
        final_activation: Activation,
        first_layer_only_adjacency: bool,
    ) -> Result<Self, NnError> {
        if weights.is_empty() {
            return Err(NnError::Config("a block needs at least one layer"));
        }
        for w in weights.windows(2) {
            if w[0].cols() != w[1].rows() {
                return Err(NnError::Dimension { what: "block chaining", expected: w[0].cols(), found: w[1].rows() });
            }
        }
        let last = weights.len() - 1;
        let layers = weights
            .into_iter()
            .enumerate()
            .map(|(l, w)| {
                let act = if l == last { final_activation } else { Activation::Relu };
                GcnLayer::new(w, act, l == 0 || !first_layer_only_adjacency)
            })
            .collect();
        Ok(Self { layers, first_layer_only_adjacency })
    }

    pub fn in_features(&self) -> usize {
        self.layers[0].in_features()
    }

    pub fn out_features(&self) -> usize {
        self.layers[self.layers.len() - 1].out_features()
    }

    pub fn forward(&self, adj: Option<&NormalizedAdjacency>, x: &Matrix) -> Result<Matrix, NnError> {
        let mut h = self.layers[0].forward(adj, x)?;
        for layer in &self.layers[1..] {
            h = layer.forward(adj, &h)?;
        }
        Ok(h)
    }

    /// Output of every layer, in order.
    pub(crate) fn forward_recorded(&self, adj: Option<&NormalizedAdjacency>, x: &Matrix) -> Result<Vec<Matrix>, NnError> {
        let mut outs: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let h = layer.forward(adj, outs.last().unwrap_or(x))?;
            outs.push(h);
        }
        Ok(outs)
    }

    /// Backpropagates through layers `from..`, adding weight gradients to
    /// the matching layers of `grads`. Returns the gradient at the input of
    /// layer `from` when requested.
    pub(crate) fn backward_from(
        &self,
        from: usize,
        adj: Option<&NormalizedAdjacency>,
        input: &Matrix,
        outputs: &[Matrix],
        d_output: Matrix,
        grads: &mut GcnBlock,
        want_input_grad: bool,
    ) -> Result<Option<Matrix>, NnError> {
        let mut d = d_output;
        for l in (from..self.layers.len()).rev() {
            let layer_input = if l == 0 { input } else { &outputs[l - 1] };
            let need = l > from || want_input_grad;
            match self.layers[l].backward(adj, layer_input, &outputs[l], d, &mut grads.layers[l].weight, need)? {
                Some(dx) => d = dx,
                None => return Ok(None),
            }
        }
        Ok(Some(d))
    }
}

/// Fully connected layer `σ(x W + b)` on a single row vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<Real>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weight: Matrix, bias: Vec<Real>, activation: Activation) -> Self {
        assert_eq!(weight.cols(), bias.len());
        Self { weight, bias, activation }
    }

    pub fn in_features(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_features(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &[Real]) -> Result<Vec<Real>, NnError> {
        if x.len() != self.in_features() {
            return Err(NnError::Dimension { what: "dense input width", expected: self.in_features(), found: x.len() });
        }
        let mut z = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (v, &w) in z.iter_mut().zip(self.weight.row(i)) {
                *v += xi * w;
            }
        }
        self.activation.apply(&mut z);
        Ok(z)
    }

    /// Adds `(dW, db)` to `grads` and returns `dx`.
    pub(crate) fn backward(&self, input: &[Real], output: &[Real], d_output: &[Real], grads: &mut DenseLayer) -> Vec<Real> {
        let mut g = d_output.to_vec();
        self.activation.gate(output, &mut g);
        for (i, &xi) in input.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (d, &gj) in grads.weight.row_mut(i).iter_mut().zip(&g) {
                *d += xi * gj;
            }
        }
        for (b, &gj) in grads.bias.iter_mut().zip(&g) {
            *b += gj;
        }
        (0..self.in_features())
            .map(|i| self.weight.row(i).iter().zip(&g).map(|(w, gj)| w * gj).sum())
            .collect()
    }
}

/// Columnwise maximum over nodes with the winning row per column.
///
/// Ties go to the smallest node index.
pub fn global_max_pool(x: &Matrix) -> Result<(Vec<Real>, Vec<usize>), NnError> {
    if x.rows() == 0 {
        return Err(NnError::EmptyInput);
    }
    let mut values = x.row(0).to_vec();
    let mut argmax = alloc::vec![0usize; x.cols()];
    for i in 1..x.rows() {
        for (j, &v) in x.row(i).iter().enumerate() {
            if v > values[j] {
                values[j] = v;
                argmax[j] = i;
            }
        }
    }
    Ok((values, argmax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalize_adjacency, SparseAdjacency};

    #[test]
    fn relu_identity_layer() {
        let layer = GcnLayer::new(Matrix::identity(2), Activation::Relu, true);
        let x = Matrix::from_rows(&[[1.0, -2.0], [-0.5, 3.0], [0.0, -1.0]]);
        let y = layer.forward(Some(&NormalizedAdjacency::identity(3)), &x).unwrap();
        assert_eq!(y, Matrix::from_rows(&[[1.0, 0.0], [0.0, 3.0], [0.0, 0.0]]));
    }

    #[test]
    fn two_node_average_then_scale() {
        let a = normalize_adjacency(&SparseAdjacency::from_undirected_edges(2, [(0, 1)]).unwrap()).unwrap();
        let layer = GcnLayer::new(Matrix::from_rows(&[[2.0]]), Activation::Identity, true);
        let y = layer.forward(Some(&a), &Matrix::from_rows(&[[1.0], [3.0]])).unwrap();
        assert_eq!(y, Matrix::from_rows(&[[4.0], [4.0]]));
    }

    #[test]
    fn dimension_errors() {
        let layer = GcnLayer::new(Matrix::zeros(3, 2), Activation::Relu, true);
        assert!(matches!(layer.forward(None, &Matrix::zeros(4, 2)), Err(NnError::Dimension { .. })));
        let a = NormalizedAdjacency::identity(5);
        assert!(matches!(layer.forward(Some(&a), &Matrix::zeros(4, 3)), Err(NnError::Dimension { .. })));
    }

    #[test]
    fn identity_block_is_noop() {
        let block =
            GcnBlock::from_weights(alloc::vec![Matrix::identity(3), Matrix::identity(3)], Activation::Identity, true)
                .unwrap();
        // Hidden layer is ReLU, so keep the input nonnegative.
        let x = Matrix::from_fn(4, 3, |i, j| (i + j) as Real);
        assert_eq!(block.forward(Some(&NormalizedAdjacency::identity(4)), &x).unwrap(), x);
        assert!(block.layers[0].use_adjacency && !block.layers[1].use_adjacency);
    }

    #[test]
    fn block_chaining_checked() {
        let err = GcnBlock::from_weights(alloc::vec![Matrix::zeros(3, 4), Matrix::zeros(5, 2)], Activation::Relu, true);
        assert!(matches!(err, Err(NnError::Dimension { .. })));
    }

    #[test]
    fn max_pool_examples() {
        let (v, a) = global_max_pool(&Matrix::from_rows(&[[1.0, 5.0], [3.0, 2.0]])).unwrap();
        assert_eq!((v, a), (alloc::vec![3.0, 5.0], alloc::vec![1, 0]));
        let (v, a) = global_max_pool(&Matrix::from_rows(&[[7.0], [7.0], [7.0]])).unwrap();
        assert_eq!((v, a), (alloc::vec![7.0], alloc::vec![0]));
        assert_eq!(global_max_pool(&Matrix::zeros(0, 3)), Err(NnError::EmptyInput));
    }
}
