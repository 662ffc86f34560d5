use alloc::vec;
use alloc::vec::Vec;

use super::layers::{check_nodes, global_max_pool, GcnLayer};
use super::{GraphNetConfig, GraphNetModel, NnError};
use crate::graph::{normalize_adjacency, spmm, NormalizedAdjacency, SurfaceGraph};
use crate::matrix::{gemm_view, Matrix};
use crate::real::Real;

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTape {
    config: GraphNetConfig,
    input: Matrix,
    adjacency: Option<NormalizedAdjacency>,
    aux: Vec<Real>,
    enc1: Vec<Matrix>,
    enc2: Vec<Matrix>,
    pool_argmax: Vec<usize>,
    global: Vec<Real>,
    cls_input: Vec<Real>,
    cls: Vec<Vec<Real>>,
    seg1: Vec<Matrix>,
    seg2: Vec<Matrix>,
}

impl ForwardTape {
    /// Recomputes the forward pass from the recorded inputs.
    pub fn replay(&self, model: &GraphNetModel) -> Result<(Vec<Real>, Matrix), NnError> {
        let out = model.forward(&self.input, self.adjacency.as_ref(), &self.aux)?;
        Ok((out.cls_scores, out.seg_scores))
    }

    pub fn pool_argmax(&self) -> &[usize] {
        &self.pool_argmax
    }

    pub fn global_feature(&self) -> &[Real] {
        &self.global
    }

    /// Output of the first encoder block (the per-node local feature).
    pub fn local_feature(&self) -> &Matrix {
        self.enc1.last().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Raw class scores, length `C_c`.
    pub cls_scores: Vec<Real>,
    /// Raw per-node scores, `N x C_s`.
    pub seg_scores: Matrix,
    pub tape: ForwardTape,
}

/// Gradient of a scalar loss with respect to every model parameter, stored
/// in a model-shaped container.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(GraphNetModel);

impl Gradients {
    pub fn zeros_like(model: &GraphNetModel) -> Self {
        Self(model.zeros_like())
    }

    /// Tensors in the same order as [`GraphNetModel::tensors`].
    pub fn tensors(&self) -> Vec<&[Real]> {
        self.0.tensors()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [Real]> {
        self.0.tensors_mut()
    }

    pub fn as_model(&self) -> &GraphNetModel {
        &self.0
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.tensors_mut().into_iter().zip(other.0.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, factor: Real) {
        for t in self.0.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn fill_zero(&mut self) {
        for t in self.0.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn max_abs(&self) -> Real {
        self.tensors().iter().flat_map(|t| t.iter()).fold(0.0, |m: Real, v| m.max(v.abs()))
    }
}

impl GraphNetModel {
    /// Forward pass on a graph, normalising its adjacency first.
    pub fn forward_graph(&self, g: &SurfaceGraph, aux: &[Real]) -> Result<ForwardOutput, NnError> {
        if self.pointnet_mode() {
            return self.forward(g.features(), None, aux);
        }
        let adj = normalize_adjacency(g.adjacency())?;
        self.forward(g.features(), Some(&adj), aux)
    }

    /// Forward pass on node features `x` (`N x F`) with propagation operator
    /// `adj`; `None`, or `pointnet_mode`, means no edges.
    pub fn forward(&self, x: &Matrix, adj: Option<&NormalizedAdjacency>, aux: &[Real]) -> Result<ForwardOutput, NnError> {
        let cfg = &self.config;
        if x.rows() == 0 {
            return Err(NnError::EmptyInput);
        }
        if x.cols() != cfg.in_features {
            return Err(NnError::Dimension { what: "node feature width", expected: cfg.in_features, found: x.cols() });
        }
        if aux.len() != cfg.n_aux {
            return Err(NnError::Dimension { what: "auxiliary feature count", expected: cfg.n_aux, found: aux.len() });
        }
        if !x.is_finite() {
            return Err(NnError::NonFinite("node features"));
        }
        if aux.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("auxiliary features"));
        }
        let adj = if cfg.pointnet_mode { None } else { adj };
        if let Some(a) = adj {
            check_nodes(a, x.rows())?;
        }

        let enc1 = self.enc_block1.forward_recorded(adj, x)?;
        let enc2 = self.enc_block2.forward_recorded(adj, enc1.last().unwrap())?;
        let (global, pool_argmax) = global_max_pool(enc2.last().unwrap())?;

        let mut cls_input = Vec::with_capacity(global.len() + aux.len());
        cls_input.extend_from_slice(&global);
        cls_input.extend(self.standardize_aux(aux));
        let mut cls: Vec<Vec<Real>> = Vec::with_capacity(self.cls_head.len());
        for layer in &self.cls_head {
            let h = layer.forward(cls.last().map_or(&cls_input[..], |v| &v[..]))?;
            cls.push(h);
        }

        let local = enc1.last().unwrap();
        let blocks = &self.seg_block1.layers;
        let mut seg1 = Vec::with_capacity(blocks.len());
        seg1.push(broadcast_concat_forward(&blocks[0], adj, local, &global));
        for layer in &blocks[1..] {
            let h = layer.forward(adj, seg1.last().unwrap())?;
            seg1.push(h);
        }
        let seg2 = self.seg_block2.forward_recorded(adj, seg1.last().unwrap())?;

        let tape = ForwardTape {
            config: self.config.clone(),
            input: x.clone(),
            adjacency: adj.cloned(),
            aux: aux.to_vec(),
            enc1,
            enc2,
            pool_argmax,
            global,
            cls_input,
            cls,
            seg1,
            seg2,
        };
        Ok(ForwardOutput {
            cls_scores: tape.cls.last().unwrap().clone(),
            seg_scores: tape.seg2.last().unwrap().clone(),
            tape,
        })
    }

    /// Reverse pass for upstream gradients `d_cls` (length `C_c`) and
    /// `d_seg` (`N x C_s`).
    pub fn backward(&self, tape: &ForwardTape, d_cls: &[Real], d_seg: &Matrix) -> Result<Gradients, NnError> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_accumulate(tape, d_cls, d_seg, &mut grads)?;
        Ok(grads)
    }

    /// Like [`backward`](Self::backward) but adds into an existing gradient.
    pub fn backward_accumulate(
        &self,
        tape: &ForwardTape,
        d_cls: &[Real],
        d_seg: &Matrix,
        grads: &mut Gradients,
    ) -> Result<(), NnError> {
        if tape.config != self.config || grads.0.config != self.config {
            return Err(NnError::TapeMismatch);
        }
        let n = tape.input.rows();
        if d_cls.len() != self.config.num_classes() {
            return Err(NnError::Dimension { what: "class gradient", expected: self.config.num_classes(), found: d_cls.len() });
        }
        if d_seg.shape() != (n, self.config.num_seg_classes()) {
            return Err(NnError::Dimension { what: "segmentation gradient rows", expected: n, found: d_seg.rows() });
        }
        let adj = tape.adjacency.as_ref();
        let g = &mut grads.0;
        let gw = self.config.global_width();

        // Segmentation head.
        let d = self.seg_block2.backward_from(0, adj, tape.seg1.last().unwrap(), &tape.seg2, d_seg.clone(), &mut g.seg_block2, true)?;
        let d = self.seg_block1.backward_from(1, adj, &tape.seg1[0], &tape.seg1, d.unwrap(), &mut g.seg_block1, true)?;
        let local = tape.enc1.last().unwrap();
        let (mut d_local, mut d_global) = broadcast_concat_backward(
            &self.seg_block1.layers[0],
            adj,
            local,
            &tape.global,
            &tape.seg1[0],
            d.unwrap(),
            &mut g.seg_block1.layers[0].weight,
        )?;

        // Classification head.
        let mut d = d_cls.to_vec();
        for l in (0..self.cls_head.len()).rev() {
            let input = if l == 0 { &tape.cls_input[..] } else { &tape.cls[l - 1][..] };
            d = self.cls_head[l].backward(input, &tape.cls[l], &d, &mut g.cls_head[l]);
        }
        for (a, v) in d_global.iter_mut().zip(&d[..gw]) {
            *a += *v;
        }

        // Encoder: the pooled layer receives one gradient entry per column.
        let enc2 = &self.enc_block2;
        let last = enc2.layers.len() - 1;
        let pooled_input = if last == 0 { local } else { &tape.enc2[last - 1] };
        let mut d_h = pooled_backward(
            &enc2.layers[last],
            adj,
            pooled_input,
            &tape.enc2[last],
            &tape.pool_argmax,
            &d_global,
            &mut g.enc_block2.layers[last].weight,
        )?;
        for l in (0..last).rev() {
            let layer_input = if l == 0 { local } else { &tape.enc2[l - 1] };
            d_h = enc2.layers[l]
                .backward(adj, layer_input, &tape.enc2[l], d_h, &mut g.enc_block2.layers[l].weight, true)?
                .unwrap();
        }
        d_local.add_assign(&d_h);
        self.enc_block1.backward_from(0, adj, &tape.input, &tape.enc1, d_local, &mut g.enc_block1, false)?;
        Ok(())
    }
}

/// First segmentation layer on `[local | 1·globalᵀ]` without materialising
/// the concatenation: `Â L W_L + (Â 1) (g W_G)`.
fn broadcast_concat_forward(
    layer: &GcnLayer,
    adj: Option<&NormalizedAdjacency>,
    local: &Matrix,
    global: &[Real],
) -> Matrix {
    let lw = local.cols();
    let w = &layer.weight;
    let out_w = w.cols();
    let w_local = w.view_rows(0, lw);
    let w_global = w.view_rows(lw, w.rows());
    let g_row = Matrix::from_vec(1, global.len(), global.to_vec());
    let mut q = Matrix::zeros(1, out_w);
    gemm_view(g_row.view(), false, w_global, false, &mut q, false);

    let a = layer.propagation(adj);
    let mut z = Matrix::zeros(local.rows(), out_w);
    match a {
        None => gemm_view(local.view(), false, w_local, false, &mut z, false),
        Some(a) if lw <= out_w => {
            let al = spmm(a, local).expect("checked node count");
            gemm_view(al.view(), false, w_local, false, &mut z, false);
        }
        Some(a) => {
            gemm_view(local.view(), false, w_local, false, &mut z, false);
            z = spmm(a, &z).expect("checked node count");
        }
    }
    let sums = a.map(|a| a.row_sums());
    for i in 0..z.rows() {
        let s = sums.as_ref().map_or(1.0, |s| s[i]);
        for (v, qj) in z.row_mut(i).iter_mut().zip(q.as_slice()) {
            *v += s * *qj;
        }
    }
    layer.activation.apply(z.as_mut_slice());
    z
}

/// Adds the weight gradient to `dw`; returns `(d_local, d_global)`.
fn broadcast_concat_backward(
    layer: &GcnLayer,
    adj: Option<&NormalizedAdjacency>,
    local: &Matrix,
    global: &[Real],
    output: &Matrix,
    d_output: Matrix,
    dw: &mut Matrix,
) -> Result<(Matrix, Vec<Real>), NnError> {
    let lw = local.cols();
    let w = &layer.weight;
    let out_w = w.cols();
    let mut g = d_output;
    layer.activation.gate(output.as_slice(), g.as_mut_slice());
    let g = match layer.propagation(adj) {
        Some(a) => spmm(a, &g)?,
        None => g,
    };
    // Gradient of the broadcast row q = global·W_G is the column sum of Â·dZ.
    let mut dq = vec![0.0; out_w];
    for i in 0..g.rows() {
        for (d, v) in dq.iter_mut().zip(g.row(i)) {
            *d += *v;
        }
    }
    let d_local_w = local.t_matmul(&g);
    for i in 0..lw {
        for (d, v) in dw.row_mut(i).iter_mut().zip(d_local_w.row(i)) {
            *d += *v;
        }
    }
    for (k, &gk) in global.iter().enumerate() {
        if gk == 0.0 {
            continue;
        }
        for (d, &qj) in dw.row_mut(lw + k).iter_mut().zip(&dq) {
            *d += gk * qj;
        }
    }
    let mut d_local = Matrix::zeros(local.rows(), lw);
    gemm_view(g.view(), false, w.view_rows(0, lw), true, &mut d_local, false);
    let d_global = (0..global.len()).map(|k| w.row(lw + k).iter().zip(&dq).map(|(a, b)| a * b).sum()).collect();
    Ok((d_local, d_global))
}

/// Backward through the layer feeding the max-pool, where only the argmax
/// row of each column receives gradient. Adds to `dw`, returns `d_input`.
fn pooled_backward(
    layer: &GcnLayer,
    adj: Option<&NormalizedAdjacency>,
    input: &Matrix,
    output: &Matrix,
    argmax: &[usize],
    d_global: &[Real],
    dw: &mut Matrix,
) -> Result<Matrix, NnError> {
    let (n, k) = input.shape();
    let c = layer.out_features();
    let w = &layer.weight;
    let mut d_in = Matrix::zeros(n, k);
    let propagate = layer.propagation(adj);
    let mut entries: Vec<(usize, Real)> = Vec::new();
    for j in 0..c {
        let row = argmax[j];
        let mut gate = [d_global[j]];
        layer.activation.gate(&[output[(row, j)]], &mut gate);
        let gj = gate[0];
        if gj == 0.0 {
            continue;
        }
        entries.clear();
        match propagate {
            // Â is symmetric, so column `row` of Â equals row `row`.
            Some(a) => {
                let (cols, vals) = a.as_sparse().row(row);
                entries.extend(cols.iter().zip(vals).map(|(&i, &v)| (i, v * gj)));
            }
            None => entries.push((row, gj)),
        }
        for &(i, g) in &entries {
            let x = input.row(i);
            for kk in 0..k {
                dw[(kk, j)] += x[kk] * g;
            }
            let dst = d_in.row_mut(i);
            for kk in 0..k {
                dst[kk] += g * w[(kk, j)];
            }
        }
    }
    Ok(d_in)
}
