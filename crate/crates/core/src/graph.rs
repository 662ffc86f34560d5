//! Surface graphs, compressed sparse adjacency, and the symmetric
//! `D̃^{-1/2} (A + I) D̃^{-1/2}` propagation operator.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::matrix::Matrix;
use crate::real::{sqrt, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("adjacency must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("adjacency is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("adjacency has a nonzero diagonal entry at node {0}")]
    NonzeroDiagonal(usize),
    #[error("adjacency entry ({row}, {col}) is not 0 or 1")]
    NonBinary { row: usize, col: usize },
    #[error("malformed sparse structure: {0}")]
    Malformed(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),
}

/// Row-compressed sparse matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdjacency {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Real>,
}

impl SparseAdjacency {
    pub fn new(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<Real>,
    ) -> Result<Self, GraphError> {
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return Err(GraphError::Malformed("row pointer length"));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != col_idx.len() {
            return Err(GraphError::Malformed("index/value length"));
        }
        for r in 0..rows {
            let (s, e) = (row_ptr[r], row_ptr[r + 1]);
            if s > e {
                return Err(GraphError::Malformed("row pointers decrease"));
            }
            let cols_r = &col_idx[s..e];
            if cols_r.iter().any(|&c| c >= cols) {
                return Err(GraphError::Malformed("column index out of range"));
            }
            if cols_r.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::Malformed("columns unsorted or duplicated"));
            }
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(GraphError::Malformed("negative or non-finite value"));
        }
        Ok(Self { rows, cols, row_ptr, col_idx, values })
    }

    /// Binary symmetric adjacency of an undirected simple graph.
    ///
    /// Duplicate edges collapse; self-loops are rejected.
    pub fn from_undirected_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::Malformed("edge endpoint out of range"));
            }
            if a == b {
                return Err(GraphError::NonzeroDiagonal(a));
            }
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
        Ok(Self::from_neighbor_lists(nbrs))
    }

    /// Binary adjacency from per-node neighbour lists (sorted and deduplicated here).
    pub(crate) fn from_neighbor_lists(mut nbrs: Vec<Vec<usize>>) -> Self {
        let n = nbrs.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for list in nbrs.iter_mut() {
            list.sort_unstable();
            list.dedup();
            col_idx.extend_from_slice(list);
            row_ptr.push(col_idx.len());
        }
        let values = vec![1.0; col_idx.len()];
        Self { rows: n, cols: n, row_ptr, col_idx, values }
    }

    /// All-zero `n x n` matrix.
    pub fn empty(n: usize) -> Self {
        Self { rows: n, cols: n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Stores every nonzero of `m`; negative entries are rejected.
    pub fn from_dense(m: &Matrix) -> Result<Self, GraphError> {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != 0.0 {
                    col_idx.push(j);
                    values.push(m[(i, j)]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self::new(m.rows(), m.cols(), row_ptr, col_idx, values)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                m[(i, j)] = x;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[Real]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.row(i).0
    }

    pub fn get(&self, i: usize, j: usize) -> Real {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |k| v[k])
    }

    /// Number of stored off-diagonal pairs `i < j`.
    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    /// Undirected edges `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| self.neighbors(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn row_sums(&self) -> Vec<Real> {
        (0..self.rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Structural and numeric symmetry check; returns the first offending entry.
    pub fn check_symmetric(&self) -> Result<(), GraphError> {
        if self.rows != self.cols {
            return Err(GraphError::NotSquare { rows: self.rows, cols: self.cols });
        }
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                let (cj, vj) = self.row(j);
                match cj.binary_search(&i) {
                    Ok(k) if vj[k] == x => {}
                    _ => return Err(GraphError::Asymmetric { row: i, col: j }),
                }
            }
        }
        Ok(())
    }

    /// Validates the preconditions of a simple undirected graph adjacency.
    pub fn check_simple_graph(&self) -> Result<(), GraphError> {
        self.check_symmetric()?;
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j == i {
                    return Err(GraphError::NonzeroDiagonal(i));
                }
                if x != 1.0 {
                    return Err(GraphError::NonBinary { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Component id per node (ids assigned in order of smallest member) and component count.
    pub fn connected_components(&self) -> (Vec<usize>, usize) {
        let n = self.rows;
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    pub fn is_connected(&self) -> bool {
        self.rows == 0 || self.connected_components().1 == 1
    }

    /// Sparse-dense product with ascending-column summation per row.
    pub fn mul_dense(&self, x: &Matrix) -> Result<Matrix, GraphError> {
        if x.rows() != self.cols {
            return Err(GraphError::DimensionMismatch { expected: self.cols, found: x.rows() });
        }
        let k = x.cols();
        let mut out = Matrix::zeros(self.rows, k);
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            let dst = out.row_mut(i);
            let mut entries = c.iter().zip(v);
            // The first term initialises the row so identity rows copy exactly (signed zeros included).
            if let Some((&j, &w)) = entries.next() {
                for (d, s) in dst.iter_mut().zip(x.row(j)) {
                    *d = w * *s;
                }
            }
            for (&j, &w) in entries {
                for (d, s) in dst.iter_mut().zip(x.row(j)) {
                    *d += w * *s;
                }
            }
        }
        Ok(out)
    }

    /// Reindexes rows and columns so that old node `i` becomes `perm[i]`.
    fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.rows;
        let mut inv = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        let mut scratch: Vec<(usize, Real)> = Vec::new();
        for &old in inv.iter() {
            let (c, v) = self.row(old);
            scratch.clear();
            scratch.extend(c.iter().zip(v).map(|(&j, &x)| (perm[j], x)));
            scratch.sort_unstable_by_key(|e| e.0);
            for &(j, x) in &scratch {
                col_idx.push(j);
                values.push(x);
            }
            row_ptr.push(col_idx.len());
        }
        Self { rows: n, cols: n, row_ptr, col_idx, values }
    }
}

/// Precomputed propagation operator `Â = D̃^{-1/2} (A + I) D̃^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency(SparseAdjacency);

impl NormalizedAdjacency {
    pub fn as_sparse(&self) -> &SparseAdjacency {
        &self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.rows
    }

    /// Row sums of `Â`, i.e. `Â·1`.
    pub fn row_sums(&self) -> Vec<Real> {
        self.0.row_sums()
    }

    /// Operator of a graph with no edges (`Â = I`).
    pub fn identity(n: usize) -> Self {
        Self(SparseAdjacency::identity(n))
    }
}

/// Symmetric GCN normalisation of a simple undirected graph.
///
/// Degrees are taken on `A + I`, so every node has degree at least one.
pub fn normalize_adjacency(a: &SparseAdjacency) -> Result<NormalizedAdjacency, GraphError> {
    a.check_simple_graph()?;
    let n = a.rows;
    let degree: Vec<Real> = (0..n).map(|i| 1.0 + a.neighbors(i).len() as Real).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::with_capacity(a.nnz() + n);
    let mut values = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        let nbrs = a.neighbors(i);
        let split = nbrs.partition_point(|&j| j < i);
        for &j in &nbrs[..split] {
            col_idx.push(j);
            values.push(off_diagonal(&degree, i, j));
        }
        col_idx.push(i);
        values.push(1.0 / degree[i]);
        for &j in &nbrs[split..] {
            col_idx.push(j);
            values.push(off_diagonal(&degree, i, j));
        }
        row_ptr.push(col_idx.len());
    }
    Ok(NormalizedAdjacency(SparseAdjacency { rows: n, cols: n, row_ptr, col_idx, values }))
}

// Ordered by index so (i, j) and (j, i) evaluate the identical expression.
#[inline]
fn off_diagonal(degree: &[Real], i: usize, j: usize) -> Real {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    1.0 / sqrt(degree[lo] * degree[hi])
}

/// `Â X` with deterministic per-row summation order.
pub fn spmm(adj: &NormalizedAdjacency, x: &Matrix) -> Result<Matrix, GraphError> {
    adj.0.mul_dense(x)
}

/// Node features plus binary symmetric adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGraph {
    features: Matrix,
    adjacency: SparseAdjacency,
}

impl SurfaceGraph {
    pub fn new(features: Matrix, adjacency: SparseAdjacency) -> Result<Self, GraphError> {
        adjacency.check_simple_graph()?;
        if features.rows() != adjacency.rows() {
            return Err(GraphError::DimensionMismatch { expected: adjacency.rows(), found: features.rows() });
        }
        Ok(Self { features, adjacency })
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    #[inline]
    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn adjacency(&self) -> &SparseAdjacency {
        &self.adjacency
    }

    /// Same node features, all edges removed.
    pub fn without_edges(&self) -> Self {
        Self { features: self.features.clone(), adjacency: SparseAdjacency::empty(self.num_nodes()) }
    }

    pub fn with_features(&self, features: Matrix) -> Result<Self, GraphError> {
        Self::new(features, self.adjacency.clone())
    }

    pub fn into_parts(self) -> (Matrix, SparseAdjacency) {
        (self.features, self.adjacency)
    }

    /// Node `i` position, assuming at least three feature columns.
    #[inline]
    pub fn position(&self, i: usize) -> [Real; 3] {
        let r = self.features.row(i);
        [r[0], r[1], r[2]]
    }
}

/// Returns `true` when `perm` is a bijection on `0..n`.
pub fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Relabels nodes so that old node `i` becomes node `perm[i]`.
pub fn permute_graph(g: &SurfaceGraph, perm: &[usize]) -> Result<SurfaceGraph, GraphError> {
    let n = g.num_nodes();
    if !is_permutation(perm, n) {
        return Err(GraphError::InvalidPermutation(n));
    }
    Ok(SurfaceGraph { features: permute_rows(&g.features, perm), adjacency: g.adjacency.permuted(perm) })
}

/// Conjugates a normalised operator by the same relabelling as [`permute_graph`].
pub fn permute_normalized(adj: &NormalizedAdjacency, perm: &[usize]) -> Result<NormalizedAdjacency, GraphError> {
    if !is_permutation(perm, adj.num_nodes()) {
        return Err(GraphError::InvalidPermutation(adj.num_nodes()));
    }
    Ok(NormalizedAdjacency(adj.0.permuted(perm)))
}

/// Row `i` of the input becomes row `perm[i]` of the output.
pub fn permute_rows(m: &Matrix, perm: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for (i, &p) in perm.iter().enumerate() {
        out.row_mut(p).copy_from_slice(m.row(i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> SparseAdjacency {
        SparseAdjacency::from_undirected_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn empty_graph_normalizes_to_identity() {
        let a = normalize_adjacency(&SparseAdjacency::empty(4)).unwrap();
        assert_eq!(a.as_sparse().to_dense(), Matrix::identity(4));
    }

    #[test]
    fn single_edge_and_triangle() {
        let a = normalize_adjacency(&SparseAdjacency::from_undirected_edges(2, [(0, 1)]).unwrap()).unwrap();
        assert_eq!(a.as_sparse().to_dense(), Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]));
        let k3 = SparseAdjacency::from_undirected_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let a = normalize_adjacency(&k3).unwrap().as_sparse().to_dense();
        for v in a.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn path_graph_by_hand() {
        let a = normalize_adjacency(&path3()).unwrap().as_sparse().to_dense();
        let s2 = (2.0 as Real).sqrt();
        let s3 = (3.0 as Real).sqrt();
        let expected = Matrix::from_rows(&[
            [0.5, 1.0 / (s2 * s3), 0.0],
            [1.0 / (s3 * s2), 1.0 / 3.0, 1.0 / (s3 * s2)],
            [0.0, 1.0 / (s2 * s3), 0.5],
        ]);
        assert!(a.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn normalization_rejects_bad_input() {
        let rect = SparseAdjacency::new(2, 3, vec![0, 0, 0], vec![], vec![]).unwrap();
        assert!(matches!(normalize_adjacency(&rect), Err(GraphError::NotSquare { .. })));
        let asym = SparseAdjacency::from_dense(&Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]])).unwrap();
        assert!(matches!(normalize_adjacency(&asym), Err(GraphError::Asymmetric { .. })));
        let diag = SparseAdjacency::from_dense(&Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]])).unwrap();
        assert_eq!(normalize_adjacency(&diag), Err(GraphError::NonzeroDiagonal(0)));
        let weighted = SparseAdjacency::from_dense(&Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]])).unwrap();
        assert!(matches!(normalize_adjacency(&weighted), Err(GraphError::NonBinary { .. })));
    }

    #[test]
    fn normalized_is_bitwise_symmetric_with_reciprocal_diagonal() {
        let g = SparseAdjacency::from_undirected_edges(6, [(0, 1), (0, 2), (0, 3), (3, 4), (4, 5), (1, 5)]).unwrap();
        let a = normalize_adjacency(&g).unwrap().as_sparse().to_dense();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a[(i, j)].to_bits(), a[(j, i)].to_bits());
            }
            let d = 1.0 + g.neighbors(i).len() as Real;
            assert_eq!(a[(i, i)], 1.0 / d);
        }
    }

    #[test]
    fn spmm_examples() {
        let x = Matrix::from_rows(&[[1.0, -0.0], [3.0, 2.5]]);
        let id = NormalizedAdjacency::identity(2);
        assert!(spmm(&id, &x).unwrap().bit_eq(&x));
        let avg = normalize_adjacency(&SparseAdjacency::from_undirected_edges(2, [(0, 1)]).unwrap()).unwrap();
        let y = spmm(&avg, &Matrix::from_rows(&[[1.0], [3.0]])).unwrap();
        assert_eq!(y, Matrix::from_rows(&[[2.0], [2.0]]));
        assert!(matches!(spmm(&avg, &Matrix::zeros(3, 1)), Err(GraphError::DimensionMismatch { .. })));
    }

    #[test]
    fn malformed_csr_is_rejected() {
        assert!(SparseAdjacency::new(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseAdjacency::new(2, 2, vec![0, 2, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseAdjacency::new(2, 2, vec![0, 1, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseAdjacency::new(2, 2, vec![0, 1, 1], vec![1], vec![-1.0]).is_err());
    }

    #[test]
    fn permutation_identity_and_inverse() {
        let g = SurfaceGraph::new(Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as Real), path3()).unwrap();
        assert_eq!(permute_graph(&g, &[0, 1, 2]).unwrap(), g);
        let perm = [2, 0, 1];
        let p = permute_graph(&g, &perm).unwrap();
        assert_ne!(p, g);
        assert_eq!(permute_graph(&p, &invert_permutation(&perm)).unwrap(), g);
        assert!(matches!(permute_graph(&g, &[0, 0, 1]), Err(GraphError::InvalidPermutation(3))));
    }

    #[test]
    fn components() {
        let g = SparseAdjacency::from_undirected_edges(5, [(0, 1), (3, 4)]).unwrap();
        assert_eq!(g.connected_components(), (vec![0, 0, 1, 2, 2], 3));
        assert!(!g.is_connected());
        assert!(path3().is_connected());
    }
}
