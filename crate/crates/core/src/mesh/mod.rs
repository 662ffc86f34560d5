//! Triangle meshes and their conversion to surface graphs.

mod decimate;
pub mod primitives;
mod resample;

use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::{GraphError, SparseAdjacency, SurfaceGraph};
use crate::matrix::Matrix;
use crate::real::{cross3, sqrt, sub3, Real};

pub use decimate::decimate_mesh;
pub use resample::{resample, resample_indexed, Resampled, ResampleSpec, ResampleStrategy, KNN_NEIGHBORS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {index} but the mesh has {num_vertices} vertices")]
    IndexOutOfRange { face: usize, index: usize, num_vertices: usize },
    #[error("face {0} is degenerate (repeated vertex)")]
    DegenerateFace(usize),
    #[error("graph has {found} nodes, resampling needs {expected}")]
    NodeCountMismatch { expected: usize, found: usize },
    #[error("cannot upsample from {have} to {want} nodes")]
    Upsample { have: usize, want: usize },
    #[error("target node count must be at least 4, got {0}")]
    TargetTooSmall(usize),
    #[error("graph node features need at least 3 columns for coordinates")]
    NotSpatial,
    #[error("decimation stalled at {0} vertices")]
    DecimationStalled(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Vertices in millimetres plus triangle faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<[Real; 3]>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[Real; 3]>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&index) = f.iter().find(|&&i| i >= n) {
                return Err(MeshError::IndexOutOfRange { face: fi, index, num_vertices: n });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::DegenerateFace(fi));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[[Real; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn into_parts(self) -> (Vec<[Real; 3]>, Vec<[usize; 3]>) {
        (self.vertices, self.faces)
    }

    /// Uniformly scales every vertex about the origin.
    pub fn scaled(&self, factor: Real) -> Self {
        let vertices = self.vertices.iter().map(|v| [v[0] * factor, v[1] * factor, v[2] * factor]).collect();
        Self { vertices, faces: self.faces.clone() }
    }

    /// Area-weighted vertex normals (unit length; zero for isolated vertices).
    pub fn vertex_normals(&self) -> Vec<[Real; 3]> {
        let mut acc = alloc::vec![[0.0 as Real; 3]; self.vertices.len()];
        for f in &self.faces {
            let n = cross3(
                &sub3(&self.vertices[f[1]], &self.vertices[f[0]]),
                &sub3(&self.vertices[f[2]], &self.vertices[f[0]]),
            );
            for &v in f {
                for k in 0..3 {
                    acc[v][k] += n[k];
                }
            }
        }
        for n in acc.iter_mut() {
            let len = sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
            if len > 0.0 {
                n.iter_mut().for_each(|c| *c /= len);
            }
        }
        acc
    }

    /// Unique undirected triangle edges `(i, j)`, `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

/// One node per vertex with `(x, y, z)` features, one edge per triangle edge.
pub fn mesh_to_graph(m: &TriangleMesh) -> SurfaceGraph {
    let features = Matrix::from_fn(m.vertices.len(), 3, |i, j| m.vertices[i][j]);
    // Faces were validated on construction, so edges are in range and loop-free.
    let adjacency = SparseAdjacency::from_undirected_edges(m.vertices.len(), m.edges())
        .expect("validated mesh produces a simple graph");
    SurfaceGraph::new(features, adjacency).expect("features match node count")
}

/// Centres node features on their centroid and scales them into the unit ball.
///
/// Coincident inputs map to all zeros.
pub fn normalize_coordinates(g: &SurfaceGraph) -> SurfaceGraph {
    let features = normalize_points(g.features());
    g.with_features(features).expect("shape preserved")
}

pub fn normalize_points(x: &Matrix) -> Matrix {
    let (n, f) = x.shape();
    if n == 0 {
        return x.clone();
    }
    let mut centroid = alloc::vec![0.0 as Real; f];
    for i in 0..n {
        for (c, v) in centroid.iter_mut().zip(x.row(i)) {
            *c += *v;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n as Real);
    let mut out = Matrix::from_fn(n, f, |i, j| x[(i, j)] - centroid[j]);
    let radius = (0..n)
        .map(|i| sqrt(out.row(i).iter().map(|v| v * v).sum::<Real>()))
        .fold(0.0, |a: Real, b| if b > a { b } else { a });
    if radius > 0.0 {
        out.as_mut_slice().iter_mut().for_each(|v| *v /= radius);
    } else {
        out.fill(0.0);
    }
    out
}
