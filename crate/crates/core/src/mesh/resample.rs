//! Fixed node budget: farthest-point subsampling with k-nearest-neighbour
//! reconnection, or shortest-edge graph contraction.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MeshError;
use crate::graph::{SparseAdjacency, SurfaceGraph};
use crate::matrix::Matrix;
use crate::real::{dist3_sq, Real};

/// Neighbours per node when rebuilding edges after subsampling.
pub const KNN_NEIGHBORS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleStrategy {
    ErrorIfMismatch,
    EdgeCollapseDecimate,
    FarthestPointKnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResampleSpec {
    pub target_nodes: usize,
    pub strategy: ResampleStrategy,
    pub seed: u64,
}

impl Default for ResampleSpec {
    fn default() -> Self {
        Self { target_nodes: 1024, strategy: ResampleStrategy::FarthestPointKnn, seed: 0 }
    }
}

/// Resampled graph plus, for each output node, the input node it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub graph: SurfaceGraph,
    pub source_nodes: Vec<usize>,
}

pub fn resample(g: &SurfaceGraph, spec: &ResampleSpec) -> Result<SurfaceGraph, MeshError> {
    resample_indexed(g, spec).map(|r| r.graph)
}

/// Like [`resample`], also reporting which input node each output node keeps.
///
/// Output node features are copied from the source node, so per-node
/// labels can be carried across by indexing with `source_nodes`.
pub fn resample_indexed(g: &SurfaceGraph, spec: &ResampleSpec) -> Result<Resampled, MeshError> {
    if spec.target_nodes < 4 {
        return Err(MeshError::TargetTooSmall(spec.target_nodes));
    }
    let n = g.num_nodes();
    if n == spec.target_nodes {
        return Ok(Resampled { graph: g.clone(), source_nodes: (0..n).collect() });
    }
    match spec.strategy {
        ResampleStrategy::ErrorIfMismatch => {
            Err(MeshError::NodeCountMismatch { expected: spec.target_nodes, found: n })
        }
        _ if n < spec.target_nodes => Err(MeshError::Upsample { have: n, want: spec.target_nodes }),
        _ if g.num_features() < 3 => Err(MeshError::NotSpatial),
        ResampleStrategy::FarthestPointKnn => Ok(farthest_point_knn(g, spec.target_nodes, spec.seed)),
        ResampleStrategy::EdgeCollapseDecimate => Ok(collapse_shortest_edges(g, spec.target_nodes)),
    }
}

fn farthest_point_knn(g: &SurfaceGraph, target: usize, seed: u64) -> Resampled {
    let n = g.num_nodes();
    let pos: Vec<[Real; 3]> = (0..n).map(|i| g.position(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(target);
    let mut nearest = vec![Real::INFINITY; n];
    let mut current = rng.gen_range(0..n);
    for _ in 0..target {
        chosen.push(current);
        nearest[current] = -1.0;
        let mut best = (Real::NEG_INFINITY, usize::MAX);
        for i in 0..n {
            if nearest[i] < 0.0 {
                continue;
            }
            let d = dist3_sq(&pos[i], &pos[current]);
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > best.0 {
                best = (nearest[i], i);
            }
        }
        current = best.1;
    }
    chosen.sort_unstable();

    let kept: Vec<[Real; 3]> = chosen.iter().map(|&i| pos[i]).collect();
    let adjacency = knn_connected(&kept, KNN_NEIGHBORS);
    let features = Matrix::from_fn(target, g.num_features(), |i, j| g.features()[(chosen[i], j)]);
    Resampled {
        graph: SurfaceGraph::new(features, adjacency).expect("knn graph is simple"),
        source_nodes: chosen,
    }
}

/// Symmetrised k-nearest-neighbour graph, with closest-pair bridges added
/// until it forms a single component.
pub(crate) fn knn_connected(pos: &[[Real; 3]], k: usize) -> SparseAdjacency {
    let n = pos.len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cand: Vec<(Real, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i).map(|j| (dist3_sq(&pos[i], &pos[j]), j)));
        let take = k.min(cand.len());
        if take == 0 {
            continue;
        }
        cand.select_nth_unstable_by(take - 1, cmp_dist_index);
        for &(_, j) in &cand[..take] {
            nbrs[i].push(j);
            nbrs[j].push(i);
        }
    }
    let mut adj = SparseAdjacency::from_neighbor_lists(nbrs.clone());
    loop {
        let (comp, count) = adj.connected_components();
        if count <= 1 {
            return adj;
        }
        // Join component 0 to its nearest outside node.
        let mut best = (Real::INFINITY, 0, 0);
        for a in (0..n).filter(|&a| comp[a] == 0) {
            for b in (0..n).filter(|&b| comp[b] != 0) {
                let d = dist3_sq(&pos[a], &pos[b]);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        nbrs[best.1].push(best.2);
        nbrs[best.2].push(best.1);
        adj = SparseAdjacency::from_neighbor_lists(nbrs.clone());
    }
}

fn cmp_dist_index(a: &(Real, usize), b: &(Real, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

#[derive(PartialEq)]
struct Candidate {
    len: Real,
    a: usize,
    b: usize,
    stamp: (u32, u32),
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Min-heap on length, then on endpoints.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .len
            .partial_cmp(&self.len)
            .unwrap_or(Ordering::Equal)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Repeatedly merges the shortest edge into its lower-index endpoint, which
/// keeps its position. Contraction preserves connectivity.
fn collapse_shortest_edges(g: &SurfaceGraph, target: usize) -> Resampled {
    let n = g.num_nodes();
    let pos: Vec<[Real; 3]> = (0..n).map(|i| g.position(i)).collect();
    let mut nbrs: Vec<Vec<usize>> = (0..n).map(|i| g.adjacency().neighbors(i).to_vec()).collect();
    let mut alive = vec![true; n];
    let mut stamp = vec![0u32; n];
    let mut heap = BinaryHeap::new();
    for (a, b) in g.adjacency().edges() {
        heap.push(Candidate { len: dist3_sq(&pos[a], &pos[b]), a, b, stamp: (0, 0) });
    }
    let mut remaining = n;
    while remaining > target {
        let Some(c) = heap.pop() else {
            // Remaining components have no edges left; merge isolated nodes by proximity.
            let live: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
            let mut best = (Real::INFINITY, 0, 0);
            for (x, &a) in live.iter().enumerate() {
                for &b in &live[x + 1..] {
                    let d = dist3_sq(&pos[a], &pos[b]);
                    if d < best.0 {
                        best = (d, a, b);
                    }
                }
            }
            heap.push(Candidate { len: best.0, a: best.1, b: best.2, stamp: (stamp[best.1], stamp[best.2]) });
            nbrs[best.1].push(best.2);
            nbrs[best.2].push(best.1);
            continue;
        };
        if !alive[c.a] || !alive[c.b] || c.stamp != (stamp[c.a], stamp[c.b]) {
            continue;
        }
        let (keep, drop) = (c.a.min(c.b), c.a.max(c.b));
        alive[drop] = false;
        remaining -= 1;
        let moved = core::mem::take(&mut nbrs[drop]);
        for &m in &moved {
            nbrs[m].retain(|&x| x != drop);
            if m != keep && !nbrs[keep].contains(&m) {
                nbrs[keep].push(m);
                nbrs[m].push(keep);
            }
        }
        nbrs[keep].retain(|&x| x != drop);
        stamp[keep] += 1;
        for &m in &nbrs[keep] {
            let (a, b) = (keep.min(m), keep.max(m));
            heap.push(Candidate { len: dist3_sq(&pos[a], &pos[b]), a, b, stamp: (stamp[a], stamp[b]) });
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &i) in kept.iter().enumerate() {
        new_index[i] = k;
    }
    let lists = kept.iter().map(|&i| nbrs[i].iter().map(|&j| new_index[j]).collect()).collect();
    let adjacency = SparseAdjacency::from_neighbor_lists(lists);
    let features = Matrix::from_fn(kept.len(), g.num_features(), |i, j| g.features()[(kept[i], j)]);
    Resampled { graph: SurfaceGraph::new(features, adjacency).expect("contraction is simple"), source_nodes: kept }
}
