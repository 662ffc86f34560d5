//! Triangle-preserving decimation by shortest half-edge collapse.
//!
//! Survivors keep their original positions, so the output vertex set is a
//! subset of the input and per-vertex attributes can be carried over.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{MeshError, TriangleMesh};
use crate::real::{cross3, dist3_sq, dot3, sub3, Real};

#[derive(PartialEq)]
struct Edge {
    len: Real,
    a: usize,
    b: usize,
    stamp: (u32, u32),
}

impl Eq for Edge {}

impl Ord for Edge {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .len
            .partial_cmp(&self.len)
            .unwrap_or(Ordering::Equal)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for Edge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Decimator {
    pos: Vec<[Real; 3]>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vert_faces: Vec<Vec<usize>>,
    alive: Vec<bool>,
    stamp: Vec<u32>,
}

impl Decimator {
    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.vert_faces[v].iter().flat_map(|&f| self.faces[f]).filter(|&w| w != v).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn shared_faces(&self, u: usize, v: usize) -> Vec<usize> {
        self.vert_faces[v].iter().copied().filter(|&f| self.faces[f].contains(&u)).collect()
    }

    fn is_boundary(&self, v: usize) -> bool {
        self.neighbors(v).into_iter().any(|w| self.shared_faces(w, v).len() == 1)
    }

    fn normal(&self, f: &[usize; 3]) -> [Real; 3] {
        let p = &self.pos;
        cross3(&sub3(&p[f[1]], &p[f[0]]), &sub3(&p[f[2]], &p[f[0]]))
    }

    /// Whether `v` can be merged into `u` without breaking manifoldness or flipping faces.
    fn can_collapse(&self, v: usize, u: usize) -> bool {
        let shared = self.shared_faces(u, v);
        if shared.is_empty() || shared.len() > 2 {
            return false;
        }
        let v_boundary = self.is_boundary(v);
        let u_boundary = self.is_boundary(u);
        if v_boundary && !u_boundary {
            return false;
        }
        if v_boundary && u_boundary && shared.len() != 1 {
            return false;
        }
        let mut opposite: Vec<usize> =
            shared.iter().flat_map(|&f| self.faces[f]).filter(|&w| w != u && w != v).collect();
        opposite.sort_unstable();
        let nu = self.neighbors(u);
        let common: Vec<usize> = self.neighbors(v).into_iter().filter(|w| nu.binary_search(w).is_ok()).collect();
        if common != opposite {
            return false;
        }
        for &f in &self.vert_faces[v] {
            let face = self.faces[f];
            if face.contains(&u) {
                continue;
            }
            let moved = face.map(|w| if w == v { u } else { w });
            let (before, after) = (self.normal(&face), self.normal(&moved));
            if dot3(&before, &after) <= 0.0 || dot3(&after, &after) == 0.0 {
                return false;
            }
        }
        true
    }

    fn collapse(&mut self, v: usize, u: usize) {
        let incident = core::mem::take(&mut self.vert_faces[v]);
        for f in incident {
            if self.faces[f].contains(&u) {
                self.face_alive[f] = false;
                for w in self.faces[f] {
                    if w != v {
                        self.vert_faces[w].retain(|&g| g != f);
                    }
                }
            } else {
                for w in self.faces[f].iter_mut() {
                    if *w == v {
                        *w = u;
                    }
                }
                self.vert_faces[u].push(f);
            }
        }
        self.alive[v] = false;
        self.stamp[u] += 1;
    }

    fn push_edges_of(&self, u: usize, heap: &mut BinaryHeap<Edge>) {
        for w in self.neighbors(u) {
            let (a, b) = (u.min(w), u.max(w));
            heap.push(Edge { len: dist3_sq(&self.pos[a], &self.pos[b]), a, b, stamp: (self.stamp[a], self.stamp[b]) });
        }
    }
}

/// Reduces `mesh` to exactly `target` vertices.
///
/// Returns the decimated mesh and, for each output vertex, its index in the input.
pub fn decimate_mesh(mesh: &TriangleMesh, target: usize) -> Result<(TriangleMesh, Vec<usize>), MeshError> {
    if target < 4 {
        return Err(MeshError::TargetTooSmall(target));
    }
    let n = mesh.num_vertices();
    if n < target {
        return Err(MeshError::Upsample { have: n, want: target });
    }
    let mut d = Decimator {
        pos: mesh.vertices().to_vec(),
        faces: mesh.faces().to_vec(),
        face_alive: vec![true; mesh.faces().len()],
        vert_faces: vec![Vec::new(); n],
        alive: vec![true; n],
        stamp: vec![0; n],
    };
    for (fi, f) in d.faces.iter().enumerate() {
        for &v in f {
            d.vert_faces[v].push(fi);
        }
    }
    let mut remaining = n;
    let mut heap = BinaryHeap::new();
    while remaining > target {
        heap.clear();
        for u in (0..n).filter(|&u| d.alive[u]) {
            for w in d.neighbors(u).into_iter().filter(|&w| w > u) {
                heap.push(Edge { len: dist3_sq(&d.pos[u], &d.pos[w]), a: u, b: w, stamp: (d.stamp[u], d.stamp[w]) });
            }
        }
        let before = remaining;
        while remaining > target {
            let Some(e) = heap.pop() else { break };
            if !d.alive[e.a] || !d.alive[e.b] || e.stamp != (d.stamp[e.a], d.stamp[e.b]) {
                continue;
            }
            // Prefer dropping the higher index; fall back to the other direction.
            let order = [(e.b, e.a), (e.a, e.b)];
            if let Some(&(v, u)) = order.iter().find(|&&(v, u)| d.can_collapse(v, u)) {
                d.collapse(v, u);
                remaining -= 1;
                d.push_edges_of(u, &mut heap);
            }
        }
        if remaining == before {
            return Err(MeshError::DecimationStalled(remaining));
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| d.alive[i]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &i) in kept.iter().enumerate() {
        new_index[i] = k;
    }
    let vertices = kept.iter().map(|&i| d.pos[i]).collect();
    let faces = d
        .faces
        .iter()
        .zip(&d.face_alive)
        .filter(|(_, &a)| a)
        .map(|(f, _)| f.map(|w| new_index[w]))
        .collect();
    Ok((TriangleMesh::new(vertices, faces)?, kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_to_graph, primitives};

    #[test]
    fn icosphere_decimates_to_closed_manifold() {
        let m = primitives::icosphere(3);
        let (out, src) = decimate_mesh(&m, 200).unwrap();
        assert_eq!(out.num_vertices(), 200);
        assert_eq!(src.len(), 200);
        // Closed genus-0 surface: V - E + F = 2.
        let g = mesh_to_graph(&out);
        let (v, e, f) = (200i64, g.adjacency().num_edges() as i64, out.faces().len() as i64);
        assert_eq!(v - e + f, 2);
        assert!(g.adjacency().is_connected());
    }

    #[test]
    fn open_tube_keeps_boundary_and_connectivity() {
        let m = primitives::tube(1.0, 4.0, 24, 20);
        let (out, src) = decimate_mesh(&m, 128).unwrap();
        assert_eq!(out.num_vertices(), 128);
        let g = mesh_to_graph(&out);
        assert!(g.adjacency().is_connected());
        for (i, &s) in src.iter().enumerate() {
            assert_eq!(out.vertices()[i], m.vertices()[s]);
        }
        // Every edge borders one or two faces.
        for (a, b) in out.edges() {
            let c = out.faces().iter().filter(|f| f.contains(&a) && f.contains(&b)).count();
            assert!(c == 1 || c == 2);
        }
    }

    #[test]
    fn no_upsampling() {
        let m = primitives::icosahedron();
        assert!(matches!(decimate_mesh(&m, 20), Err(MeshError::Upsample { .. })));
    }
}
