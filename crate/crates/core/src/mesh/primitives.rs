//! Procedural meshes: icosahedron, subdivided icosphere, open tube.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::TriangleMesh;
use crate::real::{cos, sin, sqrt, Real, PI};

/// Regular icosahedron inscribed in the unit sphere (12 vertices, 20 faces).
pub fn icosahedron() -> TriangleMesh {
    let t = (1.0 + sqrt(5.0)) / 2.0;
    let raw: [[Real; 3]; 12] = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let vertices = raw.iter().map(unit).collect();
    let faces = alloc::vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh::new(vertices, faces).expect("static icosahedron is valid")
}

/// Icosahedron subdivided `levels` times, projected to the unit sphere.
///
/// Vertex count is `10 * 4^levels + 2`.
pub fn icosphere(levels: u32) -> TriangleMesh {
    let (mut vertices, mut faces) = icosahedron().into_parts();
    for _ in 0..levels {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    vertices.push(unit(&[pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]]));
                    vertices.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }
    TriangleMesh::new(vertices, faces).expect("subdivision keeps faces valid")
}

/// Open cylinder along the x axis, `rings` cross-sections of `segments` vertices.
///
/// Vertex `ring * segments + s` sits at axial position `x` running from
/// `-length/2` to `length/2` and azimuth `2π s / segments`.
pub fn tube(radius: Real, length: Real, segments: usize, rings: usize) -> TriangleMesh {
    assert!(segments >= 3 && rings >= 2);
    let mut vertices = Vec::with_capacity(segments * rings);
    for r in 0..rings {
        let x = -length / 2.0 + length * r as Real / (rings - 1) as Real;
        for s in 0..segments {
            let theta = 2.0 * PI * s as Real / segments as Real;
            vertices.push([x, radius * cos(theta), radius * sin(theta)]);
        }
    }
    let mut faces = Vec::with_capacity(2 * segments * (rings - 1));
    for r in 0..rings - 1 {
        for s in 0..segments {
            let a = r * segments + s;
            let b = r * segments + (s + 1) % segments;
            let c = a + segments;
            let d = b + segments;
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("tube grid is valid")
}

fn unit(p: &[Real; 3]) -> [Real; 3] {
    let l = sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    [p[0] / l, p[1] / l, p[2] / l]
}
