//! Shape measurements of a vessel-with-aneurysm surface.
//!
//! The vessel axis is the x axis. Inputs are the raw (millimetre) mesh and
//! per-vertex aneurysm membership.

use alloc::vec::Vec;

use crate::graph::SparseAdjacency;
use crate::mesh::TriangleMesh;
use crate::real::{cbrt, cross3, dist3, dot3, norm3, sqrt, sub3, Real, PI};

pub const NUM_MORPHOLOGICAL: usize = 25;

/// Name and length exponent of every measurement: scaling the mesh by `s`
/// scales feature `i` by `s^MORPHOLOGY[i].1`.
pub const MORPHOLOGY: [(&str, i32); NUM_MORPHOLOGICAL] = [
    ("vessel_mean_diameter", 1),
    ("vessel_diameter_std", 1),
    ("vessel_length", 1),
    ("aneurysm_max_diameter", 1),
    ("aneurysm_height", 1),
    ("aneurysm_width", 1),
    ("neck_width", 1),
    ("neck_offset", 1),
    ("dome_offset", 1),
    ("aneurysm_rms_radius", 1),
    ("aneurysm_area", 2),
    ("vessel_area", 2),
    ("neck_area", 2),
    ("total_volume", 3),
    ("aneurysm_volume", 3),
    ("aspect_ratio", 0),
    ("size_ratio", 0),
    ("diameter_to_width_ratio", 0),
    ("height_to_width_ratio", 0),
    ("bottleneck_factor", 0),
    ("sphericity", 0),
    ("area_ratio", 0),
    ("aneurysm_node_fraction", 0),
    ("normal_variance", 0),
    ("radius_variation", 0),
];

fn ratio(a: Real, b: Real) -> Real {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

fn centroid(points: impl Iterator<Item = [Real; 3]>) -> [Real; 3] {
    let mut c = [0.0; 3];
    let mut n = 0usize;
    for p in points {
        for k in 0..3 {
            c[k] += p[k];
        }
        n += 1;
    }
    if n > 0 {
        c.iter_mut().for_each(|v| *v /= n as Real);
    }
    c
}

fn max_pairwise(points: &[[Real; 3]]) -> Real {
    let mut best = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = dist3(&points[i], &points[j]);
            if d > best {
                best = d;
            }
        }
    }
    best
}

/// `1 − |mean unit normal|` over each vertex's closed 1-ring, averaged over
/// the vertices with `mask` set. Zero for flat patches.
pub fn normal_variance(mesh: &TriangleMesh, mask: &[u8]) -> Real {
    let normals = mesh.vertex_normals();
    let adj = SparseAdjacency::from_undirected_edges(mesh.num_vertices(), mesh.edges()).expect("mesh edges are simple");
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in (0..mesh.num_vertices()).filter(|&i| mask[i] == 1) {
        let mut m = normals[i];
        let ring = adj.neighbors(i);
        for &j in ring {
            for k in 0..3 {
                m[k] += normals[j][k];
            }
        }
        let k = (ring.len() + 1) as Real;
        sum += 1.0 - norm3(&m) / k;
        count += 1;
    }
    ratio(sum, count as Real)
}

/// Enclosed volume of a tube-like surface open at both x ends, by the
/// divergence theorem with the field `(0, y, z) / 2`, which has no flux
/// through planar end caps.
pub fn enclosed_volume(mesh: &TriangleMesh) -> Real {
    let v = mesh.vertices();
    let mut vol = 0.0;
    for f in mesh.faces() {
        let n = cross3(&sub3(&v[f[1]], &v[f[0]]), &sub3(&v[f[2]], &v[f[0]]));
        let cy = (v[f[0]][1] + v[f[1]][1] + v[f[2]][1]) / 3.0;
        let cz = (v[f[0]][2] + v[f[1]][2] + v[f[2]][2]) / 3.0;
        // n has length 2·area, so the half from the field and the half from the area cancel.
        vol += 0.25 * (cy * n[1] + cz * n[2]);
    }
    vol.abs()
}

/// All 25 measurements, in the order of [`MORPHOLOGY`].
pub fn morphology(mesh: &TriangleMesh, aneurysm: &[u8]) -> [Real; NUM_MORPHOLOGICAL] {
    let v = mesh.vertices();
    let n = v.len();
    assert_eq!(aneurysm.len(), n);
    let is_a = |i: usize| aneurysm[i] == 1;
    let axis_dist = |p: &[Real; 3]| sqrt(p[1] * p[1] + p[2] * p[2]);

    let vessel: Vec<usize> = (0..n).filter(|&i| !is_a(i)).collect();
    let sac: Vec<usize> = (0..n).filter(|&i| is_a(i)).collect();
    let radii: Vec<Real> = vessel.iter().map(|&i| axis_dist(&v[i])).collect();
    let mean_r = ratio(radii.iter().sum(), radii.len() as Real);
    let var_r = ratio(radii.iter().map(|r| (r - mean_r) * (r - mean_r)).sum(), radii.len() as Real);
    let vessel_diameter = 2.0 * mean_r;
    let (xmin, xmax) = vessel.iter().fold((Real::INFINITY, Real::NEG_INFINITY), |(lo, hi), &i| (lo.min(v[i][0]), hi.max(v[i][0])));
    let vessel_length = if vessel.is_empty() { 0.0 } else { xmax - xmin };

    let adj = SparseAdjacency::from_undirected_edges(n, mesh.edges()).expect("mesh edges are simple");
    let neck: Vec<usize> = sac.iter().copied().filter(|&i| adj.neighbors(i).iter().any(|&j| !is_a(j))).collect();
    let sac_pts: Vec<[Real; 3]> = sac.iter().map(|&i| v[i]).collect();
    let neck_pts: Vec<[Real; 3]> = neck.iter().map(|&i| v[i]).collect();
    let sac_c = centroid(sac_pts.iter().copied());
    let neck_c = centroid(neck_pts.iter().copied());
    let mut up = sub3(&sac_c, &neck_c);
    let up_len = norm3(&up);
    if up_len > 0.0 {
        up.iter_mut().for_each(|c| *c /= up_len);
    }
    let mut height: Real = 0.0;
    let mut half_width: Real = 0.0;
    for p in &sac_pts {
        let rel = sub3(p, &neck_c);
        let along = dot3(&rel, &up);
        height = height.max(along);
        let perp = [rel[0] - along * up[0], rel[1] - along * up[1], rel[2] - along * up[2]];
        half_width = half_width.max(norm3(&perp));
    }
    let width = 2.0 * half_width;
    let max_diameter = max_pairwise(&sac_pts);
    let neck_width = max_pairwise(&neck_pts);
    let neck_offset = axis_dist(&neck_c);
    let dists: Vec<Real> = sac_pts.iter().map(|p| dist3(p, &sac_c)).collect();
    let mean_d = ratio(dists.iter().sum(), dists.len() as Real);
    let rms = sqrt(ratio(dists.iter().map(|d| d * d).sum(), dists.len() as Real));
    let sd_d = sqrt(ratio(dists.iter().map(|d| (d - mean_d) * (d - mean_d)).sum(), dists.len() as Real));

    let (mut a_area, mut v_area) = (0.0, 0.0);
    for f in mesh.faces() {
        let area = 0.5 * norm3(&cross3(&sub3(&v[f[1]], &v[f[0]]), &sub3(&v[f[2]], &v[f[0]])));
        if f.iter().filter(|&&i| is_a(i)).count() >= 2 {
            a_area += area;
        } else {
            v_area += area;
        }
    }
    let neck_area = PI * neck_width * neck_width / 4.0;
    let total_volume = enclosed_volume(mesh);
    let aneurysm_volume = (total_volume - PI * mean_r * mean_r * vessel_length).max(0.0);
    let closed_area = a_area + neck_area;
    let sphericity = ratio(cbrt(PI) * cbrt(6.0 * aneurysm_volume) * cbrt(6.0 * aneurysm_volume), closed_area);

    [
        vessel_diameter,
        2.0 * sqrt(var_r),
        vessel_length,
        max_diameter,
        height,
        width,
        neck_width,
        neck_offset,
        dist3(&sac_c, &neck_c),
        rms,
        a_area,
        v_area,
        neck_area,
        total_volume,
        aneurysm_volume,
        ratio(height, neck_width),
        ratio(max_diameter, vessel_diameter),
        ratio(max_diameter, width),
        ratio(height, width),
        ratio(width, neck_width),
        sphericity,
        ratio(a_area, v_area),
        ratio(sac.len() as Real, n as Real),
        normal_variance(mesh, aneurysm),
        ratio(sd_d, mean_d),
    ]
}
