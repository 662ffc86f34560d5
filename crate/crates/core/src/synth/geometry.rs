//! Vessel-with-bump surfaces on a cylindrical grid.

use alloc::vec::Vec;

use crate::mesh::primitives::tube;
use crate::mesh::TriangleMesh;
use crate::real::{acos, cos, dot3, norm3, sqrt, sub3, Real};

/// Shape parameters of one synthetic surface, millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpShape {
    pub tube_radius: Real,
    pub tube_length: Real,
    pub bump_radius: Real,
    pub bump_center: [Real; 3],
    /// Lobe directions (unit) and weights; empty for a smooth bump.
    pub lobes: Vec<([Real; 3], Real)>,
    pub lobe_amplitude: Real,
}

/// Relative height above the tube wall from which a vertex counts as bump.
/// Sphere points lower than this are flattened back onto the wall, so the
/// neck is a small step rather than a tangential blend.
pub const BUMP_TOLERANCE: Real = 0.1;

/// Angular frequency of the lobe pattern.
const LOBE_FREQUENCY: Real = 5.0;

impl BumpShape {
    /// Distance along the ray `origin + t·dir` at which it leaves the sphere.
    fn sphere_exit(&self, origin: &[Real; 3], dir: &[Real; 3]) -> Option<Real> {
        let w = sub3(origin, &self.bump_center);
        let b = dot3(&w, dir);
        let c = dot3(&w, &w) - self.bump_radius * self.bump_radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        Some(-b + sqrt(disc))
    }

    /// Weighted mean of `cos(ω·angle(d, e_k))` over the lobes.
    fn lobe_field(&self, d: &[Real; 3]) -> Real {
        let total: Real = self.lobes.iter().map(|(_, w)| w).sum();
        let sum: Real = self.lobes.iter().map(|(e, w)| w * cos(LOBE_FREQUENCY * acos(dot3(d, e).clamp(-1.0, 1.0)))).sum();
        sum / total
    }

    /// Builds the surface on a `segments x rings` grid. Returns the mesh and
    /// per-vertex bump membership.
    pub fn build(&self, segments: usize, rings: usize) -> (TriangleMesh, Vec<u8>) {
        let base = tube(self.tube_radius, self.tube_length, segments, rings);
        let (mut vertices, faces) = base.into_parts();
        let r0 = self.tube_radius;
        let mut labels = Vec::with_capacity(vertices.len());
        for v in vertices.iter_mut() {
            let origin = [v[0], 0.0, 0.0];
            let dir = [0.0, v[1] / r0, v[2] / r0];
            let radius = match self.sphere_exit(&origin, &dir) {
                Some(t) if t > r0 * (1.0 + BUMP_TOLERANCE) => t,
                _ => r0,
            };
            let on_bump = radius > r0;
            let mut p = [v[0], radius * dir[1], radius * dir[2]];
            if on_bump && !self.lobes.is_empty() {
                let rel = sub3(&p, &self.bump_center);
                let len = norm3(&rel);
                if len > 0.0 {
                    let d = [rel[0] / len, rel[1] / len, rel[2] / len];
                    // Fade the displacement out towards the neck so the seam stays closed.
                    let h = ((radius - r0) / (0.3 * self.bump_radius)).min(1.0);
                    let taper = h * h * (3.0 - 2.0 * h);
                    let s = self.lobe_amplitude * self.bump_radius * self.lobe_field(&d) * taper;
                    for k in 0..3 {
                        p[k] += s * d[k];
                    }
                }
            }
            *v = p;
            labels.push(on_bump as u8);
        }
        (TriangleMesh::new(vertices, faces).expect("grid topology is unchanged"), labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn shape(lobes: Vec<([Real; 3], Real)>) -> BumpShape {
        BumpShape {
            tube_radius: 1.5,
            tube_length: 6.0,
            bump_radius: 1.8,
            bump_center: [0.0, 0.0, 2.0],
            lobes,
            lobe_amplitude: 0.25,
        }
    }

    #[test]
    fn smooth_bump_lies_on_sphere_or_tube() {
        let s = shape(vec![]);
        let (m, labels) = s.build(48, 40);
        assert!(labels.iter().any(|&l| l == 1) && labels.iter().any(|&l| l == 0));
        for (v, &l) in m.vertices().iter().zip(&labels) {
            let r = sqrt(v[1] * v[1] + v[2] * v[2]);
            if l == 1 {
                let d = norm3(&sub3(v, &s.bump_center));
                assert!((d - 1.8).abs() < 1e-9);
            } else {
                assert!((r - 1.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lobes_move_only_bump_vertices() {
        let smooth = shape(vec![]).build(48, 40);
        let lobed = shape(vec![([0.0, 0.0, 1.0], 1.0)]).build(48, 40);
        assert_eq!(smooth.1, lobed.1);
        let mut moved = 0;
        for ((a, b), &l) in smooth.0.vertices().iter().zip(lobed.0.vertices()).zip(&smooth.1) {
            if l == 0 {
                assert_eq!(a, b);
            } else if a != b {
                moved += 1;
            }
        }
        assert!(moved > 10);
    }
}
