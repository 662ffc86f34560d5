//! Seeded synthetic vessel surfaces with an attached aneurysm-like bump.
//!
//! Class 0 bumps are smooth spheres; class 1 bumps carry multi-lobed radial
//! displacement. Node labels mark bump membership. The auxiliary vector is
//! 10 pseudo-clinical values followed by the 25 measurements of
//! [`MORPHOLOGY`], taken on the full-resolution millimetre surface.

mod geometry;
mod morphology;

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::LabeledSample;
use crate::mesh::{decimate_mesh, mesh_to_graph, normalize_coordinates, MeshError, TriangleMesh};
use crate::real::{cos, ln, sin, sqrt, Real, PI};

pub use geometry::{BumpShape, BUMP_TOLERANCE};
pub use morphology::{enclosed_volume, morphology, normal_variance, MORPHOLOGY, NUM_MORPHOLOGICAL};

pub const NUM_CLINICAL: usize = 10;

/// Names of the pseudo-clinical values. Age is in decades, blood pressure
/// in units of 100 mmHg, body-mass index in units of 10 kg/m².
pub const CLINICAL: [&str; NUM_CLINICAL] = [
    "age_decades",
    "sex",
    "hypertension",
    "smoking",
    "family_history",
    "multiple_aneurysms",
    "prior_hemorrhage",
    "location",
    "systolic_pressure",
    "body_mass_index",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic dataset configuration: {0}")]
    Config(&'static str),
    #[error("sample {sample}: {source}")]
    Mesh { sample: usize, source: MeshError },
    #[error("sample {0} lost one of the node classes during decimation")]
    MissingClass(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_samples: usize,
    pub target_nodes: usize,
    /// Fraction of class-1 ("ruptured") samples.
    pub class_ratio: Real,
    /// Bump radius range as a multiple of the tube radius.
    pub bump_radius_range: (Real, Real),
    /// Class-1 lobe displacement as a fraction of the bump radius.
    pub lobulation_amplitude: Real,
    pub seed: u64,
    pub n_clinical: usize,
    pub n_morph: usize,
    /// Resolution of the full surface before decimation.
    pub grid_segments: usize,
    pub grid_rings: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_samples: 100,
            target_nodes: 256,
            class_ratio: 0.5,
            bump_radius_range: (0.9, 1.4),
            lobulation_amplitude: 0.25,
            seed: 0,
            n_clinical: NUM_CLINICAL,
            n_morph: NUM_MORPHOLOGICAL,
            grid_segments: 64,
            grid_rings: 48,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.class_ratio) {
            return Err(SynthError::Config("class_ratio must lie in [0, 1]"));
        }
        if self.target_nodes < 64 {
            return Err(SynthError::Config("target_nodes must be at least 64"));
        }
        let (lo, hi) = self.bump_radius_range;
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(SynthError::Config("bump radius range must be positive and ordered"));
        }
        if !(self.lobulation_amplitude >= 0.0) || !self.lobulation_amplitude.is_finite() {
            return Err(SynthError::Config("lobulation_amplitude must be nonnegative"));
        }
        if self.n_clinical > NUM_CLINICAL || self.n_morph > NUM_MORPHOLOGICAL {
            return Err(SynthError::Config("at most 10 clinical and 25 morphological features exist"));
        }
        if self.grid_segments < 8 || self.grid_rings < 4 {
            return Err(SynthError::Config("surface grid is too coarse"));
        }
        if self.grid_segments * self.grid_rings < self.target_nodes {
            return Err(SynthError::Config("surface grid has fewer vertices than target_nodes"));
        }
        Ok(())
    }

    pub fn n_aux(&self) -> usize {
        self.n_clinical + self.n_morph
    }

    /// Number of class-1 samples: `class_ratio · num_samples` rounded half up.
    pub fn num_positive(&self) -> usize {
        let x = self.class_ratio * self.num_samples as Real;
        (crate::real::floor(x + 0.5) as usize).min(self.num_samples)
    }
}

/// Graph labels in sample order: an exact class count, seeded shuffle.
pub fn class_labels(cfg: &SynthConfig) -> Vec<usize> {
    let pos = cfg.num_positive();
    let mut labels: Vec<usize> = (0..cfg.num_samples).map(|i| (i < pos) as usize).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    labels.shuffle(&mut rng);
    labels
}

fn gaussian(rng: &mut ChaCha8Rng) -> Real {
    // Box–Muller; u1 in (0, 1] keeps the logarithm finite.
    let u1: Real = 1.0 - rng.gen::<Real>();
    let u2: Real = rng.gen();
    sqrt(-2.0 * ln(u1)) * cos(2.0 * PI * u2)
}

fn bernoulli(rng: &mut ChaCha8Rng, p: Real) -> Real {
    (rng.gen::<Real>() < p) as u8 as Real
}

/// Pseudo-clinical values with a weak dependence on the class.
pub fn clinical_features(rng: &mut ChaCha8Rng, label: usize) -> [Real; NUM_CLINICAL] {
    let y = label as Real;
    [
        (5.5 + 0.3 * y + 1.2 * gaussian(rng)).clamp(2.0, 9.0),
        bernoulli(rng, 0.6 + 0.05 * y),
        bernoulli(rng, 0.4 + 0.15 * y),
        bernoulli(rng, 0.3 + 0.1 * y),
        bernoulli(rng, 0.1 + 0.05 * y),
        bernoulli(rng, 0.2 + 0.05 * y),
        bernoulli(rng, 0.05 + 0.1 * y),
        rng.gen_range(0..5u8) as Real / 4.0,
        1.3 + 0.05 * y + 0.15 * gaussian(rng),
        2.6 + 0.4 * gaussian(rng),
    ]
}

fn random_unit(rng: &mut ChaCha8Rng) -> [Real; 3] {
    loop {
        let p = [gaussian(rng), gaussian(rng), gaussian(rng)];
        let l = sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        if l > 1e-6 {
            return [p[0] / l, p[1] / l, p[2] / l];
        }
    }
}

/// Random shape for one sample.
pub fn random_shape(rng: &mut ChaCha8Rng, cfg: &SynthConfig, label: usize) -> BumpShape {
    let tube_radius = rng.gen_range(1.2..1.8);
    let tube_length = tube_radius * rng.gen_range(3.5..4.5);
    let (lo, hi) = cfg.bump_radius_range;
    let bump_radius = tube_radius * if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let azimuth: Real = rng.gen_range(0.0..2.0 * PI);
    let radial = [0.0, cos(azimuth), sin(azimuth)];
    let offset = tube_radius + bump_radius * rng.gen_range(0.1..0.5);
    let x0 = tube_radius * rng.gen_range(-0.3..0.3);
    let bump_center = [x0, offset * radial[1], offset * radial[2]];
    let mut lobes = Vec::new();
    if label == 1 {
        let count = rng.gen_range(2..=4);
        while lobes.len() < count {
            let e = random_unit(rng);
            if crate::real::dot3(&e, &radial) > 0.2 {
                lobes.push((e, rng.gen_range(0.6..1.0)));
            }
        }
    }
    BumpShape { tube_radius, tube_length, bump_radius, bump_center, lobes, lobe_amplitude: cfg.lobulation_amplitude }
}

/// Full-resolution surface, its vertex labels and the auxiliary vector of
/// sample `index` before decimation.
pub fn raw_sample(cfg: &SynthConfig, index: usize, label: usize) -> (TriangleMesh, Vec<u8>, Vec<Real>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let shape = random_shape(&mut rng, cfg, label);
    let clinical = clinical_features(&mut rng, label);
    let (mesh, labels) = shape.build(cfg.grid_segments, cfg.grid_rings);
    let morph = morphology(&mesh, &labels);
    let mut aux = Vec::with_capacity(cfg.n_aux());
    aux.extend_from_slice(&clinical[..cfg.n_clinical]);
    aux.extend_from_slice(&morph[..cfg.n_morph]);
    (mesh, labels, aux)
}

/// Sample `index` of the dataset described by `cfg`, given its class.
pub fn generate_sample(cfg: &SynthConfig, index: usize, label: usize) -> Result<LabeledSample, SynthError> {
    let (mesh, labels, aux) = raw_sample(cfg, index, label);
    let (small, kept) = decimate_mesh(&mesh, cfg.target_nodes).map_err(|source| SynthError::Mesh { sample: index, source })?;
    let node_labels: Vec<u8> = kept.iter().map(|&i| labels[i]).collect();
    if !node_labels.contains(&0) || !node_labels.contains(&1) {
        return Err(SynthError::MissingClass(index));
    }
    let graph = normalize_coordinates(&mesh_to_graph(&small));
    let faces = small.faces().to_vec();
    Ok(LabeledSample::new(graph, label, node_labels, aux, faces).expect("generated sample is consistent"))
}

/// The whole dataset, in sample order.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<LabeledSample>, SynthError> {
    cfg.validate()?;
    class_labels(cfg).into_iter().enumerate().map(|(i, y)| generate_sample(cfg, i, y)).collect()
}

/// Mean 1-ring normal variance over the aneurysm nodes of a sample's surface.
pub fn sample_normal_variance(sample: &LabeledSample) -> Real {
    let g = &sample.graph;
    let vertices = (0..g.num_nodes()).map(|i| g.position(i)).collect();
    match TriangleMesh::new(vertices, sample.faces.clone()) {
        Ok(mesh) => normal_variance(&mesh, &sample.node_labels),
        Err(_) => 0.0,
    }
}
