//! Labelled training samples.

use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::SurfaceGraph;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("graph has {nodes} nodes but {labels} node labels were given")]
    LabelCount { nodes: usize, labels: usize },
    #[error("node label {0} is not 0 or 1")]
    NodeLabel(u8),
    #[error("auxiliary feature {0} is not finite")]
    NonFiniteAux(usize),
    #[error("triangle {0} references a node outside the graph")]
    Face(usize),
}

/// A surface graph with its graph-level class, per-node classes and
/// auxiliary (clinical + morphological) feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub graph: SurfaceGraph,
    /// 0 = unruptured, 1 = ruptured.
    pub graph_label: usize,
    /// Per node: 0 = vessel, 1 = aneurysm.
    pub node_labels: Vec<u8>,
    pub aux: Vec<Real>,
    /// Surface triangulation the graph was built from; empty when unknown.
    pub faces: Vec<[usize; 3]>,
}

impl LabeledSample {
    pub fn new(
        graph: SurfaceGraph,
        graph_label: usize,
        node_labels: Vec<u8>,
        aux: Vec<Real>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self, SampleError> {
        let n = graph.num_nodes();
        if node_labels.len() != n {
            return Err(SampleError::LabelCount { nodes: n, labels: node_labels.len() });
        }
        if let Some(&bad) = node_labels.iter().find(|&&l| l > 1) {
            return Err(SampleError::NodeLabel(bad));
        }
        if let Some(i) = aux.iter().position(|v| !v.is_finite()) {
            return Err(SampleError::NonFiniteAux(i));
        }
        if let Some(i) = faces.iter().position(|f| f.iter().any(|&v| v >= n)) {
            return Err(SampleError::Face(i));
        }
        Ok(Self { graph, graph_label, node_labels, aux, faces })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn foreground_count(&self) -> usize {
        self.node_labels.iter().filter(|&&l| l == 1).count()
    }
}

/// Run-length encoding of a label sequence as `(value, run)` pairs.
pub fn encode_runs(labels: &[u8]) -> Vec<(u8, usize)> {
    let mut runs: Vec<(u8, usize)> = Vec::new();
    for &l in labels {
        match runs.last_mut() {
            Some((v, n)) if *v == l => *n += 1,
            _ => runs.push((l, 1)),
        }
    }
    runs
}

pub fn decode_runs(runs: &[(u8, usize)]) -> Vec<u8> {
    runs.iter().flat_map(|&(v, n)| core::iter::repeat(v).take(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn runs_small() {
        assert_eq!(encode_runs(&[0, 0, 1, 1, 1, 0]), alloc::vec![(0, 2), (1, 3), (0, 1)]);
        assert!(encode_runs(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn runs_roundtrip(labels in proptest::collection::vec(0u8..2, 0..200)) {
            let runs = encode_runs(&labels);
            prop_assert!(runs.windows(2).all(|w| w[0].0 != w[1].0));
            prop_assert_eq!(decode_runs(&runs), labels);
        }
    }
}
