//! Dataset directories: `manifest.jsonl` plus one `mesh_<idx>.off` per sample.
//!
//! Each manifest line is a JSON object with fields `mesh` (file name
//! relative to the directory), `label`, `node_labels_rle` (`[[value, run], ...]`)
//! and `aux`. A mesh file without faces yields a graph without edges.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use graphnet_core::dataset::{decode_runs, encode_runs, SampleError};
use graphnet_core::mesh::{mesh_to_graph, TriangleMesh};
use graphnet_core::{LabeledSample, Real};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meshio::{format_off, load_mesh, MeshFormat, MeshIoError};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {msg}")]
    Row { path: String, line: usize, msg: String },
    #[error("{path}: {source}")]
    Mesh { path: String, source: MeshIoError },
    #[error("{path}: mesh has {nodes} vertices but the manifest lists {labels} node labels")]
    NodeCount { path: String, nodes: usize, labels: usize },
    #[error("{path}: {source}")]
    Sample { path: String, source: SampleError },
    #[error("{0}: manifest lists no samples")]
    Empty(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    mesh: String,
    label: usize,
    node_labels_rle: Vec<(u8, usize)>,
    aux: Vec<Real>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ManifestError + '_ {
    move |source| ManifestError::Io { path: path.display().to_string(), source }
}

pub fn mesh_file_name(index: usize) -> String {
    format!("mesh_{index:04}.off")
}

/// Writes `samples` into `dir`, creating it if needed. Output bytes depend
/// only on the samples.
pub fn write_manifest(samples: &[LabeledSample], dir: &Path) -> Result<(), ManifestError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = String::new();
    for (i, s) in samples.iter().enumerate() {
        let name = mesh_file_name(i);
        let vertices = (0..s.num_nodes()).map(|k| s.graph.position(k)).collect();
        let mesh = TriangleMesh::new(vertices, s.faces.clone())
            .map_err(|e| ManifestError::Mesh { path: name.clone(), source: e.into() })?;
        let path = dir.join(&name);
        fs::write(&path, format_off(&mesh)).map_err(io_err(&path))?;
        let row = Row { mesh: name, label: s.graph_label, node_labels_rle: encode_runs(&s.node_labels), aux: s.aux.clone() };
        manifest.push_str(&serde_json::to_string(&row).expect("rows always serialize"));
        manifest.push('\n');
    }
    let path = dir.join(MANIFEST_FILE);
    let mut f = fs::File::create(&path).map_err(io_err(&path))?;
    f.write_all(manifest.as_bytes()).map_err(io_err(&path))
}

/// Loads the dataset in `dir`. Coordinates are taken as stored; no
/// resampling or normalisation is applied.
pub fn load_manifest(dir: &Path) -> Result<Vec<LabeledSample>, ManifestError> {
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let file = fs::File::open(&path).map_err(io_err(&path))?;
    let shown = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |msg: String| ManifestError::Row { path: shown.clone(), line: i + 1, msg };
        let row: Row = serde_json::from_str(&line).map_err(|e| row_err(e.to_string()))?;
        if row.label > 1 {
            return Err(row_err(format!("label {} is not 0 or 1", row.label)));
        }
        let mesh_path = dir.join(&row.mesh);
        let mesh_shown = mesh_path.display().to_string();
        let mesh = load_mesh(&mesh_path, MeshFormat::Off).map_err(|source| ManifestError::Mesh { path: mesh_shown.clone(), source })?;
        let labels = decode_runs(&row.node_labels_rle);
        if labels.len() != mesh.num_vertices() {
            return Err(ManifestError::NodeCount { path: mesh_shown, nodes: mesh.num_vertices(), labels: labels.len() });
        }
        let graph = mesh_to_graph(&mesh);
        let faces = mesh.faces().to_vec();
        let sample = LabeledSample::new(graph, row.label, labels, row.aux, faces)
            .map_err(|source| ManifestError::Sample { path: mesh_shown, source })?;
        out.push(sample);
    }
    if out.is_empty() {
        return Err(ManifestError::Empty(shown));
    }
    Ok(out)
}
