#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use graphnet::core::mesh::primitives::icosphere;
use graphnet::core::mesh::mesh_to_graph;
use graphnet::core::nn::{GraphNetConfig, GraphNetModel};
use graphnet::core::{LabeledSample, Matrix, SurfaceGraph};
use graphnet::manifest::write_manifest;

pub const SMALL_MODEL: [&str; 10] = [
    "--set", "enc1=8,8", "--set", "enc2=8,16,32", "--set", "cls_hidden=16,8", "--set", "seg1=16,8,8", "--set", "seg2_hidden=8",
];

pub fn graphnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphnet")).args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn gen_small(dir: &Path, samples: usize, seed: u64) {
    let out = graphnet(&["gen", "--samples", &samples.to_string(), "--seed", &seed.to_string(), "--out", s(dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

/// Pointnet-mode model that is exactly right on [`perfect_dataset`]:
/// node class from the sign of x, graph class from the sign of aux[0].
pub fn perfect_model() -> GraphNetModel {
    let cfg = GraphNetConfig {
        in_features: 3,
        enc_block1: vec![2],
        enc_block2: vec![1],
        cls_head: vec![2],
        seg_block1: vec![2],
        seg_block2: vec![2],
        n_aux: 1,
        pointnet_mode: true,
        first_layer_only_adjacency: true,
        expected_nodes: None,
    };
    let mats = vec![
        Matrix::from_rows(&[[1.0, -1.0], [0.0, 0.0], [0.0, 0.0]]),
        Matrix::zeros(2, 1),
        Matrix::from_rows(&[[0.0, 0.0], [-1.0, 1.0]]),
        Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
        Matrix::from_rows(&[[-1.0, 1.0], [1.0, -1.0]]),
    ];
    let mut it = mats.into_iter();
    GraphNetModel::from_weight_fn(cfg, |_, _| it.next().unwrap()).unwrap()
}

pub fn fixture_mesh() -> graphnet::core::TriangleMesh {
    let m = icosphere(1);
    let (mut v, f) = m.into_parts();
    // Keep every vertex off the x = 0 plane.
    v.iter_mut().for_each(|p| p[0] += 0.05);
    graphnet::core::TriangleMesh::new(v, f).unwrap()
}

pub fn perfect_dataset(count: usize) -> Vec<LabeledSample> {
    let mesh = fixture_mesh();
    let graph: SurfaceGraph = mesh_to_graph(&mesh);
    let node_labels: Vec<u8> = mesh.vertices().iter().map(|p| (p[0] > 0.0) as u8).collect();
    (0..count)
        .map(|i| {
            let label = i % 2;
            let sign = if label == 1 { 1.0 } else { -1.0 };
            let aux = vec![sign * (0.5 + 0.1 * i as f64)];
            LabeledSample::new(graph.clone(), label, node_labels.clone(), aux, mesh.faces().to_vec()).unwrap()
        })
        .collect()
}

pub fn write_perfect_fixture(dir: &Path, count: usize) {
    write_manifest(&perfect_dataset(count), dir).unwrap();
}
