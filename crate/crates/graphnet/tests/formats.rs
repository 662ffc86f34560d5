mod common;

use std::fs;

use graphnet::core::metrics::evaluate;
use graphnet::core::nn::{decode_checkpoint, encode_checkpoint, GraphNetConfig, GraphNetModel};
use graphnet::core::synth::{generate, SynthConfig};
use graphnet::core::TriangleMesh;
use graphnet::manifest::{load_manifest, mesh_file_name, write_manifest, ManifestError, MANIFEST_FILE};
use graphnet::meshio::{format_obj, format_off, load_mesh, parse_obj, parse_off, save_mesh, MeshFormat};
use graphnet::report::{parse_report, report_json, roc_csv};
use proptest::prelude::*;
use tempfile::tempdir;

fn small_synth(n: usize) -> SynthConfig {
    SynthConfig { num_samples: n, target_nodes: 128, grid_segments: 40, grid_rings: 30, seed: 3, ..Default::default() }
}

#[test]
fn manifest_roundtrips_samples_exactly() {
    let t = tempdir().unwrap();
    let data = generate(&small_synth(5)).unwrap();
    write_manifest(&data, t.path()).unwrap();
    assert_eq!(load_manifest(t.path()).unwrap(), data);
    assert!(t.path().join(mesh_file_name(4)).exists());
}

#[test]
fn manifest_reports_missing_and_malformed_parts() {
    let t = tempdir().unwrap();
    assert!(matches!(load_manifest(t.path()), Err(ManifestError::Io { .. })));
    write_manifest(&generate(&small_synth(3)).unwrap(), t.path()).unwrap();
    fs::remove_file(t.path().join(mesh_file_name(1))).unwrap();
    let err = load_manifest(t.path()).unwrap_err().to_string();
    assert!(err.contains(&mesh_file_name(1)), "{err}");

    let text = fs::read_to_string(t.path().join(MANIFEST_FILE)).unwrap();
    let first = text.lines().next().unwrap().replacen('{', "{\"extra\":1,", 1);
    fs::write(t.path().join(MANIFEST_FILE), first + "\n").unwrap();
    assert!(matches!(load_manifest(t.path()), Err(ManifestError::Row { line: 1, .. })));
    fs::write(t.path().join(MANIFEST_FILE), "").unwrap();
    assert!(matches!(load_manifest(t.path()), Err(ManifestError::Empty(_))));
}

#[test]
fn checkpoint_file_roundtrip_preserves_predictions() {
    let t = tempdir().unwrap();
    let data = generate(&small_synth(4)).unwrap();
    let mut cfg = GraphNetConfig::standard(35, 2, 2);
    cfg.enc_block2 = vec![64, 128, 256];
    let mut model = GraphNetModel::init(cfg, 5).unwrap();
    model.fit_aux_standardization(data.iter().map(|s| &s.aux[..])).unwrap();
    let path = t.path().join("m.gnet");
    fs::write(&path, encode_checkpoint(&model)).unwrap();
    let back = decode_checkpoint(&fs::read(&path).unwrap()).unwrap();
    assert_eq!(back, model);
    let a = evaluate(&model, &data, || 0.0).unwrap();
    let b = evaluate(&back, &data, || 0.0).unwrap();
    assert!(a.same_results(&b));
    let mut bytes = fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    assert!(decode_checkpoint(&bytes).is_err());
}

#[test]
fn report_json_parses_back() {
    let data = generate(&small_synth(4)).unwrap();
    let model = GraphNetModel::init(GraphNetConfig { enc_block2: vec![16, 32], ..GraphNetConfig::standard(35, 2, 2) }, 1).unwrap();
    let r = evaluate(&model, &data, || 0.0).unwrap();
    let parsed = parse_report(&report_json(&r)).unwrap();
    assert_eq!(parsed.auc, r.roc.auc);
    assert_eq!(parsed.roc.len(), r.roc.points.len());
    assert_eq!(parsed.samples.iter().map(|s| s.score).collect::<Vec<_>>(), r.scores);
    assert_eq!(roc_csv(&r).lines().count(), r.roc.points.len() + 1);
    let mut v: serde_json::Value = serde_json::from_str(&report_json(&r)).unwrap();
    v["schema_version"] = 9.into();
    assert!(parse_report(&v.to_string()).is_err());
    v["schema_version"] = 1.into();
    v["num_samples"] = 5.into();
    assert!(parse_report(&v.to_string()).is_err());
}

fn arb_mesh() -> impl Strategy<Value = TriangleMesh> {
    (4usize..30).prop_flat_map(|n| {
        let verts = prop::collection::vec(prop::array::uniform3(-1e3f64..1e3), n);
        let faces = prop::collection::vec((0..n, 0..n, 0..n), 1..40)
            .prop_map(|fs| fs.into_iter().filter(|(a, b, c)| a != b && b != c && a != c).map(|(a, b, c)| [a, b, c]).collect::<Vec<_>>());
        (verts, faces).prop_filter_map("valid mesh", |(v, f)| TriangleMesh::new(v, f).ok())
    })
}

proptest! {
    #[test]
    fn off_and_obj_roundtrip_exactly(mesh in arb_mesh()) {
        let off = parse_off(&format_off(&mesh)).unwrap();
        prop_assert_eq!(off.vertices(), mesh.vertices());
        prop_assert_eq!(off.faces(), mesh.faces());
        let obj = parse_obj(&format_obj(&mesh)).unwrap();
        prop_assert_eq!(obj.vertices(), mesh.vertices());
        prop_assert_eq!(obj.faces(), mesh.faces());
    }
}

#[test]
fn mesh_files_pick_format_from_extension() {
    let t = tempdir().unwrap();
    let mesh = common::fixture_mesh();
    for name in ["a.off", "b.obj", "C.OBJ"] {
        let path = t.path().join(name);
        let fmt = MeshFormat::from_path(&path).unwrap();
        save_mesh(&path, &mesh, fmt).unwrap();
        assert_eq!(load_mesh(&path, fmt).unwrap(), mesh);
    }
    assert!(MeshFormat::from_path(&t.path().join("x.stl")).is_err());
}
