//! The four commands behind the `graphnet` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use graphnet_core::mesh::{decimate_mesh, mesh_to_graph, normalize_coordinates, TriangleMesh};
use graphnet_core::metrics::{evaluate, EvalReport, MetricsError};
use graphnet_core::nn::{decode_checkpoint, encode_checkpoint, GraphNetModel, NnError};
use graphnet_core::synth::generate;
use graphnet_core::train::{argmax_rows, softmax, train, EpochLog, TrainError};
use graphnet_core::{LabeledSample, Real};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::manifest::{load_manifest, write_manifest};
use crate::meshio::{load_mesh, save_mesh, MeshFormat};
use crate::report::{epoch_log_csv, report_json, roc_csv};

pub const CHECKPOINT_FILE: &str = "model.gnet";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const CONFIG_DUMP_FILE: &str = "config.txt";
pub const REPORT_FILE: &str = "report.json";
pub const ROC_FILE: &str = "roc.csv";
pub const PREDICTION_MESH_FILE: &str = "prediction.obj";
pub const PREDICTION_CSV_FILE: &str = "prediction.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    /// 2 configuration, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(ConfigError::Invalid(msg.into()))
}

fn required<'a>(p: &'a Option<PathBuf>, key: &'static str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or(CliError::Config(ConfigError::Missing(key)))
}

fn existing<'a>(p: &'a Option<PathBuf>, key: &'static str) -> Result<&'a Path, CliError> {
    let path = required(p, key)?;
    if !path.exists() {
        return Err(CliError::Data(format!("{key} path {} does not exist", path.display())));
    }
    Ok(path)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Milliseconds since the first call of the returned closure's creation.
pub fn wall_clock_ms() -> impl FnMut() -> f64 {
    let start = Instant::now();
    move || start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSummary {
    pub dir: PathBuf,
    pub per_class: [usize; 2],
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<GenSummary, CliError> {
    let out = required(&cfg.out, "out")?;
    let synth = cfg.synth_config();
    synth.validate().map_err(|e| invalid(e.to_string()))?;
    let samples = generate(&synth).map_err(data_err)?;
    write_manifest(&samples, out).map_err(data_err)?;
    let positives = samples.iter().filter(|s| s.graph_label == 1).count();
    Ok(GenSummary { dir: out.to_path_buf(), per_class: [samples.len() - positives, positives] })
}

fn load_dataset(cfg: &RunConfig) -> Result<Vec<LabeledSample>, CliError> {
    let dir = existing(&cfg.data, "data")?;
    let data = load_manifest(dir).map_err(data_err)?;
    let n = data[0].num_nodes();
    let k = data[0].aux.len();
    for (i, s) in data.iter().enumerate() {
        if s.num_nodes() != n {
            return Err(CliError::Data(format!("sample {i} has {} nodes, sample 0 has {n}", s.num_nodes())));
        }
        if s.aux.len() != k {
            return Err(CliError::Data(format!("sample {i} has {} auxiliary values, sample 0 has {k}", s.aux.len())));
        }
    }
    Ok(data)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model: GraphNetModel,
    pub logs: Vec<EpochLog>,
    pub checkpoint: PathBuf,
}

/// Trains on the dataset in `data` and writes `model.gnet`,
/// `train_log.csv` and the effective `config.txt` into `out`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary, CliError> {
    let data = load_dataset(cfg)?;
    let out = required(&cfg.out, "out")?;
    let model_cfg = cfg.model_config(data[0].aux.len(), data[0].num_nodes());
    model_cfg.validate().map_err(|e| invalid(e.to_string()))?;
    let (train_cfg, loss_cfg, adam_cfg) = (cfg.train_config(), cfg.loss_config(), cfg.adam_config());
    train_cfg.validate().map_err(|e| invalid(e.to_string()))?;
    loss_cfg.validate().map_err(|e| invalid(e.to_string()))?;
    adam_cfg.validate().map_err(|e| invalid(e.to_string()))?;
    create_dir(out)?;
    let mut model = GraphNetModel::init(model_cfg, cfg.init_seed).map_err(|e| invalid(e.to_string()))?;
    let logs = train(&mut model, &data, &train_cfg, &loss_cfg, &adam_cfg, |_, _| {}).map_err(|e| match e {
        TrainError::NonFinite { .. } => CliError::Numeric(format!("training aborted: {e}")),
        TrainError::Config(_) | TrainError::Optimizer(_) => invalid(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    let checkpoint = out.join(CHECKPOINT_FILE);
    write_file(&checkpoint, encode_checkpoint(&model))?;
    write_file(&out.join(TRAIN_LOG_FILE), epoch_log_csv(&logs))?;
    write_file(&out.join(CONFIG_DUMP_FILE), cfg.dump())?;
    Ok(TrainSummary { model, logs, checkpoint })
}

pub fn load_model(path: &Path) -> Result<GraphNetModel, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    decode_checkpoint(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn check_compatible(model: &GraphNetModel, nodes: usize, n_aux: usize) -> Result<(), CliError> {
    if n_aux != model.n_aux() {
        return Err(CliError::Data(format!("model expects {} auxiliary values, data has {n_aux}", model.n_aux())));
    }
    if let Some(n) = model.config().expected_nodes {
        if n != nodes {
            return Err(CliError::Data(format!("model expects {n} nodes per graph, data has {nodes}")));
        }
    }
    Ok(())
}

/// Evaluates `checkpoint` on `data`; writes `report.json` and `roc.csv`
/// into `out` when it is set.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport, CliError> {
    let model = load_model(existing(&cfg.checkpoint, "checkpoint")?)?;
    let data = load_dataset(cfg)?;
    check_compatible(&model, data[0].num_nodes(), data[0].aux.len())?;
    let report = evaluate(&model, &data, wall_clock_ms()).map_err(|e| match e {
        MetricsError::Model { source: NnError::NonFinite(_), .. } => CliError::Numeric(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        write_file(&out.join(REPORT_FILE), report_json(&report))?;
        write_file(&out.join(ROC_FILE), roc_csv(&report))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_probabilities: Vec<Real>,
    pub node_classes: Vec<u8>,
    /// Probability of each node's predicted class.
    pub node_probabilities: Vec<Real>,
    /// Surface actually fed to the model, in input coordinates.
    pub mesh: TriangleMesh,
}

/// Reduces `mesh` to the model's node count (when it has one) and builds
/// the normalised graph.
pub fn prepare_mesh(model: &GraphNetModel, mesh: TriangleMesh) -> Result<TriangleMesh, CliError> {
    let Some(n) = model.config().expected_nodes else { return Ok(mesh) };
    if mesh.num_vertices() < n {
        return Err(CliError::Data(format!("mesh has {} vertices, the model needs {n}", mesh.num_vertices())));
    }
    let reduced = if mesh.num_vertices() > n { decimate_mesh(&mesh, n).map_err(data_err)?.0 } else { mesh };
    if reduced.num_vertices() != n {
        return Err(CliError::Data(format!("resampled mesh has {} vertices, the model needs {n}", reduced.num_vertices())));
    }
    Ok(reduced)
}

pub fn predict_mesh(model: &GraphNetModel, mesh: TriangleMesh, aux: &[Real]) -> Result<Prediction, CliError> {
    let mesh = prepare_mesh(model, mesh)?;
    let graph = normalize_coordinates(&mesh_to_graph(&mesh));
    let out = model.forward_graph(&graph, aux).map_err(|e| match e {
        NnError::NonFinite(_) => CliError::Numeric(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    let node_classes = argmax_rows(&out.seg_scores);
    let node_probabilities = (0..graph.num_nodes())
        .map(|i| softmax(out.seg_scores.row(i))[node_classes[i] as usize])
        .collect();
    Ok(Prediction { class_probabilities: softmax(&out.cls_scores), node_classes, node_probabilities, mesh })
}

/// Classifies and segments one surface. Writes the surface used as
/// `prediction.obj` and `vertex,class,probability` rows as
/// `prediction.csv` into `out` when it is set.
pub fn cmd_predict(cfg: &RunConfig) -> Result<Prediction, CliError> {
    let model = load_model(existing(&cfg.checkpoint, "checkpoint")?)?;
    let mesh_path = existing(&cfg.mesh, "mesh")?;
    let aux = match (&cfg.aux, cfg.aux_zeros) {
        (_, true) => vec![0.0; model.n_aux()],
        (Some(a), false) if a.len() == model.n_aux() => a.clone(),
        (Some(a), false) => {
            return Err(invalid(format!("the model needs {} auxiliary values, {} given", model.n_aux(), a.len())))
        }
        (None, false) if model.n_aux() == 0 => Vec::new(),
        (None, false) => {
            return Err(invalid(format!("the model needs {} auxiliary values (set aux or use --aux-zeros)", model.n_aux())))
        }
    };
    let format = MeshFormat::from_path(mesh_path).map_err(|e| invalid(e.to_string()))?;
    let mesh = load_mesh(mesh_path, format).map_err(|e| CliError::Data(format!("{}: {e}", mesh_path.display())))?;
    let p = predict_mesh(&model, mesh, &aux)?;
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        let obj = out.join(PREDICTION_MESH_FILE);
        save_mesh(&obj, &p.mesh, MeshFormat::Obj).map_err(data_err)?;
        let mut csv = String::from("vertex,class,probability\n");
        for (i, (c, q)) in p.node_classes.iter().zip(&p.node_probabilities).enumerate() {
            csv.push_str(&format!("{i},{c},{q:?}\n"));
        }
        write_file(&out.join(PREDICTION_CSV_FILE), csv)?;
    }
    Ok(p)
}
