use graphnet_core::graph::{normalize_adjacency, SparseAdjacency};
use graphnet_core::nn::{GraphNetConfig, GraphNetModel};
use graphnet_core::train::{joint_loss, LossConfig};
use graphnet_core::{Matrix, NormalizedAdjacency, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scaled_config() -> GraphNetConfig {
    GraphNetConfig {
        in_features: 3,
        enc_block1: vec![8, 8],
        enc_block2: vec![8, 16, 32],
        cls_head: vec![16, 8, 2],
        seg_block1: vec![16, 8, 8],
        seg_block2: vec![8, 2],
        n_aux: 3,
        pointnet_mode: false,
        first_layer_only_adjacency: true,
        expected_nodes: None,
    }
}

struct Case {
    x: Matrix,
    adj: NormalizedAdjacency,
    aux: Vec<Real>,
    label: usize,
    nodes: Vec<u8>,
}

fn case(seed: u64, n: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Matrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    for _ in 0..n {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    let adj = normalize_adjacency(&SparseAdjacency::from_undirected_edges(n, edges).unwrap()).unwrap();
    let aux = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nodes = (0..n).map(|i| (i % 3 == 0) as u8).collect();
    Case { x, adj, aux, label: (seed % 2) as usize, nodes }
}

fn loss(model: &GraphNetModel, c: &Case) -> Real {
    let out = model.forward(&c.x, Some(&c.adj), &c.aux).unwrap();
    joint_loss(&out.cls_scores, c.label, &out.seg_scores, &c.nodes, &LossConfig::default()).unwrap().total
}

/// Largest relative error over every parameter, with the usual guard
/// against tiny denominators.
fn max_relative_error(model: &GraphNetModel, c: &Case) -> Real {
    let out = model.forward(&c.x, Some(&c.adj), &c.aux).unwrap();
    let l = joint_loss(&out.cls_scores, c.label, &out.seg_scores, &c.nodes, &LossConfig::default()).unwrap();
    let grads = model.backward(&out.tape, &l.d_cls, &l.d_seg).unwrap();
    let analytic: Vec<Vec<Real>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let h = 1e-5;
    let mut worst: Real = 0.0;
    let mut probe = model.clone();
    for (t, ana) in analytic.iter().enumerate() {
        for k in 0..ana.len() {
            let orig = probe.tensors()[t][k];
            probe.tensors_mut()[t][k] = orig + h;
            let up = loss(&probe, c);
            probe.tensors_mut()[t][k] = orig - h;
            let down = loss(&probe, c);
            probe.tensors_mut()[t][k] = orig;
            let fd = (up - down) / (2.0 * h);
            let err = (fd - ana[k]).abs() / fd.abs().max(ana[k].abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

#[test]
fn joint_loss_gradient_matches_central_differences() {
    for seed in 0..2 {
        let model = GraphNetModel::init(scaled_config(), 100 + seed).unwrap();
        let err = max_relative_error(&model, &case(seed, 16));
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn gradient_without_first_layer_rule() {
    let mut cfg = scaled_config();
    cfg.first_layer_only_adjacency = false;
    let model = GraphNetModel::init(cfg, 5).unwrap();
    let err = max_relative_error(&model, &case(3, 12));
    assert!(err < 1e-4, "relative error {err:e}");
}

#[test]
fn backward_is_deterministic() {
    let model = GraphNetModel::init(scaled_config(), 1).unwrap();
    let c = case(9, 16);
    let run = || {
        let out = model.forward(&c.x, Some(&c.adj), &c.aux).unwrap();
        let l = joint_loss(&out.cls_scores, c.label, &out.seg_scores, &c.nodes, &LossConfig::default()).unwrap();
        model.backward(&out.tape, &l.d_cls, &l.d_seg).unwrap()
    };
    let (a, b) = (run(), run());
    for (x, y) in a.tensors().iter().zip(b.tensors()) {
        assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
