use graphnet_core::graph::{invert_permutation, normalize_adjacency, permute_graph, permute_normalized, spmm, SparseAdjacency};
use graphnet_core::mesh::primitives::{icosahedron, icosphere, tube};
use graphnet_core::mesh::{mesh_to_graph, normalize_coordinates, resample_indexed, ResampleSpec, ResampleStrategy};
use graphnet_core::{Matrix, SurfaceGraph};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// `D^{-1/2} (A + I) D^{-1/2}` computed densely.
fn dense_oracle(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut t = a.clone();
    for i in 0..n {
        t[(i, i)] += 1.0;
    }
    let d: Vec<f64> = (0..n).map(|i| t.row(i).iter().sum::<f64>()).collect();
    Matrix::from_fn(n, n, |i, j| t[(i, j)] / (d[i] * d[j]).sqrt())
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn graph_from_mask(n: usize, mask: u32) -> SparseAdjacency {
    let edges: Vec<_> = all_pairs(n).into_iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, e)| e).collect();
    SparseAdjacency::from_undirected_edges(n, edges).unwrap()
}

#[test]
fn every_small_graph_matches_dense_normalization() {
    for n in 1..=5 {
        let pairs = all_pairs(n).len();
        for mask in 0..(1u32 << pairs) {
            let a = graph_from_mask(n, mask);
            let got = normalize_adjacency(&a).unwrap().as_sparse().to_dense();
            let want = dense_oracle(&a.to_dense());
            assert!(got.max_abs_diff(&want) < 1e-12, "n={n} mask={mask}");
        }
    }
}

#[test]
fn normalized_spectrum_lies_in_unit_interval() {
    for n in 2..=5 {
        let pairs = all_pairs(n).len();
        for mask in 0..(1u32 << pairs) {
            let a = normalize_adjacency(&graph_from_mask(n, mask)).unwrap().as_sparse().to_dense();
            let m = DMatrix::from_fn(n, n, |i, j| a[(i, j)]);
            let eig = m.symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&l| (-1.0 - 1e-12..=1.0 + 1e-12).contains(&l)), "n={n} mask={mask}: {eig}");
            // The largest eigenvalue is exactly one (eigenvector D^{1/2} 1).
            assert!((eig.max() - 1.0).abs() < 1e-12);
        }
    }
}

fn random_graph(n: usize, density: f64, seed: u64) -> SparseAdjacency {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let edges: Vec<_> = all_pairs(n).into_iter().filter(|_| next() < density).collect();
    SparseAdjacency::from_undirected_edges(n, edges).unwrap()
}

fn features(n: usize, f: usize, seed: u64) -> Matrix {
    Matrix::from_fn(n, f, |i, j| (((i * 31 + j * 17) as u64 ^ seed) % 97) as f64 / 48.5 - 1.0)
}

#[test]
fn spmm_acts_columnwise() {
    let adj = normalize_adjacency(&random_graph(30, 0.15, 3)).unwrap();
    let x = features(30, 7, 11);
    let full = spmm(&adj, &x).unwrap();
    for (a, b) in [(0, 1), (1, 4), (4, 7)] {
        let part = spmm(&adj, &x.columns(a, b)).unwrap();
        assert!(full.columns(a, b).bit_eq(&part));
    }
    let dense = adj.as_sparse().to_dense().matmul(&x);
    assert!(full.max_abs_diff(&dense) < 1e-12);
}

proptest! {
    #[test]
    fn relabelling_commutes_with_normalization(n in 2usize..25, density in 0.0f64..0.6, seed: u64, shift in 0usize..1000) {
        let a = random_graph(n, density, seed);
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        prop_assume!(graphnet_core::graph::is_permutation(&perm, n));
        let g = SurfaceGraph::new(features(n, 3, seed), a).unwrap();
        let pg = permute_graph(&g, &perm).unwrap();
        let lhs = normalize_adjacency(pg.adjacency()).unwrap();
        let rhs = permute_normalized(&normalize_adjacency(g.adjacency()).unwrap(), &perm).unwrap();
        prop_assert!(lhs.as_sparse().to_dense().max_abs_diff(&rhs.as_sparse().to_dense()) < 1e-14);
        let back = permute_graph(&pg, &invert_permutation(&perm)).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn tube_graphs_are_symmetric_and_connected(segments in 8usize..24, rings in 4usize..16, radius in 0.5f64..3.0) {
        let g = mesh_to_graph(&tube(radius, 4.0 * radius, segments, rings));
        let d = g.adjacency().to_dense();
        prop_assert!(d.bit_eq(&d.transpose()));
        prop_assert!((0..g.num_nodes()).all(|i| d[(i, i)] == 0.0));
        prop_assert!(g.adjacency().is_connected());
    }

    #[test]
    fn coordinate_normalization_is_idempotent_and_translation_invariant(
        dx in -50.0f64..50.0, dy in -50.0f64..50.0, dz in -50.0f64..50.0, scale in 0.1f64..20.0,
    ) {
        let g = mesh_to_graph(&icosphere(1).scaled(scale));
        let once = normalize_coordinates(&g);
        let twice = normalize_coordinates(&once);
        prop_assert!(once.features().max_abs_diff(twice.features()) < 1e-12);
        let moved = g.with_features(Matrix::from_fn(g.num_nodes(), 3, |i, j| g.features()[(i, j)] + [dx, dy, dz][j])).unwrap();
        prop_assert!(normalize_coordinates(&moved).features().max_abs_diff(once.features()) < 1e-9);
        let max_norm = (0..once.num_nodes()).map(|i| once.features().row(i).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        prop_assert!((max_norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn icosahedron_is_five_regular() {
    let g = mesh_to_graph(&icosahedron());
    assert_eq!(g.num_nodes(), 12);
    assert!((0..12).all(|i| g.adjacency().neighbors(i).len() == 5));
    assert_eq!(g.adjacency().num_edges(), 30);
}

#[test]
fn resampling_is_deterministic_per_seed() {
    let g = mesh_to_graph(&icosphere(3));
    for strategy in [ResampleStrategy::FarthestPointKnn, ResampleStrategy::EdgeCollapseDecimate] {
        let spec = ResampleSpec { target_nodes: 200, strategy, seed: 5 };
        let a = resample_indexed(&g, &spec).unwrap();
        let b = resample_indexed(&g, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.graph.num_nodes(), 200);
        for (i, &s) in a.source_nodes.iter().enumerate() {
            assert_eq!(a.graph.features().row(i), g.features().row(s));
        }
    }
    let strict = ResampleSpec { target_nodes: 200, strategy: ResampleStrategy::ErrorIfMismatch, seed: 0 };
    assert!(resample_indexed(&g, &strict).is_err());
}
