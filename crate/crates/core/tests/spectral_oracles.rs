mod common;

use proptest::prelude::*;
use qseg_core::spectral::{
    choose_and_cut, kmeans, ncut_cost, ncut_kway, sym_eigen, CutOptions, Partition, WeightedGraph,
};
use rand::Rng;

fn random_symmetric(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}

/// Real roots of the characteristic polynomial of a symmetric 3x3 matrix,
/// by the trigonometric cubic formula.
fn cubic_eigenvalues(a: &[f64]) -> [f64; 3] {
    let (a11, a12, a13, a22, a23, a33) = (a[0], a[1], a[2], a[4], a[5], a[8]);
    // λ³ − c2 λ² + c1 λ − c0
    let c2 = a11 + a22 + a33;
    let c1 = a11 * a22 + a11 * a33 + a22 * a33 - a12 * a12 - a13 * a13 - a23 * a23;
    let c0 = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) + a13 * (a12 * a23 - a22 * a13);
    // Depressed cubic in t = λ − c2/3.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -(2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0);
    let mut roots = if p.abs() < 1e-300 {
        [shift; 3]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        std::array::from_fn(|k| shift + m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
    };
    roots.sort_by(f64::total_cmp);
    roots
}

#[test]
fn eigenvalues_match_cubic_roots() {
    let mut rng = common::rng(3);
    for _ in 0..200 {
        let a = random_symmetric(&mut rng, 3);
        let e = sym_eigen(3, &a).unwrap();
        let roots = cubic_eigenvalues(&a);
        for (v, r) in e.values.iter().zip(roots) {
            assert!((v - r).abs() <= 1e-9, "{v} vs {r}");
        }
    }
}

fn check_decomposition(n: usize, a: &[f64]) {
    let e = sym_eigen(n, a).unwrap();
    assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    let mut residual: f64 = 0.0;
    let mut ortho: f64 = 0.0;
    for j in 0..n {
        let v = e.vector(j);
        for i in 0..n {
            let av: f64 = (0..n).map(|k| a[i * n + k] * v[k]).sum();
            residual = residual.max((av - e.values[j] * v[i]).abs());
        }
        for l in 0..n {
            let dot: f64 = v.iter().zip(e.vector(l)).map(|(x, y)| x * y).sum();
            ortho = ortho.max((dot - if j == l { 1.0 } else { 0.0 }).abs());
        }
    }
    assert!(residual <= 1e-8, "n={n} residual {residual}");
    assert!(ortho <= 1e-8, "n={n} orthogonality {ortho}");
}

#[test]
fn eigen_residuals_up_to_200() {
    let mut rng = common::rng(5);
    for n in [1, 2, 7, 33, 64, 65, 120, 200] {
        check_decomposition(n, &random_symmetric(&mut rng, n));
    }
}

#[test]
fn eigen_handles_repeated_values() {
    // Laplacian of two disjoint triangles: eigenvalue 0 twice, 3 four times.
    let mut g = WeightedGraph::new(6);
    for (i, j) in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)] {
        g.set_edge(i, j, 1.0).unwrap();
    }
    let w = g.to_dense();
    let d = g.degrees();
    let lap: Vec<f64> = (0..36).map(|p| if p / 6 == p % 6 { d[p / 6] } else { -w[p] }).collect();
    let e = sym_eigen(6, &lap).unwrap();
    for (v, want) in e.values.iter().zip([0.0, 0.0, 3.0, 3.0, 3.0, 3.0]) {
        assert!((v - want).abs() < 1e-12);
    }
    check_decomposition(6, &lap);
}

fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> WeightedGraph {
    let mut g = WeightedGraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                g.set_edge(i, j, rng.random_range(0.05..1.0)).unwrap();
            }
        }
    }
    g
}

/// Ncut by explicit double loops over the dense weight matrix.
fn direct_ncut(g: &WeightedGraph, assignment: &[usize]) -> f64 {
    let n = g.node_count();
    let w = g.to_dense();
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    (0..k)
        .map(|c| {
            let mut cut = 0.0;
            let mut assoc = 0.0;
            for i in 0..n {
                if assignment[i] != c {
                    continue;
                }
                for j in 0..n {
                    assoc += w[i * n + j];
                    if assignment[j] != c {
                        cut += w[i * n + j];
                    }
                }
            }
            if assoc > 0.0 {
                cut / assoc
            } else {
                1.0
            }
        })
        .sum()
}

fn exhaustive_min_bipartition(g: &WeightedGraph) -> f64 {
    let n = g.node_count();
    let mut best = f64::INFINITY;
    // Node n-1 is fixed on side 0, so each bipartition is visited once.
    for mask in 1u32..(1 << (n - 1)) {
        let a: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        best = best.min(direct_ncut(g, &a));
    }
    best
}

#[test]
fn ncut_kway_near_exhaustive_optimum() {
    let mut rng = common::rng(11);
    for trial in 0..200 {
        let n = rng.random_range(3..=10);
        let g = random_graph(&mut rng, n, 0.6);
        let p = ncut_kway(&g, 2, trial).unwrap();
        let cost = ncut_cost(&g, &p);
        let best = exhaustive_min_bipartition(&g);
        assert!((cost - direct_ncut(&g, p.assignment())).abs() <= 1e-12);
        assert!(cost <= 1.05 * best + 1e-12, "trial {trial}: {cost} vs optimum {best}");
    }
}

#[test]
fn ncut_cost_matches_direct_sum() {
    let mut rng = common::rng(13);
    for _ in 0..300 {
        let g = random_graph(&mut rng, 8, 0.5);
        let k = rng.random_range(1..=4);
        let labels: Vec<usize> = (0..8).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        let p = Partition::new(labels.clone()).unwrap();
        assert!((ncut_cost(&g, &p) - direct_ncut(&g, &labels)).abs() <= 1e-12);
    }
}

#[test]
fn ncut_recovers_components() {
    let mut rng = common::rng(17);
    for trial in 0..100 {
        let k = rng.random_range(2..=4);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(2..=6)).collect();
        let n: usize = sizes.iter().sum();
        // Shuffle node order so components are interleaved.
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut truth = vec![0; n];
        let mut g = WeightedGraph::new(n);
        let mut start = 0;
        for (c, &s) in sizes.iter().enumerate() {
            let nodes = &order[start..start + s];
            for &v in nodes {
                truth[v] = c;
            }
            // A path keeps each component connected; extra random chords.
            for w in nodes.windows(2) {
                g.set_edge(w[0], w[1], rng.random_range(0.2..1.0)).unwrap();
            }
            for a in 0..s {
                for b in a + 2..s {
                    if rng.random::<f64>() < 0.5 {
                        g.set_edge(nodes[a], nodes[b], rng.random_range(0.2..1.0)).unwrap();
                    }
                }
            }
            start += s;
        }
        let p = ncut_kway(&g, k, trial).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(p.assignment()[i] == p.assignment()[j], truth[i] == truth[j], "trial {trial}");
            }
        }
    }
}

#[test]
fn choose_and_cut_fixtures() {
    let mut g = WeightedGraph::new(8);
    for block in [0..4, 4..8] {
        for i in block.clone() {
            for j in block.clone() {
                if i < j {
                    g.set_edge(i, j, 1.0).unwrap();
                }
            }
        }
    }
    let opts = CutOptions { k_max: 4, ..CutOptions::default() };
    let chosen = choose_and_cut(&g, &opts);
    assert_eq!(chosen.partition.k(), 2);
    assert!(chosen.costs[1].abs() < 1e-12);
    assert!(chosen.costs[2] / 3.0 > opts.tau);

    let mut clique = WeightedGraph::new(5);
    for i in 0..5 {
        for j in i + 1..5 {
            clique.set_edge(i, j, 1.0).unwrap();
        }
    }
    assert_eq!(choose_and_cut(&clique, &CutOptions::default()).partition.k(), 1);
    assert_eq!(choose_and_cut(&WeightedGraph::new(3), &CutOptions::default()).partition.k(), 1);
}

#[test]
fn kmeans_blobs_and_history() {
    let mut rng = common::rng(19);
    let mut points = Vec::new();
    let means = [[0.0, 0.0], [100.0, 50.0]];
    let mut sums = [[0.0; 2]; 2];
    for (b, m) in means.iter().enumerate() {
        for _ in 0..50 {
            let p = vec![m[0] + rng.random_range(-1.0..1.0), m[1] + rng.random_range(-1.0..1.0)];
            sums[b][0] += p[0];
            sums[b][1] += p[1];
            points.push(p);
        }
    }
    let r = kmeans(&points, 2, 4, 100, 1e-12).unwrap();
    for s in sums {
        let mean = [s[0] / 50.0, s[1] / 50.0];
        assert!(r.centers.iter().any(|c| (c[0] - mean[0]).abs() < 1e-6 && (c[1] - mean[1]).abs() < 1e-6));
    }
    assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kmeans_distortion_never_increases(seed in any::<u64>(), c in 1usize..6) {
        let mut rng = common::rng(seed);
        let points: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let r = kmeans(&points, c, seed, 50, 0.0).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
        prop_assert_eq!(r.assignment.len(), 40);
    }

    #[test]
    fn ncut_cost_invariances(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut rng = common::rng(seed);
        let n = 7;
        let g = random_graph(&mut rng, n, 0.6);
        let labels: Vec<usize> = (0..n).map(|i| if i < 3 { i } else { rng.random_range(0..3) }).collect();
        let p = Partition::new(labels.clone()).unwrap();
        let base = ncut_cost(&g, &p);
        prop_assert!((ncut_cost(&g.scaled(scale), &p) - base).abs() <= 1e-9);
        // Relabel clusters.
        let relabeled = Partition::new(labels.iter().map(|&l| (l + 1) % 3).collect()).unwrap();
        prop_assert!((ncut_cost(&g, &relabeled) - base).abs() <= 1e-12);
        // Permute nodes.
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut pg = WeightedGraph::new(n);
        for (i, j, w) in g.edges() {
            pg.set_edge(perm[i], perm[j], w).unwrap();
        }
        let mut plabels = vec![0; n];
        for i in 0..n {
            plabels[perm[i]] = labels[i];
        }
        prop_assert!((ncut_cost(&pg, &Partition::new(plabels).unwrap()) - base).abs() <= 1e-12);
    }

    #[test]
    fn scaling_keeps_optimal_bipartitions(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut rng = common::rng(seed);
        let g = random_graph(&mut rng, 6, 0.7);
        let s = g.scaled(scale);
        let best = exhaustive_min_bipartition(&g);
        let best_scaled = exhaustive_min_bipartition(&s);
        prop_assert!((best - best_scaled).abs() <= 1e-9);
        for mask in 1u32..(1 << 5) {
            let a: Vec<usize> = (0..6).map(|i| ((mask >> i) & 1) as usize).collect();
            let is_opt = (direct_ncut(&g, &a) - best).abs() <= 1e-9;
            let is_opt_scaled = (direct_ncut(&s, &a) - best_scaled).abs() <= 1e-9;
            prop_assert_eq!(is_opt, is_opt_scaled);
        }
    }
}
