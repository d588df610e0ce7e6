//! Clustering kernels: k-means, a dense symmetric eigensolver, and k-way
//! normalized cuts with cut-count selection.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Degree used for isolated nodes when forming `D^{-1/2}`.
pub const ISOLATED_DEGREE: f64 = 1e-12;

/// Default per-cut Ncut threshold for [`choose_and_cut`].
pub const DEFAULT_TAU: f64 = 0.08;

/// Matrices at or below this order use the Jacobi solver inside the
/// clustering path; larger ones go through a Householder-based solver.
const JACOBI_MAX_ORDER: usize = 64;

/// Sparse symmetric graph. Edges are stored once with `i < j`; self-loops
/// are kept separately, default to zero, and only add to degrees and
/// associations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: BTreeMap<(usize, usize), f64>,
    loops: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph { n, edges: BTreeMap::new(), loops: vec![0.0; n] }
    }

    pub fn set_self_loop(&mut self, i: usize, w: f64) -> Result<()> {
        if i >= self.n {
            return Err(Error::invalid(format!("node {i} out of range for {} nodes", self.n)));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::invalid(format!("self-loop weight {w} must be finite and non-negative")));
        }
        self.loops[i] = w;
        Ok(())
    }

    pub fn self_loop(&self, i: usize) -> f64 {
        self.loops[i]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sets the weight of `{i, j}`. Calls with `i == j` are ignored; use
    /// [`WeightedGraph::set_self_loop`].
    pub fn set_edge(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::invalid(format!("edge ({i}, {j}) out of range for {} nodes", self.n)));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::invalid(format!("edge weight {w} must be finite and non-negative")));
        }
        if i != j {
            self.edges.insert((i.min(j), i.max(j)), w);
        }
        Ok(())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    /// Stored weight of `{i, j}`, `None` when the pair has no edge.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.edges.get(&(i.min(j), i.max(j))).copied()
    }

    /// Edges as `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = self.loops.clone();
        for (&(i, j), &w) in &self.edges {
            d[i] += w;
            d[j] += w;
        }
        d
    }

    /// Induced subgraph; node `k` of the result is `nodes[k]`.
    pub fn subgraph(&self, nodes: &[usize]) -> WeightedGraph {
        let index: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut sub = WeightedGraph::new(nodes.len());
        for (&(i, j), &w) in &self.edges {
            if let (Some(&a), Some(&b)) = (index.get(&i), index.get(&j)) {
                sub.edges.insert((a.min(b), a.max(b)), w);
            }
        }
        sub.loops = nodes.iter().map(|&v| self.loops[v]).collect();
        sub
    }

    pub fn scaled(&self, factor: f64) -> WeightedGraph {
        WeightedGraph {
            n: self.n,
            edges: self.edges.iter().map(|(&k, &w)| (k, w * factor)).collect(),
            loops: self.loops.iter().map(|w| w * factor).collect(),
        }
    }

    /// Dense weight matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for (i, &w) in self.loops.iter().enumerate() {
            a[i * n + i] = w;
        }
        for (&(i, j), &w) in &self.edges {
            a[i * n + j] = w;
            a[j * n + i] = w;
        }
        a
    }
}

/// Cluster assignment with every cluster in `0..k` nonempty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; k];
        for &a in &assignment {
            seen[a] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invariant("partition has an empty cluster".into()));
        }
        Ok(Partition { assignment, k })
    }

    /// Renumbers arbitrary cluster labels in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = BTreeMap::new();
        let assignment = labels
            .iter()
            .map(|&l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        Partition { assignment, k: remap.len() }
    }

    pub fn single(n: usize) -> Self {
        Partition { assignment: vec![0; n], k: usize::from(n > 0) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub centers: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Weighted sum of squared distances to the assigned centers.
    pub distortion: f64,
    /// Distortion after every assignment step.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding.
pub fn kmeans(points: &[Vec<f64>], c: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansResult> {
    let weights = vec![1.0; points.len()];
    kmeans_weighted(points, &weights, c, seed, max_iter, tol)
}

/// k-means where point `i` stands for `weights[i]` coincident copies.
pub fn kmeans_weighted(
    points: &[Vec<f64>],
    weights: &[f64],
    c: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult> {
    let n = points.len();
    if c == 0 {
        return Err(Error::invalid("k-means needs at least one cluster"));
    }
    if c > n {
        return Err(Error::invalid(format!("k-means with {c} clusters over {n} points")));
    }
    if weights.len() != n || weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::invalid("k-means weights must be positive, one per point"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("k-means points differ in dimension".into()));
    }

    let mut rng = rng::seeded(seed);
    let mut centers = plus_plus_seeds(points, weights, c, &mut rng);
    let mut assignment = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut history = Vec::new();

    for _ in 0..max_iter.max(1) {
        history.push(assign(points, weights, &centers, &mut assignment, &mut dists));
        repair_empty(points, &mut centers, &mut assignment, &mut dists);
        let updated = weighted_means(points, weights, &assignment, &centers);
        let shift = centers
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = updated;
        if shift < tol {
            break;
        }
    }
    let distortion = assign(points, weights, &centers, &mut assignment, &mut dists);
    history.push(distortion);
    repair_empty(points, &mut centers, &mut assignment, &mut dists);
    let distortion = dists.iter().zip(weights).map(|(d, w)| d * w).sum();
    Ok(KMeansResult { centers, assignment, distortion, history })
}

fn plus_plus_seeds(points: &[Vec<f64>], weights: &[f64], c: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = sample_weighted(weights, rng).unwrap_or(0);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centers.len() < c {
        let scores: Vec<f64> = nearest.iter().zip(weights).map(|(d, w)| d * w).collect();
        let pick = sample_weighted(&scores, rng)
            .filter(|&i| !chosen[i])
            .unwrap_or_else(|| (0..n).find(|&i| !chosen[i]).expect("c <= n"));
        chosen[pick] = true;
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[pick]));
        }
        centers.push(points[pick].clone());
    }
    centers
}

fn sample_weighted(scores: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut target = rng.random::<f64>() * total;
    for (i, &s) in scores.iter().enumerate() {
        if s > 0.0 {
            if target < s {
                return Some(i);
            }
            target -= s;
        }
    }
    scores.iter().rposition(|&s| s > 0.0)
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(
    points: &[Vec<f64>],
    weights: &[f64],
    centers: &[Vec<f64>],
    assignment: &mut [usize],
    dists: &mut [f64],
) -> f64 {
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (j, d) = nearest_center(p, centers);
        assignment[i] = j;
        dists[i] = d;
        total += d * weights[i];
    }
    total
}

/// Gives every empty cluster the point farthest from its center, taken from
/// a cluster that keeps at least one other point.
fn repair_empty(points: &[Vec<f64>], centers: &mut [Vec<f64>], assignment: &mut [usize], dists: &mut [f64]) {
    let c = centers.len();
    let mut counts = vec![0usize; c];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for j in 0..c {
        if counts[j] > 0 {
            continue;
        }
        let donor = (0..points.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = donor {
            counts[assignment[i]] -= 1;
            counts[j] += 1;
            assignment[i] = j;
            dists[i] = 0.0;
            centers[j] = points[i].clone();
        }
    }
}

fn weighted_means(points: &[Vec<f64>], weights: &[f64], assignment: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = old[0].len();
    let mut sums = vec![vec![0.0; dim]; old.len()];
    let mut mass = vec![0.0; old.len()];
    for ((p, &w), &a) in points.iter().zip(weights).zip(assignment) {
        mass[a] += w;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += w * x;
        }
    }
    sums.into_iter()
        .zip(mass)
        .zip(old)
        .map(|((s, m), o)| if m > 0.0 { s.into_iter().map(|v| v / m).collect() } else { o.clone() })
        .collect()
}

/// Eigenpairs of a symmetric matrix, ascending by eigenvalue.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column-major: eigenvector `j` occupies `vectors[j * n..(j + 1) * n]`.
    pub vectors: Vec<f64>,
    n: usize,
}

impl SymEigen {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }

    fn sorted(n: usize, values: Vec<f64>, vectors: Vec<f64>) -> SymEigen {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let mut v = Vec::with_capacity(n * n);
        for &j in &order {
            v.extend_from_slice(&vectors[j * n..(j + 1) * n]);
        }
        SymEigen { values: order.iter().map(|&j| values[j]).collect(), vectors: v, n }
    }
}

fn check_symmetric(n: usize, a: &[f64]) -> Result<()> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch(format!("{n}x{n} matrix needs {} entries, got {}", n * n, a.len())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-10 {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// All eigenpairs of a dense symmetric row-major matrix by cyclic Jacobi
/// rotations. Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e-12 * ||A||_F`.
pub fn sym_eigen(n: usize, a: &[f64]) -> Result<SymEigen> {
    check_symmetric(n, a)?;
    Ok(jacobi(n, a))
}

fn jacobi(n: usize, a: &[f64]) -> SymEigen {
    let mut m = a.to_vec();
    // Symmetrize so both triangles agree exactly.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    // Row-major here; row j of `v` is eigenvector j at the end.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-12 * norm;
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    for _sweep in 0..100 {
        if off(&m) <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vpk = v[p * n + k];
                    let vqk = v[q * n + k];
                    v[p * n + k] = c * vpk - s * vqk;
                    v[q * n + k] = s * vpk + c * vqk;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i * n + i]).collect();
    SymEigen::sorted(n, values, v)
}

fn householder_eigen(n: usize, a: &[f64]) -> SymEigen {
    use faer::{Mat, Side};
    let mat = Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]);
    match mat.self_adjoint_eigen(Side::Lower) {
        Ok(evd) => {
            let s = evd.S().column_vector();
            let u = evd.U();
            let values = (0..n).map(|i| s[i]).collect();
            let mut vectors = Vec::with_capacity(n * n);
            for j in 0..n {
                vectors.extend((0..n).map(|i| u[(i, j)]));
            }
            SymEigen::sorted(n, values, vectors)
        }
        Err(_) => jacobi(n, a),
    }
}

/// Eigendecomposition used by the clustering path: Jacobi for small
/// matrices, tridiagonalization for large ones.
fn dense_eigen(n: usize, a: &[f64]) -> SymEigen {
    if n <= JACOBI_MAX_ORDER {
        jacobi(n, a)
    } else {
        householder_eigen(n, a)
    }
}

/// k-way normalized cut cost `sum_k cut(A_k, V - A_k) / assoc(A_k, V)`.
/// Clusters with zero association contribute 1.
pub fn ncut_cost(g: &WeightedGraph, p: &Partition) -> f64 {
    let k = p.k();
    let mut cut = vec![0.0; k];
    let mut assoc = vec![0.0; k];
    let a = p.assignment();
    for i in 0..g.node_count() {
        assoc[a[i]] += g.self_loop(i);
    }
    for (i, j, w) in g.edges() {
        assoc[a[i]] += w;
        assoc[a[j]] += w;
        if a[i] != a[j] {
            cut[a[i]] += w;
            cut[a[j]] += w;
        }
    }
    cut.iter()
        .zip(&assoc)
        .map(|(&c, &s)| if s > 0.0 { c / s } else { 1.0 })
        .sum()
}

/// Eigenvectors swept for threshold bipartitions.
const SWEEP_VECTORS: usize = 4;

/// Rows of the normalized-Laplacian eigenvector embedding.
struct SpectralEmbedding {
    n: usize,
    eig: SymEigen,
    inv_sqrt: Vec<f64>,
}

impl SpectralEmbedding {
    fn new(g: &WeightedGraph) -> Self {
        let n = g.node_count();
        let deg = g.degrees();
        let inv_sqrt: Vec<f64> = deg
            .iter()
            .map(|&d| 1.0 / if d > 0.0 { d } else { ISOLATED_DEGREE }.sqrt())
            .collect();
        let mut lap = vec![0.0; n * n];
        for i in 0..n {
            lap[i * n + i] = 1.0 - g.self_loop(i) * inv_sqrt[i] * inv_sqrt[i];
        }
        for (i, j, w) in g.edges() {
            let v = -w * inv_sqrt[i] * inv_sqrt[j];
            lap[i * n + j] = v;
            lap[j * n + i] = v;
        }
        SpectralEmbedding { n, eig: dense_eigen(n, &lap), inv_sqrt }
    }

    /// Row-normalized embedding on the `k` smallest eigenvectors.
    fn rows(&self, k: usize) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                let mut row: Vec<f64> = (0..k).map(|j| self.eig.vector(j)[i]).collect();
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|x| *x /= norm);
                }
                row
            })
            .collect()
    }

    /// k-means on the embedding rows, then greedy refinement. For two
    /// clusters the best threshold splits of the leading nontrivial
    /// generalized eigenvectors and a split along connected components
    /// compete as well.
    fn cut(&self, g: &WeightedGraph, adj: &Adjacency, k: usize, seed: u64) -> Partition {
        if k <= 1 {
            return Partition::single(self.n);
        }
        let rows = self.rows(k);
        let km = kmeans(&rows, k, seed, 300, 1e-10).expect("k <= n checked by caller");
        let mut best = refine(adj, Partition::from_labels(&km.assignment));
        if k == 2 {
            let sweeps = (1..self.n.min(SWEEP_VECTORS + 1)).filter_map(|j| {
                let y: Vec<f64> = (0..self.n).map(|i| self.eig.vector(j)[i] * self.inv_sqrt[i]).collect();
                sweep_split(adj, &y).map(|p| refine(adj, p))
            });
            for c in sweeps.chain(component_split(adj)) {
                if ncut_cost(g, &c) < ncut_cost(g, &best) {
                    best = c;
                }
            }
        }
        best
    }
}

/// Neighbor lists with weights, plus self-loops and degrees.
struct Adjacency {
    nbrs: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
    deg: Vec<f64>,
}

impl Adjacency {
    fn new(g: &WeightedGraph) -> Self {
        let n = g.node_count();
        let mut nbrs = vec![Vec::new(); n];
        for (i, j, w) in g.edges() {
            nbrs[i].push((j, w));
            nbrs[j].push((i, w));
        }
        Adjacency { nbrs, loops: (0..n).map(|i| g.self_loop(i)).collect(), deg: g.degrees() }
    }
}

fn cluster_term(vol: f64, links: f64) -> f64 {
    if vol > 0.0 {
        (vol - links) / vol
    } else {
        1.0
    }
}

/// Best Ncut among the `n - 1` splits of the nodes sorted by `y`.
fn sweep_split(adj: &Adjacency, y: &[f64]) -> Option<Partition> {
    let n = y.len();
    if n < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let total_vol: f64 = adj.deg.iter().sum();
    let total_links: f64 = total_vol;
    let mut side = vec![false; n];
    let (mut vol_a, mut links_a, mut cross) = (0.0, 0.0, 0.0);
    let mut best: Option<(f64, usize)> = None;
    for (pos, &v) in order.iter().enumerate().take(n - 1) {
        let to_a: f64 = adj.nbrs[v].iter().filter(|(u, _)| side[*u]).map(|(_, w)| w).sum();
        let to_b = adj.deg[v] - adj.loops[v] - to_a;
        side[v] = true;
        vol_a += adj.deg[v];
        links_a += 2.0 * to_a + adj.loops[v];
        cross += to_b - to_a;
        let vol_b = total_vol - vol_a;
        let links_b = total_links - links_a - 2.0 * cross;
        let cost = cluster_term(vol_a, links_a) + cluster_term(vol_b, links_b);
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, pos));
        }
    }
    let (_, split) = best?;
    let mut labels = vec![1; n];
    for &v in &order[..=split] {
        labels[v] = 0;
    }
    Some(Partition::from_labels(&labels))
}

/// Zero-cut bipartition when the graph is disconnected: one component with
/// positive volume against the rest, or the zero-volume nodes against the
/// single component that has volume.
fn component_split(adj: &Adjacency) -> Option<Partition> {
    let n = adj.deg.len();
    let mut comp = vec![usize::MAX; n];
    let mut vols = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = vols.len();
        let mut vol = 0.0;
        let mut stack = vec![start];
        comp[start] = id;
        while let Some(v) = stack.pop() {
            vol += adj.deg[v];
            for &(u, _) in &adj.nbrs[v] {
                if comp[u] == usize::MAX {
                    comp[u] = id;
                    stack.push(u);
                }
            }
        }
        vols.push(vol);
    }
    if vols.len() < 2 {
        return None;
    }
    let positive: Vec<usize> = (0..vols.len()).filter(|&c| vols[c] > 0.0).collect();
    let side0: Vec<bool> = match positive.as_slice() {
        [] => return None,
        [only] => (0..vols.len()).map(|c| c != *only).collect(),
        [first, ..] => (0..vols.len()).map(|c| c == *first).collect(),
    };
    Some(Partition::from_labels(&comp.iter().map(|&c| usize::from(!side0[c])).collect::<Vec<_>>()))
}

/// Greedy single-node moves that lower the Ncut, never emptying a
/// cluster, until none helps.
fn refine(adj: &Adjacency, p: Partition) -> Partition {
    const MAX_PASSES: usize = 100;
    let n = p.len();
    let k = p.k();
    let mut a = p.assignment().to_vec();
    let mut size = vec![0usize; k];
    let mut vol = vec![0.0; k];
    let mut links = vec![0.0; k];
    for v in 0..n {
        size[a[v]] += 1;
        vol[a[v]] += adj.deg[v];
        links[a[v]] += adj.loops[v];
        for &(u, w) in &adj.nbrs[v] {
            if a[u] == a[v] {
                links[a[v]] += w;
            }
        }
    }
    let mut to = vec![0.0; k];
    for _ in 0..MAX_PASSES {
        let mut moved = false;
        for v in 0..n {
            let from = a[v];
            if size[from] == 1 {
                continue;
            }
            to.iter_mut().for_each(|x| *x = 0.0);
            for &(u, w) in &adj.nbrs[v] {
                to[a[u]] += w;
            }
            let (d, l) = (adj.deg[v], adj.loops[v]);
            let from_before = cluster_term(vol[from], links[from]);
            let from_after = cluster_term(vol[from] - d, links[from] - 2.0 * to[from] - l);
            let mut best = (0.0, from);
            for c in 0..k {
                if c == from {
                    continue;
                }
                let gain = from_before + cluster_term(vol[c], links[c])
                    - from_after
                    - cluster_term(vol[c] + d, links[c] + 2.0 * to[c] + l);
                if gain > best.0 + 1e-12 {
                    best = (gain, c);
                }
            }
            let target = best.1;
            if target != from {
                vol[from] -= d;
                links[from] -= 2.0 * to[from] + l;
                vol[target] += d;
                links[target] += 2.0 * to[target] + l;
                size[from] -= 1;
                size[target] += 1;
                a[v] = target;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Partition::from_labels(&a)
}

/// Spectral k-way normalized cut.
pub fn ncut_kway(g: &WeightedGraph, k: usize, seed: u64) -> Result<Partition> {
    let n = g.node_count();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot cut {n} nodes into {k} clusters")));
    }
    if k == 1 {
        return Ok(Partition::single(n));
    }
    Ok(SpectralEmbedding::new(g).cut(g, &Adjacency::new(g), k, seed))
}

/// Cut-count selection policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutOptions {
    pub k_max: usize,
    /// Accept `K` when `ncut_cost / K <= tau`.
    pub tau: f64,
    pub seed: u64,
}

impl Default for CutOptions {
    fn default() -> Self {
        CutOptions { k_max: 8, tau: DEFAULT_TAU, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct ChosenCut {
    pub partition: Partition,
    /// `ncut_cost` for `K = 1..=costs.len()`.
    pub costs: Vec<f64>,
}

/// Cuts for `K = 1..=min(k_max, n)` and keeps the largest `K` whose
/// per-cut cost is within `tau`; falls back to a single cluster.
pub fn choose_and_cut(g: &WeightedGraph, opts: &CutOptions) -> ChosenCut {
    let n = g.node_count();
    let k_top = opts.k_max.max(1).min(n);
    if n == 0 {
        return ChosenCut { partition: Partition::single(0), costs: Vec::new() };
    }
    let embedding = (k_top > 1).then(|| (SpectralEmbedding::new(g), Adjacency::new(g)));
    let mut best = Partition::single(n);
    let mut costs = Vec::with_capacity(k_top);
    for k in 1..=k_top {
        let p = match &embedding {
            Some((e, adj)) => e.cut(g, adj, k, opts.seed),
            None => Partition::single(n),
        };
        let cost = ncut_cost(g, &p);
        costs.push(cost);
        if p.k() == k && cost / k as f64 <= opts.tau {
            best = p;
        }
    }
    ChosenCut { partition: best, costs }
}
