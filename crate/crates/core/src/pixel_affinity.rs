//! Pixel-based affinity mapping.
//!
//! Every pixel's `k x k` neighborhood defines a binary `k^2 x k^2`
//! same-instance matrix. The matrix depends only on which pixels share a
//! label, never on the label values, so it is constant on the quotient space.
//! A k-means codebook turns the matrices into per-pixel classes; decoding
//! votes the class patterns back into a sparse pixel affinity graph that
//! normalized cuts split into instances.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::labelmap::{
    connected_components, fill_by_majority, merge_fragments, InstanceLabelMap, InstanceSegResult,
    SemanticLabelMap, BACKGROUND,
};
use crate::spectral::{choose_and_cut, kmeans_weighted, CutOptions, WeightedGraph};

pub const DEFAULT_PATCH_SIZE: usize = 5;
pub const DEFAULT_CLASS_COUNT: usize = 100;
/// Side of the square working resolution.
pub const DEFAULT_WORKING_SIZE: usize = 64;

const CODEBOOK_MAGIC: &[u8; 4] = b"AFCB";
const CODEBOOK_VERSION: u32 = 1;

fn check_patch_size(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::invalid(format!("patch size must be odd, got {k}")));
    }
    Ok(())
}

/// Patch labels relabeled by first occurrence, with replicate padding at the
/// frame. Two patches give the same key iff they have the same pattern.
fn patch_key(inst: &InstanceLabelMap, cy: usize, cx: usize, k: usize) -> Vec<u8> {
    let r = (k / 2) as isize;
    let (h, w) = (inst.height() as isize, inst.width() as isize);
    let mut seen: Vec<u32> = Vec::with_capacity(k * k);
    let mut key = Vec::with_capacity(k * k);
    for dy in -r..=r {
        let y = (cy as isize + dy).clamp(0, h - 1) as usize;
        for dx in -r..=r {
            let x = (cx as isize + dx).clamp(0, w - 1) as usize;
            let l = inst.get(y, x);
            let slot = match seen.iter().position(|&s| s == l) {
                Some(p) => p,
                None => {
                    seen.push(l);
                    seen.len() - 1
                }
            };
            key.push(slot as u8);
        }
    }
    key
}

/// Binary same-instance matrix over the pixels of one patch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalAffinityPattern {
    k: usize,
    matrix: Vec<u8>,
}

impl LocalAffinityPattern {
    fn from_key(k: usize, key: &[u8]) -> Self {
        let n = k * k;
        let mut matrix = vec![0u8; n * n];
        for p in 0..n {
            for q in 0..n {
                matrix[p * n + q] = u8::from(key[p] == key[q]);
            }
        }
        LocalAffinityPattern { k, matrix }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Row-major `k^2 x k^2` entries.
    pub fn matrix(&self) -> &[u8] {
        &self.matrix
    }

    pub fn get(&self, p: usize, q: usize) -> u8 {
        self.matrix[p * self.k * self.k + q]
    }
}

/// Pattern of the `k x k` patch centered at `(y, x)`. Background counts as
/// its own label inside the patch.
pub fn patch_affinity(inst: &InstanceLabelMap, center: (usize, usize), k: usize) -> Result<LocalAffinityPattern> {
    check_patch_size(k)?;
    if center.0 >= inst.height() || center.1 >= inst.width() {
        return Err(Error::invalid(format!("patch center {center:?} outside the map")));
    }
    Ok(LocalAffinityPattern::from_key(k, &patch_key(inst, center.0, center.1, k)))
}

/// Cluster centers of local affinity patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityCodebook {
    k: usize,
    centers: Vec<Vec<f64>>,
    representative: Vec<Vec<u8>>,
    /// Binary centers by value, first index kept: an exact hit is the
    /// nearest center.
    exact: HashMap<Vec<u8>, usize>,
}

impl AffinityCodebook {
    pub fn new(k: usize, centers: Vec<Vec<f64>>) -> Result<Self> {
        check_patch_size(k)?;
        let len = k.pow(4);
        if centers.is_empty() {
            return Err(Error::invalid("codebook needs at least one class"));
        }
        if centers.iter().any(|c| c.len() != len || c.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid(format!("codebook centers must hold {len} finite entries")));
        }
        let representative = centers
            .iter()
            .map(|c| c.iter().map(|&v| u8::from(v >= 0.5)).collect())
            .collect::<Vec<Vec<u8>>>();
        let mut exact = HashMap::new();
        for (c, center) in centers.iter().enumerate() {
            if center.iter().all(|&v| v == 0.0 || v == 1.0) {
                exact.entry(representative[c].clone()).or_insert(c);
            }
        }
        Ok(AffinityCodebook { k, centers, representative, exact })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn class_count(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Binary pattern decoded for class `c`.
    pub fn representative(&self, c: usize) -> &[u8] {
        &self.representative[c]
    }

    /// Index of the nearest center in squared element-wise distance, lowest
    /// index on ties.
    pub fn nearest(&self, pattern: &LocalAffinityPattern) -> usize {
        self.nearest_to(&pattern.matrix)
    }

    fn nearest_to(&self, matrix: &[u8]) -> usize {
        if let Some(&c) = self.exact.get(matrix) {
            return c;
        }
        let mut best = (0, f64::INFINITY);
        for (c, center) in self.centers.iter().enumerate() {
            let d: f64 = center
                .iter()
                .zip(matrix)
                .map(|(&m, &x)| {
                    let e = f64::from(x) - m;
                    e * e
                })
                .sum();
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    }

    /// Little-endian file image: magic, version, k, C, then the centers.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.centers.len() * self.k.pow(4) * 8);
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.extend_from_slice(&CODEBOOK_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(self.centers.len() as u32).to_le_bytes());
        for v in self.centers.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != CODEBOOK_MAGIC {
            return Err(Error::format("not a codebook file (bad magic)"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        if word(4) != CODEBOOK_VERSION as usize {
            return Err(Error::format(format!("unsupported codebook version {}", word(4))));
        }
        let (k, c) = (word(8), word(12));
        let len = k
            .checked_pow(4)
            .filter(|&l| l > 0)
            .ok_or_else(|| Error::format("bad codebook patch size"))?;
        let expected = c
            .checked_mul(len)
            .and_then(|n| n.checked_mul(8))
            .and_then(|n| n.checked_add(16))
            .ok_or_else(|| Error::format("codebook header overflows"))?;
        if bytes.len() != expected {
            return Err(Error::format(format!("codebook should be {expected} bytes, got {}", bytes.len())));
        }
        let centers = bytes[16..]
            .chunks_exact(len * 8)
            .map(|chunk| {
                chunk
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect()
            })
            .collect();
        AffinityCodebook::new(k, centers).map_err(|e| Error::format(e.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct CodebookFit {
    pub codebook: AffinityCodebook,
    /// Sum over all training pixels of the squared distance between the
    /// pixel's pattern and its center.
    pub distortion: f64,
    pub distinct_patterns: usize,
}

fn upper_features(k: usize, key: &[u8]) -> Vec<f64> {
    let n = k * k;
    let mut f = Vec::with_capacity(n * (n - 1) / 2);
    for p in 0..n {
        for q in p + 1..n {
            f.push(if key[p] == key[q] { 1.0 } else { 0.0 });
        }
    }
    f
}

fn full_from_upper(k: usize, upper: &[f64]) -> Vec<f64> {
    let n = k * k;
    let mut m = vec![0.0; n * n];
    let mut it = upper.iter();
    for p in 0..n {
        m[p * n + p] = 1.0;
        for q in p + 1..n {
            let v = *it.next().unwrap();
            m[p * n + q] = v;
            m[q * n + p] = v;
        }
    }
    m
}

/// Learns `c` pattern classes from every pixel of every training map.
///
/// Coincident patterns are pooled with multiplicity weights, which leaves
/// the k-means objective unchanged. Since patterns are symmetric with unit
/// diagonal, clustering runs on the strict upper triangle; full-matrix
/// distances are exactly twice those. When there are no more distinct
/// patterns than classes, each pattern becomes a center (most frequent
/// first) and the last one fills the remaining slots.
pub fn build_codebook(train: &[InstanceLabelMap], k: usize, c: usize, seed: u64) -> Result<CodebookFit> {
    check_patch_size(k)?;
    if c == 0 {
        return Err(Error::invalid("codebook needs at least one class"));
    }
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for inst in train {
        for y in 0..inst.height() {
            for x in 0..inst.width() {
                *counts.entry(patch_key(inst, y, x, k)).or_insert(0) += 1;
            }
        }
    }
    let distinct = counts.len();
    if distinct <= c {
        let mut ranked: Vec<(&Vec<u8>, &usize)> = counts.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let mut centers: Vec<Vec<f64>> = ranked
            .iter()
            .map(|(key, _)| full_from_upper(k, &upper_features(k, key)))
            .collect();
        let last = centers.last().cloned().expect("at least one pattern");
        centers.resize(c, last);
        return Ok(CodebookFit { codebook: AffinityCodebook::new(k, centers)?, distortion: 0.0, distinct_patterns: distinct });
    }

    let points: Vec<Vec<f64>> = counts.keys().map(|key| upper_features(k, key)).collect();
    let weights: Vec<f64> = counts.values().map(|&n| n as f64).collect();
    let fit = kmeans_weighted(&points, &weights, c, seed, 100, 1e-6)?;
    let centers = fit.centers.iter().map(|u| full_from_upper(k, u)).collect();
    Ok(CodebookFit {
        codebook: AffinityCodebook::new(k, centers)?,
        distortion: 2.0 * fit.distortion,
        distinct_patterns: distinct,
    })
}

/// Per-pixel pattern class at the working resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchClassMap {
    height: usize,
    width: usize,
    classes: Vec<u32>,
}

impl PatchClassMap {
    pub fn new(height: usize, width: usize, classes: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 || classes.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "class map {height}x{width} with {} entries",
                classes.len()
            )));
        }
        Ok(PatchClassMap { height, width, classes })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn get(&self, y: usize, x: usize) -> u32 {
        self.classes[y * self.width + x]
    }
}

/// Maps every pixel to the class of its neighborhood pattern.
pub fn encode(inst: &InstanceLabelMap, cb: &AffinityCodebook) -> PatchClassMap {
    let k = cb.k();
    let mut cache: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut classes = Vec::with_capacity(inst.height() * inst.width());
    for y in 0..inst.height() {
        for x in 0..inst.width() {
            let key = patch_key(inst, y, x, k);
            let class = *cache
                .entry(key)
                .or_insert_with_key(|key| cb.nearest(&LocalAffinityPattern::from_key(k, key)) as u32);
            classes.push(class);
        }
    }
    PatchClassMap { height: inst.height(), width: inst.width(), classes }
}

/// Sparse pixel affinities voted from patch classes. Only pairs that
/// co-occur inside some in-frame patch window are stored (Chebyshev
/// distance below `k`); the diagonal is implicitly 1.
#[derive(Clone, Debug)]
pub struct GlobalAffinity {
    height: usize,
    width: usize,
    graph: WeightedGraph,
}

impl GlobalAffinity {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Stored weight between pixel indices; `None` for pairs outside the
    /// voting neighborhood.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return (i < self.node_count()).then_some(1.0);
        }
        self.graph.get(i, j)
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }
}

/// Averages, for every pixel pair, the decoded pattern entry over all
/// patches that contain both pixels. Patches are the in-frame parts of the
/// windows centered at each pixel.
pub fn decode_vote(cm: &PatchClassMap, cb: &AffinityCodebook) -> Result<GlobalAffinity> {
    let k = cb.k();
    let (h, w) = (cm.height, cm.width);
    if let Some(&bad) = cm.classes.iter().find(|&&c| c as usize >= cb.class_count()) {
        return Err(Error::invalid(format!("class {bad} outside codebook of {}", cb.class_count())));
    }
    let r = (k / 2) as isize;
    let kk = k * k;
    // Forward offsets (dy > 0, or dy == 0 and dx > 0) within Chebyshev k - 1.
    let span = k as isize - 1;
    let offsets: Vec<(isize, isize)> = (0..=span)
        .flat_map(|dy| (-span..=span).map(move |dx| (dy, dx)))
        .filter(|&(dy, dx)| dy > 0 || dx > 0)
        .collect();
    let offset_index = |dy: isize, dx: isize| -> usize {
        let row = dy as usize * (2 * k - 1) + (dx + span) as usize;
        // Row 0 only keeps dx > 0, i.e. the last k - 1 slots of that row.
        row - k
    };
    debug_assert_eq!(offset_index(0, 1), 0);
    let stride = offsets.len();
    let mut sum = vec![0.0f64; h * w * stride];
    let mut count = vec![0u32; h * w * stride];
    let mut cells: Vec<(usize, usize, usize)> = Vec::with_capacity(kk);

    for cy in 0..h {
        for cx in 0..w {
            let rep = cb.representative(cm.classes[cy * w + cx] as usize);
            cells.clear();
            for py in 0..k {
                let y = cy as isize - r + py as isize;
                if y < 0 || y >= h as isize {
                    continue;
                }
                for px in 0..k {
                    let x = cx as isize - r + px as isize;
                    if x < 0 || x >= w as isize {
                        continue;
                    }
                    cells.push((py * k + px, y as usize, x as usize));
                }
            }
            for (a, &(pa, ya, xa)) in cells.iter().enumerate() {
                for &(pb, yb, xb) in &cells[a + 1..] {
                    // Cells are in raster order, so (ya, xa) precedes (yb, xb).
                    let dy = yb as isize - ya as isize;
                    let dx = xb as isize - xa as isize;
                    let slot = (ya * w + xa) * stride + offset_index(dy, dx);
                    sum[slot] += f64::from(rep[pa * kk + pb]);
                    count[slot] += 1;
                }
            }
        }
    }

    let mut graph = WeightedGraph::new(h * w);
    for i in 0..h * w {
        let (y, x) = (i / w, i % w);
        for (o, &(dy, dx)) in offsets.iter().enumerate() {
            let slot = i * stride + o;
            if count[slot] == 0 {
                continue;
            }
            let j = (y as isize + dy) as usize * w + (x as isize + dx) as usize;
            graph.set_edge(i, j, sum[slot] / f64::from(count[slot]))?;
        }
    }
    Ok(GlobalAffinity { height: h, width: w, graph })
}

/// Options for pixel-affinity integration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Method1Options {
    pub cut: CutOptions,
}

/// Splits each semantic component at the class-map resolution with
/// normalized cuts on the voted affinities, then maps the instances back to
/// the semantic map's resolution. Instances are scored by area.
pub fn integrate_method1(
    sem: &SemanticLabelMap,
    cm: &PatchClassMap,
    cb: &AffinityCodebook,
    opts: &Method1Options,
) -> Result<InstanceSegResult> {
    let (h, w) = (cm.height, cm.width);
    let sem_work = sem.rescale(h, w);
    let affinity = decode_vote(cm, cb)?;
    let components = connected_components(&sem_work);

    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (p, &c) in components.labels().iter().enumerate() {
        if c != BACKGROUND {
            members.entry(c).or_default().push(p);
        }
    }
    let mut labels = vec![BACKGROUND; h * w];
    let mut class_of = BTreeMap::new();
    let mut next = 1u32;
    for (comp, nodes) in &members {
        let class = components.class_of()[comp];
        let sub = affinity.graph.subgraph(nodes);
        let chosen = choose_and_cut(&sub, &opts.cut);
        let base = next;
        for (&p, &a) in nodes.iter().zip(chosen.partition.assignment()) {
            labels[p] = base + a as u32;
        }
        for a in 0..chosen.partition.k() as u32 {
            class_of.insert(base + a, class);
        }
        next += chosen.partition.k() as u32;
    }
    let working = merge_fragments(&InstanceLabelMap::new(h, w, labels, class_of)?);
    let projected = project_to_semantic(&working, sem)?;
    Ok(InstanceSegResult::scored_by_area(projected))
}

/// Carries instances from another resolution onto `sem`. Pixels keep the
/// upsampled instance when its class matches, unclaimed foreground pixels
/// grow from matching neighbors, instances are cut along `sem`'s
/// components, and components left empty become single instances.
pub(crate) fn project_to_semantic(inst: &InstanceLabelMap, sem: &SemanticLabelMap) -> Result<InstanceLabelMap> {
    let (h, w) = (sem.height(), sem.width());
    if inst.height() == h && inst.width() == w {
        return Ok(merge_fragments(inst));
    }
    let up = inst.rescale(h, w);
    let classes = sem.labels();
    let mut labels: Vec<u32> = up
        .labels()
        .iter()
        .zip(classes)
        .map(|(&l, &c)| if l != BACKGROUND && c != BACKGROUND && up.class_of()[&l] == c { l } else { BACKGROUND })
        .collect();
    let class_of = up.class_of().clone();
    fill_by_majority(&mut labels, classes, h, w, &class_of);

    // Split along semantic components; give empty components their own ID.
    let components = connected_components(sem);
    let mut next = class_of.keys().next_back().copied().unwrap_or(0) + 1;
    let mut pair_ids: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    let mut out = vec![BACKGROUND; h * w];
    let mut new_class = BTreeMap::new();
    for p in 0..h * w {
        let comp = components.labels()[p];
        if comp == BACKGROUND {
            continue;
        }
        let key = (comp, labels[p]);
        let id = *pair_ids.entry(key).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        out[p] = id;
        new_class.insert(id, classes[p]);
    }
    let result = InstanceLabelMap::new(h, w, out, new_class)?;
    Ok(merge_fragments(&result))
}
