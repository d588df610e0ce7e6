//! Superpixel-based affinity learning.
//!
//! SLIC superpixels become graph nodes. Ground-truth pair labels say whether
//! two nearby superpixels belong to the same instance, a relation that is
//! unaffected by instance-ID permutation. Integration runs normalized cuts
//! over the superpixel graph inside each semantic component.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::labelmap::{
    canonicalize, connected_components, merge_fragments, neighbors4, Image, InstanceLabelMap, InstanceSegResult,
    SemanticLabelMap, BACKGROUND,
};
use crate::spectral::{choose_and_cut, CutOptions, WeightedGraph};

/// Color space used by the SLIC color distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ColorSpace {
    #[default]
    Rgb,
    Lab,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicOptions {
    pub target_count: usize,
    pub compactness: f64,
    pub iterations: usize,
    pub color_space: ColorSpace,
}

impl Default for SlicOptions {
    fn default() -> Self {
        SlicOptions { target_count: 256, compactness: 10.0, iterations: 10, color_space: ColorSpace::Rgb }
    }
}

/// Pixel-to-superpixel assignment with the 4-adjacency between superpixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperpixelPartition {
    height: usize,
    width: usize,
    sp_ids: Vec<u32>,
    count: usize,
    adjacency: BTreeSet<(u32, u32)>,
}

impl SuperpixelPartition {
    /// Builds a partition from per-pixel IDs, which must use every value in
    /// `0..S` for some `S`.
    pub fn from_ids(height: usize, width: usize, sp_ids: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 || sp_ids.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "superpixel map {height}x{width} with {} entries",
                sp_ids.len()
            )));
        }
        let count = sp_ids.iter().max().map_or(0, |&m| m as usize + 1);
        let mut used = vec![false; count];
        for &s in &sp_ids {
            used[s as usize] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::Invariant(format!("superpixel {empty} is empty")));
        }
        let mut adjacency = BTreeSet::new();
        for y in 0..height {
            for x in 0..width {
                let a = sp_ids[y * width + x];
                for (ny, nx) in [(y + 1, x), (y, x + 1)] {
                    if ny < height && nx < width {
                        let b = sp_ids[ny * width + nx];
                        if a != b {
                            adjacency.insert((a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
        Ok(SuperpixelPartition { height, width, sp_ids, count, adjacency })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ids(&self) -> &[u32] {
        &self.sp_ids
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn adjacency(&self) -> &BTreeSet<(u32, u32)> {
        &self.adjacency
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &s in &self.sp_ids {
            sizes[s as usize] += 1;
        }
        sizes
    }

    /// True when every superpixel is 4-connected.
    pub fn is_connected(&self) -> bool {
        let (h, w) = (self.height, self.width);
        let mut seen = vec![false; h * w];
        let mut started = vec![false; self.count];
        let mut stack = Vec::new();
        for start in 0..h * w {
            if seen[start] {
                continue;
            }
            let s = self.sp_ids[start];
            if started[s as usize] {
                return false;
            }
            started[s as usize] = true;
            seen[start] = true;
            stack.push(start);
            while let Some(p) = stack.pop() {
                for (ny, nx) in neighbors4(p / w, p % w, h, w) {
                    let q = ny * w + nx;
                    if !seen[q] && self.sp_ids[q] == s {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        true
    }

    fn neighbor_lists(&self) -> Vec<Vec<u32>> {
        let mut lists = vec![Vec::new(); self.count];
        for &(a, b) in &self.adjacency {
            lists[a as usize].push(b);
            lists[b as usize].push(a);
        }
        lists
    }

    fn centroids(&self) -> Vec<(f64, f64)> {
        let mut acc = vec![(0.0, 0.0, 0usize); self.count];
        for (p, &s) in self.sp_ids.iter().enumerate() {
            let e = &mut acc[s as usize];
            e.0 += (p / self.width) as f64;
            e.1 += (p % self.width) as f64;
            e.2 += 1;
        }
        acc.into_iter().map(|(y, x, n)| (y / n as f64, x / n as f64)).collect()
    }
}

fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = |c: u8| {
        let c = f64::from(c) / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    };
    let (r, g, b) = (lin(rgb[0]), lin(rgb[1]), lin(rgb[2]));
    let x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    let f = |t: f64| if t > 216.0 / 24389.0 { t.cbrt() } else { (24389.0 / 27.0 * t + 16.0) / 116.0 };
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

#[derive(Clone, Copy, Debug)]
struct Center {
    y: f64,
    x: f64,
    color: [f64; 3],
}

/// SLIC superpixels.
///
/// Centers start on a regular grid with spacing `sqrt(N / S)`. Each
/// iteration assigns the pixels inside a `2 * spacing` window around every
/// center by `d_color + (compactness / spacing) * d_space` (pixel centers at
/// half-integer coordinates), then moves centers to their members' mean.
/// Afterwards every superpixel keeps its largest 4-connected piece and the
/// other pieces join the neighbor they share the most border with.
pub fn slic(img: &Image, opts: &SlicOptions) -> Result<SuperpixelPartition> {
    let (h, w) = (img.height(), img.width());
    let n = h * w;
    if opts.target_count == 0 || opts.target_count > n {
        return Err(Error::invalid(format!(
            "superpixel target {} must be in 1..={n}",
            opts.target_count
        )));
    }
    if opts.iterations == 0 {
        return Err(Error::invalid("SLIC needs at least one iteration"));
    }
    if !(opts.compactness.is_finite() && opts.compactness >= 0.0) {
        return Err(Error::invalid("compactness must be finite and non-negative"));
    }
    let colors: Vec<[f64; 3]> = (0..n)
        .map(|p| {
            let rgb = img.pixel(p / w, p % w);
            match opts.color_space {
                ColorSpace::Rgb => rgb.map(f64::from),
                ColorSpace::Lab => srgb_to_lab(rgb),
            }
        })
        .collect();

    let step = (n as f64 / opts.target_count as f64).sqrt();
    let rows = ((h as f64 / step).round() as usize).clamp(1, h);
    let cols = ((w as f64 / step).round() as usize).clamp(1, w);
    let mut centers: Vec<Center> = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let y = (i as f64 + 0.5) * h as f64 / rows as f64;
            let x = (j as f64 + 0.5) * w as f64 / cols as f64;
            let p = (y.floor() as usize).min(h - 1) * w + (x.floor() as usize).min(w - 1);
            centers.push(Center { y, x, color: colors[p] });
        }
    }
    let mut labels: Vec<usize> = (0..n)
        .map(|p| ((p / w) * rows / h) * cols + (p % w) * cols / w)
        .collect();
    let spatial_weight = opts.compactness / step;
    let mut dist = vec![f64::INFINITY; n];

    for _ in 0..opts.iterations {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let y0 = (c.y - step).floor().max(0.0) as usize;
            let y1 = ((c.y + step).ceil() as usize).min(h);
            let x0 = (c.x - step).floor().max(0.0) as usize;
            let x1 = ((c.x + step).ceil() as usize).min(w);
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = y * w + x;
                    let col = &colors[p];
                    let dc = ((col[0] - c.color[0]).powi(2) + (col[1] - c.color[1]).powi(2) + (col[2] - c.color[2]).powi(2))
                        .sqrt();
                    let ds = (y as f64 + 0.5 - c.y).hypot(x as f64 + 0.5 - c.x);
                    let d = dc + spatial_weight * ds;
                    if d < dist[p] {
                        dist[p] = d;
                        labels[p] = k;
                    }
                }
            }
        }
        let mut acc = vec![[0.0f64; 6]; centers.len()];
        for p in 0..n {
            let a = &mut acc[labels[p]];
            a[0] += (p / w) as f64 + 0.5;
            a[1] += (p % w) as f64 + 0.5;
            a[2] += colors[p][0];
            a[3] += colors[p][1];
            a[4] += colors[p][2];
            a[5] += 1.0;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a[5] > 0.0 {
                *c = Center { y: a[0] / a[5], x: a[1] / a[5], color: [a[2] / a[5], a[3] / a[5], a[4] / a[5]] };
            }
        }
    }

    let merged = enforce_connectivity(&labels, h, w);
    SuperpixelPartition::from_ids(h, w, merged)
}

/// Keeps the largest 4-connected piece of every label and merges each other
/// piece into the neighboring piece it shares the most border with. Output
/// IDs are renumbered by first raster occurrence.
fn enforce_connectivity(labels: &[usize], h: usize, w: usize) -> Vec<u32> {
    let n = h * w;
    let mut piece = vec![usize::MAX; n];
    let mut piece_label = Vec::new();
    let mut piece_pixels: Vec<Vec<usize>> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if piece[start] != usize::MAX {
            continue;
        }
        let id = piece_label.len();
        piece_label.push(labels[start]);
        let mut members = vec![start];
        piece[start] = id;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for (ny, nx) in neighbors4(p / w, p % w, h, w) {
                let q = ny * w + nx;
                if piece[q] == usize::MAX && labels[q] == labels[start] {
                    piece[q] = id;
                    members.push(q);
                    stack.push(q);
                }
            }
        }
        piece_pixels.push(members);
    }
    let mut largest: BTreeMap<usize, usize> = BTreeMap::new();
    for (id, &l) in piece_label.iter().enumerate() {
        match largest.get(&l) {
            Some(&best) if piece_pixels[best].len() >= piece_pixels[id].len() => {}
            _ => {
                largest.insert(l, id);
            }
        }
    }
    // owner[piece] = the kept piece it ends up in.
    let mut owner: Vec<Option<usize>> = (0..piece_label.len())
        .map(|id| (largest[&piece_label[id]] == id).then_some(id))
        .collect();
    loop {
        let mut progressed = false;
        let mut waiting = false;
        for id in 0..owner.len() {
            if owner[id].is_some() {
                continue;
            }
            let mut border: BTreeMap<usize, usize> = BTreeMap::new();
            for &p in &piece_pixels[id] {
                for (ny, nx) in neighbors4(p / w, p % w, h, w) {
                    let other = piece[ny * w + nx];
                    if other != id {
                        if let Some(root) = owner[other] {
                            *border.entry(root).or_insert(0) += 1;
                        }
                    }
                }
            }
            match border.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
                Some((&root, _)) => {
                    owner[id] = Some(root);
                    progressed = true;
                }
                None => waiting = true,
            }
        }
        if !waiting || !progressed {
            break;
        }
    }
    let mut remap: BTreeMap<usize, u32> = BTreeMap::new();
    (0..n)
        .map(|p| {
            let root = owner[piece[p]].unwrap_or(piece[p]);
            let next = remap.len() as u32;
            *remap.entry(root).or_insert(next)
        })
        .collect()
}

/// Which superpixel pairs receive an affinity label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairUniverse {
    /// Pairs joined by a path of at most this many adjacency steps.
    Hops(usize),
    /// Pairs whose centroids are at most this far apart (pixels).
    CentroidRadius(f64),
}

impl Default for PairUniverse {
    fn default() -> Self {
        PairUniverse::Hops(2)
    }
}

/// Affinity per unordered superpixel pair, stored with `i < j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuperpixelAffinityLabels {
    pub pairs: BTreeMap<(u32, u32), f64>,
}

impl SuperpixelAffinityLabels {
    pub fn insert(&mut self, i: u32, j: u32, w: f64) -> Result<()> {
        if i == j {
            return Err(Error::invalid(format!("self pair ({i}, {i})")));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid(format!("pair weight {w} outside [0, 1]")));
        }
        self.pairs.insert((i.min(j), i.max(j)), w);
        Ok(())
    }

    pub fn get(&self, i: u32, j: u32) -> Option<f64> {
        self.pairs.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Most frequent value of `values` inside each superpixel, lowest value on
/// ties.
fn majority_per_superpixel(sp: &SuperpixelPartition, values: &[u32]) -> Vec<u32> {
    let mut counts: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new(); sp.count];
    for (&s, &v) in sp.sp_ids.iter().zip(values) {
        *counts[s as usize].entry(v).or_insert(0) += 1;
    }
    counts
        .iter()
        .map(|c| {
            c.iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map_or(BACKGROUND, |(&v, _)| v)
        })
        .collect()
}

/// Pairs in the chosen universe, sorted, `i < j`.
pub fn candidate_pairs(sp: &SuperpixelPartition, universe: PairUniverse) -> Vec<(u32, u32)> {
    let mut pairs = BTreeSet::new();
    match universe {
        PairUniverse::Hops(hops) => {
            let lists = sp.neighbor_lists();
            let mut depth = vec![usize::MAX; sp.count];
            for start in 0..sp.count {
                let mut touched = vec![start];
                depth[start] = 0;
                let mut queue = VecDeque::from([start]);
                while let Some(u) = queue.pop_front() {
                    if depth[u] == hops {
                        continue;
                    }
                    for &v in &lists[u] {
                        let v = v as usize;
                        if depth[v] == usize::MAX {
                            depth[v] = depth[u] + 1;
                            touched.push(v);
                            queue.push_back(v);
                            if v > start {
                                pairs.insert((start as u32, v as u32));
                            }
                        }
                    }
                }
                for t in touched {
                    depth[t] = usize::MAX;
                }
            }
        }
        PairUniverse::CentroidRadius(radius) => {
            let c = sp.centroids();
            for i in 0..sp.count {
                for j in i + 1..sp.count {
                    if (c[i].0 - c[j].0).hypot(c[i].1 - c[j].1) <= radius {
                        pairs.insert((i as u32, j as u32));
                    }
                }
            }
        }
    }
    pairs.into_iter().collect()
}

/// Ground-truth pair labels: 1 iff both superpixels' majority instance is
/// the same nonzero ID (background counts as ID 0).
pub fn pair_labels(
    sp: &SuperpixelPartition,
    inst: &InstanceLabelMap,
    universe: PairUniverse,
) -> Result<SuperpixelAffinityLabels> {
    if sp.height != inst.height() || sp.width != inst.width() {
        return Err(Error::DimensionMismatch("superpixel and instance maps differ in size".into()));
    }
    let major = majority_per_superpixel(sp, inst.labels());
    let pairs = candidate_pairs(sp, universe)
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (major[i as usize], major[j as usize]);
            ((i, j), if a == b && a != BACKGROUND { 1.0 } else { 0.0 })
        })
        .collect();
    Ok(SuperpixelAffinityLabels { pairs })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Method2Options {
    pub cut: CutOptions,
}

/// Partitions each semantic component by normalized cuts over the
/// superpixels whose majority lies in it. A superpixel's pixels inside the
/// component follow its cluster; pieces of superpixels that belong to a
/// different component join the adjacent instance they border most.
pub fn integrate_method2(
    sem: &SemanticLabelMap,
    sp: &SuperpixelPartition,
    labels: &SuperpixelAffinityLabels,
    opts: &Method2Options,
) -> Result<InstanceSegResult> {
    let (h, w) = (sem.height(), sem.width());
    if sp.height != h || sp.width != w {
        return Err(Error::DimensionMismatch(format!(
            "semantic map {h}x{w} vs superpixels {}x{}",
            sp.height, sp.width
        )));
    }
    if let Some((&(_, j), _)) = labels.pairs.iter().find(|(&(_, j), _)| j as usize >= sp.count) {
        return Err(Error::invalid(format!("pair label references superpixel {j} of {}", sp.count)));
    }
    let components = connected_components(sem);
    let comp = components.labels();
    let sp_comp = majority_per_superpixel(sp, comp);

    let mut nodes_of: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (s, &c) in sp_comp.iter().enumerate() {
        if c != BACKGROUND {
            nodes_of.entry(c).or_default().push(s as u32);
        }
    }
    // A labeled superpixel is trivially the same instance as itself. The
    // unit self-affinity keeps single-superpixel instances separable, while
    // superpixels without any label stay isolated and cannot justify a cut.
    let mut graph = WeightedGraph::new(sp.count);
    for (&(i, j), &wt) in &labels.pairs {
        if sp_comp[i as usize] != BACKGROUND && sp_comp[i as usize] == sp_comp[j as usize] {
            graph.set_edge(i as usize, j as usize, wt)?;
            graph.set_self_loop(i as usize, 1.0)?;
            graph.set_self_loop(j as usize, 1.0)?;
        }
    }

    // Instance per superpixel, valid only within that superpixel's component.
    let mut sp_instance = vec![BACKGROUND; sp.count];
    let mut class_of = BTreeMap::new();
    let mut next = 1u32;
    for (&c, nodes) in &nodes_of {
        let idx: Vec<usize> = nodes.iter().map(|&s| s as usize).collect();
        let chosen = choose_and_cut(&graph.subgraph(&idx), &opts.cut);
        for (&s, &a) in idx.iter().zip(chosen.partition.assignment()) {
            sp_instance[s] = next + a as u32;
        }
        for a in 0..chosen.partition.k() as u32 {
            class_of.insert(next + a, components.class_of()[&c]);
        }
        next += chosen.partition.k() as u32;
    }

    let mut out = vec![BACKGROUND; h * w];
    // Unclaimed pieces: (superpixel, component) -> pixels.
    let mut pieces: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for p in 0..h * w {
        let c = comp[p];
        if c == BACKGROUND {
            continue;
        }
        let s = sp.sp_ids[p];
        if sp_comp[s as usize] == c {
            out[p] = sp_instance[s as usize];
        } else {
            pieces.entry((s, c)).or_default().push(p);
        }
    }
    // Components that own no superpixel become one instance each.
    let mut orphan_comp: BTreeMap<u32, u32> = BTreeMap::new();
    for &(_, c) in pieces.keys() {
        if !nodes_of.contains_key(&c) && !orphan_comp.contains_key(&c) {
            orphan_comp.insert(c, next);
            class_of.insert(next, components.class_of()[&c]);
            next += 1;
        }
    }
    let mut waiting: Vec<(u32, Vec<usize>)> = Vec::new();
    for ((_, c), px) in pieces {
        match orphan_comp.get(&c) {
            Some(&id) => px.iter().for_each(|&p| out[p] = id),
            None => waiting.push((c, px)),
        }
    }
    while !waiting.is_empty() {
        let mut settled = Vec::new();
        for (k, (_, px)) in waiting.iter().enumerate() {
            let mut border: BTreeMap<u32, usize> = BTreeMap::new();
            for &p in px {
                for (ny, nx) in neighbors4(p / w, p % w, h, w) {
                    let q = ny * w + nx;
                    if out[q] != BACKGROUND && comp[q] == comp[p] {
                        *border.entry(out[q]).or_insert(0) += 1;
                    }
                }
            }
            if let Some((&id, _)) = border.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
                settled.push((k, id));
            }
        }
        if settled.is_empty() {
            // Disconnected from every claimed pixel: stand-alone instances.
            for (c, px) in waiting.drain(..) {
                class_of.insert(next, components.class_of()[&c]);
                px.iter().for_each(|&p| out[p] = next);
                next += 1;
            }
            break;
        }
        for &(k, id) in &settled {
            waiting[k].1.iter().for_each(|&p| out[p] = id);
        }
        let done: BTreeSet<usize> = settled.iter().map(|&(k, _)| k).collect();
        waiting = waiting
            .into_iter()
            .enumerate()
            .filter(|(k, _)| !done.contains(k))
            .map(|(_, v)| v)
            .collect();
    }

    let map = InstanceLabelMap::new(h, w, out, class_of)?;
    Ok(InstanceSegResult::scored_by_area(canonicalize(&merge_fragments(&map))))
}
