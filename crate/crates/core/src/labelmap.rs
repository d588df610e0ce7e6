//! Label grids and the quotient-space operations on them.
//!
//! An instance labeling is only meaningful up to a permutation of its nonzero
//! IDs. [`canonicalize`] picks one representative per equivalence class
//! (first-occurrence raster order) and [`partitions_equal`] compares two maps
//! in the quotient space.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Label used for background in both semantic and instance maps.
pub const BACKGROUND: u32 = 0;

/// 4-connectivity offsets `(dy, dx)`, used for components, boundaries and
/// adjacency everywhere in the crate.
pub const NEIGHBORS_4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

#[inline]
pub(crate) fn neighbors4(
    y: usize,
    x: usize,
    height: usize,
    width: usize,
) -> impl Iterator<Item = (usize, usize)> {
    NEIGHBORS_4.iter().filter_map(move |&(dy, dx)| {
        let ny = y as isize + dy;
        let nx = x as isize + dx;
        (ny >= 0 && nx >= 0 && (ny as usize) < height && (nx as usize) < width)
            .then_some((ny as usize, nx as usize))
    })
}

fn check_dims(height: usize, width: usize, len: usize, what: &str) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(format!("{what}: dimensions must be positive")));
    }
    if height * width != len {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {height}x{width} grid needs {} samples, got {len}",
            height * width
        )));
    }
    Ok(())
}

/// 8-bit RGB image, row-major, interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::DimensionMismatch(format!(
                "image {height}x{width} needs {} samples, got {}",
                height * width * 3,
                data.len()
            )));
        }
        check_dims(height, width, data.len() / 3, "image")?;
        Ok(Image { height, width, data })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(height * width * 3).collect();
        Image { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Per-pixel semantic class, 0 = background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticLabelMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
}

impl SemanticLabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(height, width, labels.len(), "semantic map")?;
        Ok(SemanticLabelMap { height, width, labels })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        SemanticLabelMap { height, width, labels: vec![BACKGROUND; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, y: usize, x: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Largest class ID present plus one.
    pub fn class_bound(&self) -> u32 {
        self.labels.iter().copied().max().map_or(1, |m| m + 1)
    }

    pub fn rescale(&self, target_h: usize, target_w: usize) -> Self {
        SemanticLabelMap {
            height: target_h,
            width: target_w,
            labels: resample_nearest(&self.labels, self.height, self.width, target_h, target_w),
        }
    }
}

/// Per-pixel instance ID (0 = background) plus the class of each instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceLabelMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    class_of: BTreeMap<u32, u32>,
}

impl InstanceLabelMap {
    /// Builds a map, checking that every nonzero ID has a non-background
    /// class. Entries of `class_of` for IDs absent from the grid are dropped.
    pub fn new(
        height: usize,
        width: usize,
        labels: Vec<u32>,
        class_of: BTreeMap<u32, u32>,
    ) -> Result<Self> {
        check_dims(height, width, labels.len(), "instance map")?;
        let present: BTreeSet<u32> = labels.iter().copied().filter(|&l| l != BACKGROUND).collect();
        let mut kept = BTreeMap::new();
        for &id in &present {
            match class_of.get(&id) {
                None => {
                    return Err(Error::Invariant(format!("instance {id} has no class entry")));
                }
                Some(&BACKGROUND) => {
                    return Err(Error::Invariant(format!("instance {id} mapped to background class")));
                }
                Some(&c) => {
                    kept.insert(id, c);
                }
            }
        }
        Ok(InstanceLabelMap { height, width, labels, class_of: kept })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        InstanceLabelMap {
            height,
            width,
            labels: vec![BACKGROUND; height * width],
            class_of: BTreeMap::new(),
        }
    }

    /// Every nonzero ID gets the same class.
    pub fn with_single_class(height: usize, width: usize, labels: Vec<u32>, class: u32) -> Result<Self> {
        let class_of = labels
            .iter()
            .filter(|&&l| l != BACKGROUND)
            .map(|&l| (l, class))
            .collect();
        Self::new(height, width, labels, class_of)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, y: usize, x: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn class_of(&self) -> &BTreeMap<u32, u32> {
        &self.class_of
    }

    pub fn class_of_id(&self, id: u32) -> Option<u32> {
        self.class_of.get(&id).copied()
    }

    pub fn instance_count(&self) -> usize {
        self.class_of.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.class_of.keys().copied()
    }

    /// Pixel count per instance ID.
    pub fn areas(&self) -> BTreeMap<u32, usize> {
        let mut areas = BTreeMap::new();
        for &l in self.labels.iter().filter(|&&l| l != BACKGROUND) {
            *areas.entry(l).or_insert(0) += 1;
        }
        areas
    }

    pub fn semantic(&self) -> SemanticLabelMap {
        let labels = self
            .labels
            .iter()
            .map(|&l| if l == BACKGROUND { BACKGROUND } else { self.class_of[&l] })
            .collect();
        SemanticLabelMap { height: self.height, width: self.width, labels }
    }

    /// Applies `f` to every nonzero ID. `f` must be injective for the result
    /// to describe the same partition.
    pub fn relabel(&self, f: impl Fn(u32) -> u32) -> Result<Self> {
        let labels = self
            .labels
            .iter()
            .map(|&l| if l == BACKGROUND { BACKGROUND } else { f(l) })
            .collect();
        let class_of = self.class_of.iter().map(|(&id, &c)| (f(id), c)).collect();
        Self::new(self.height, self.width, labels, class_of)
    }

    pub fn rescale(&self, target_h: usize, target_w: usize) -> Self {
        let labels = resample_nearest(&self.labels, self.height, self.width, target_h, target_w);
        let present: BTreeSet<u32> = labels.iter().copied().collect();
        let class_of = self
            .class_of
            .iter()
            .filter(|(id, _)| present.contains(id))
            .map(|(&id, &c)| (id, c))
            .collect();
        InstanceLabelMap { height: target_h, width: target_w, labels, class_of }
    }

    pub fn into_parts(self) -> (usize, usize, Vec<u32>, BTreeMap<u32, u32>) {
        (self.height, self.width, self.labels, self.class_of)
    }
}

/// Disjoint nonempty pixel sets, one per instance.
#[derive(Clone, Debug, Default)]
pub struct RegionPartition {
    pub regions: Vec<Vec<(usize, usize)>>,
}

impl RegionPartition {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn total_pixels(&self) -> usize {
        self.regions.iter().map(Vec::len).sum()
    }

    /// Writes region `m` as ID `m + 1`.
    pub fn to_label_grid(&self, height: usize, width: usize) -> Vec<u32> {
        let mut labels = vec![BACKGROUND; height * width];
        for (m, region) in self.regions.iter().enumerate() {
            for &(y, x) in region {
                labels[y * width + x] = m as u32 + 1;
            }
        }
        labels
    }

    /// The partition as a set of pixel sets, independent of region order.
    pub fn as_set(&self) -> BTreeSet<BTreeSet<(usize, usize)>> {
        self.regions.iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn same_partition(&self, other: &RegionPartition) -> bool {
        self.as_set() == other.as_set()
    }
}

/// A predicted instance map with one confidence score per instance.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSegResult {
    pub map: InstanceLabelMap,
    pub scores: BTreeMap<u32, f64>,
}

impl InstanceSegResult {
    pub fn new(map: InstanceLabelMap, scores: BTreeMap<u32, f64>) -> Result<Self> {
        let ids: Vec<u32> = map.ids().collect();
        if ids.len() != scores.len() || ids.iter().any(|id| !scores.contains_key(id)) {
            return Err(Error::Invariant("scores must cover exactly the instance IDs".into()));
        }
        if scores.values().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Invariant("scores must be finite and non-negative".into()));
        }
        Ok(InstanceSegResult { map, scores })
    }

    /// Scores every instance by its pixel area.
    pub fn scored_by_area(map: InstanceLabelMap) -> Self {
        let scores = map.areas().into_iter().map(|(id, a)| (id, a as f64)).collect();
        InstanceSegResult { map, scores }
    }
}

/// Maximal 4-connected regions of equal nonzero class become instances,
/// numbered in raster order of their first pixel.
pub fn connected_components(sem: &SemanticLabelMap) -> InstanceLabelMap {
    let (h, w) = (sem.height, sem.width);
    let mut labels = vec![BACKGROUND; h * w];
    let mut class_of = BTreeMap::new();
    let mut next = 1u32;
    let mut stack = Vec::new();
    for start in 0..h * w {
        let class = sem.labels[start];
        if class == BACKGROUND || labels[start] != BACKGROUND {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for (ny, nx) in neighbors4(p / w, p % w, h, w) {
                let q = ny * w + nx;
                if labels[q] == BACKGROUND && sem.labels[q] == class {
                    labels[q] = next;
                    stack.push(q);
                }
            }
        }
        class_of.insert(next, class);
        next += 1;
    }
    InstanceLabelMap { height: h, width: w, labels, class_of }
}

/// Relabels nonzero IDs to `1..=M` in order of first raster occurrence.
pub fn canonicalize(inst: &InstanceLabelMap) -> InstanceLabelMap {
    let mut remap: HashMap<u32, u32> = HashMap::new();
    let mut class_of = BTreeMap::new();
    let labels = inst
        .labels
        .iter()
        .map(|&l| {
            if l == BACKGROUND {
                return BACKGROUND;
            }
            let next = remap.len() as u32 + 1;
            *remap.entry(l).or_insert_with(|| {
                class_of.insert(next, inst.class_of[&l]);
                next
            })
        })
        .collect();
    InstanceLabelMap { height: inst.height, width: inst.width, labels, class_of }
}

/// Equality in the quotient space of instance labelings.
pub fn partitions_equal(a: &InstanceLabelMap, b: &InstanceLabelMap) -> Result<bool> {
    if a.height != b.height || a.width != b.width {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    Ok(canonicalize(a) == canonicalize(b))
}

/// One region per nonzero ID, in ascending ID order.
pub fn regions_of(inst: &InstanceLabelMap) -> RegionPartition {
    let mut by_id: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, &l) in inst.labels.iter().enumerate() {
        if l != BACKGROUND {
            by_id.entry(l).or_default().push((i / inst.width, i % inst.width));
        }
    }
    RegionPartition { regions: by_id.into_values().collect() }
}

/// Nearest-neighbor resampling with pixel-center alignment.
fn resample_nearest(src: &[u32], h: usize, w: usize, th: usize, tw: usize) -> Vec<u32> {
    assert!(th >= 1 && tw >= 1, "target dimensions must be positive");
    let rows: Vec<usize> = (0..th).map(|i| ((2 * i + 1) * h) / (2 * th)).collect();
    let cols: Vec<usize> = (0..tw).map(|j| ((2 * j + 1) * w) / (2 * tw)).collect();
    let mut out = Vec::with_capacity(th * tw);
    for &r in &rows {
        out.extend(cols.iter().map(|&c| src[r * w + c]));
    }
    out
}

/// Label maps that can be resampled to another grid size.
pub trait Rescale: Sized {
    fn rescale_to(&self, target_h: usize, target_w: usize) -> Self;
}

impl Rescale for SemanticLabelMap {
    fn rescale_to(&self, target_h: usize, target_w: usize) -> Self {
        self.rescale(target_h, target_w)
    }
}

impl Rescale for InstanceLabelMap {
    fn rescale_to(&self, target_h: usize, target_w: usize) -> Self {
        self.rescale(target_h, target_w)
    }
}

pub fn rescale_labels<M: Rescale>(map: &M, target_h: usize, target_w: usize) -> M {
    map.rescale_to(target_h, target_w)
}

/// Grows instances into unlabeled foreground pixels. Each round, every
/// unlabeled pixel with a labeled 4-neighbor of its own class takes the most
/// frequent such instance (ties: more 8-neighbors, then lower ID). Updates
/// are applied per round, so the result does not depend on scan order.
/// Returns the number of rounds that changed something.
pub(crate) fn fill_by_majority(
    labels: &mut [u32],
    classes: &[u32],
    height: usize,
    width: usize,
    class_of: &BTreeMap<u32, u32>,
) -> usize {
    let mut rounds = 0;
    let mut pending: Vec<usize> = (0..height * width)
        .filter(|&p| classes[p] != BACKGROUND && labels[p] == BACKGROUND)
        .collect();
    loop {
        let mut updates = Vec::new();
        for &p in &pending {
            let (y, x) = (p / width, p % width);
            let class = classes[p];
            let mut votes: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
            for (ny, nx) in neighbors4(y, x, height, width) {
                let l = labels[ny * width + nx];
                if l != BACKGROUND && class_of.get(&l) == Some(&class) {
                    votes.entry(l).or_insert((0, 0)).0 += 1;
                }
            }
            if votes.is_empty() {
                continue;
            }
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (ny, nx) = (y as isize + dy, x as isize + dx);
                    if (dy, dx) == (0, 0) || ny < 0 || nx < 0 || ny >= height as isize || nx >= width as isize {
                        continue;
                    }
                    let l = labels[ny as usize * width + nx as usize];
                    if let Some(v) = votes.get_mut(&l) {
                        v.1 += 1;
                    }
                }
            }
            let winner = votes
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&l, _)| l)
                .expect("nonempty");
            updates.push((p, winner));
        }
        if updates.is_empty() {
            return rounds;
        }
        rounds += 1;
        for &(p, l) in &updates {
            labels[p] = l;
        }
        pending.retain(|&p| labels[p] == BACKGROUND);
    }
}

/// Splits every instance into its 4-connected fragments, keeps the largest
/// fragment under the original ID and merges each smaller fragment into the
/// same-class neighboring instance it shares the most border with. Fragments
/// with no such neighbor become instances of their own.
pub(crate) fn merge_fragments(inst: &InstanceLabelMap) -> InstanceLabelMap {
    let (h, w) = (inst.height, inst.width);
    // Fragment labeling over instance IDs.
    let mut frag = vec![usize::MAX; h * w];
    let mut frag_owner: Vec<u32> = Vec::new();
    let mut frag_size: Vec<usize> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..h * w {
        let id = inst.labels[start];
        if id == BACKGROUND || frag[start] != usize::MAX {
            continue;
        }
        let f = frag_owner.len();
        frag_owner.push(id);
        frag_size.push(0);
        frag[start] = f;
        stack.push(start);
        while let Some(p) = stack.pop() {
            frag_size[f] += 1;
            for (ny, nx) in neighbors4(p / w, p % w, h, w) {
                let q = ny * w + nx;
                if frag[q] == usize::MAX && inst.labels[q] == id {
                    frag[q] = f;
                    stack.push(q);
                }
            }
        }
    }
    if frag_owner.len() == inst.class_of.len() {
        return canonicalize(inst);
    }

    // Largest fragment per ID (first in raster order on ties) is the keeper.
    let mut keeper: BTreeMap<u32, usize> = BTreeMap::new();
    for (f, &id) in frag_owner.iter().enumerate() {
        match keeper.get(&id) {
            Some(&k) if frag_size[k] >= frag_size[f] => {}
            _ => {
                keeper.insert(id, f);
            }
        }
    }

    let mut labels = inst.labels.clone();
    let mut class_of = inst.class_of.clone();
    let mut next_id = inst.class_of.keys().next_back().copied().unwrap_or(0) + 1;
    // Smallest fragments first so that they attach to settled neighbors.
    let mut orphans: Vec<usize> = (0..frag_owner.len())
        .filter(|&f| keeper[&frag_owner[f]] != f)
        .collect();
    orphans.sort_by_key(|&f| (frag_size[f], f));
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); frag_owner.len()];
    for (p, &f) in frag.iter().enumerate() {
        if f != usize::MAX {
            members[f].push(p);
        }
    }
    for f in orphans {
        let own = frag_owner[f];
        let class = inst.class_of[&own];
        let mut border: BTreeMap<u32, usize> = BTreeMap::new();
        for &p in &members[f] {
            for (ny, nx) in neighbors4(p / w, p % w, h, w) {
                let q = ny * w + nx;
                let other = labels[q];
                if other != BACKGROUND && frag[q] != f && class_of.get(&other) == Some(&class) {
                    *border.entry(other).or_insert(0) += 1;
                }
            }
        }
        let target = border
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&id, _)| id);
        let target = match target {
            Some(t) => t,
            None => {
                let t = next_id;
                next_id += 1;
                class_of.insert(t, class);
                t
            }
        };
        for &p in &members[f] {
            labels[p] = target;
        }
    }
    let merged = InstanceLabelMap { height: h, width: w, labels, class_of };
    // Drop IDs that lost all pixels.
    let present: BTreeSet<u32> = merged.labels.iter().copied().collect();
    let class_of = merged
        .class_of
        .iter()
        .filter(|(id, _)| present.contains(id))
        .map(|(&k, &v)| (k, v))
        .collect();
    canonicalize(&InstanceLabelMap { class_of, ..merged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(h: usize, w: usize, labels: &[u32]) -> InstanceLabelMap {
        InstanceLabelMap::with_single_class(h, w, labels.to_vec(), 1).unwrap()
    }

    #[test]
    fn components_of_empty_map() {
        let cc = connected_components(&SemanticLabelMap::zeros(4, 4));
        assert_eq!(cc.instance_count(), 0);
        assert!(cc.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn components_split_by_background_column() {
        let sem = SemanticLabelMap::new(2, 3, vec![1, 0, 1, 1, 0, 1]).unwrap();
        let cc = connected_components(&sem);
        assert_eq!(cc.labels(), &[1, 0, 2, 1, 0, 2]);
        assert_eq!(cc.class_of_id(1), Some(1));
        assert_eq!(cc.class_of_id(2), Some(1));
    }

    #[test]
    fn components_do_not_leak_diagonally() {
        let sem = SemanticLabelMap::new(2, 2, vec![1, 0, 0, 1]).unwrap();
        assert_eq!(connected_components(&sem).instance_count(), 2);
    }

    #[test]
    fn canonicalize_orders_by_first_occurrence() {
        let m = InstanceLabelMap::new(
            1,
            4,
            vec![3, 7, 7, 3],
            BTreeMap::from([(3, 2), (7, 5)]),
        )
        .unwrap();
        let c = canonicalize(&m);
        assert_eq!(c.labels(), &[1, 2, 2, 1]);
        assert_eq!(c.class_of(), &BTreeMap::from([(1, 2), (2, 5)]));
        assert_eq!(canonicalize(&c), c);
    }

    #[test]
    fn swapped_ids_are_equal_moved_pixel_is_not() {
        let a = inst(2, 2, &[1, 1, 2, 2]);
        let swapped = inst(2, 2, &[2, 2, 1, 1]);
        let moved = inst(2, 2, &[1, 1, 1, 2]);
        assert!(partitions_equal(&a, &swapped).unwrap());
        assert!(!partitions_equal(&a, &moved).unwrap());
        assert!(partitions_equal(&a, &inst(1, 4, &[1, 1, 2, 2])).is_err());
    }

    #[test]
    fn class_difference_breaks_equality() {
        let a = InstanceLabelMap::new(1, 2, vec![1, 2], BTreeMap::from([(1, 1), (2, 2)])).unwrap();
        let b = InstanceLabelMap::new(1, 2, vec![1, 2], BTreeMap::from([(1, 2), (2, 1)])).unwrap();
        assert!(!partitions_equal(&a, &b).unwrap());
    }

    #[test]
    fn regions_of_edge_cases() {
        let full = inst(3, 3, &[4; 9]);
        let r = regions_of(&full);
        assert_eq!(r.len(), 1);
        assert_eq!(r.total_pixels(), 9);
        assert!(regions_of(&InstanceLabelMap::empty(3, 3)).is_empty());
    }

    #[test]
    fn rescale_identity_and_upscale() {
        let m = inst(2, 2, &[1, 2, 1, 2]);
        assert_eq!(m.rescale(2, 2), m);
        let up = m.rescale(4, 4);
        assert_eq!(up.labels(), &[1, 1, 2, 2, 1, 1, 2, 2, 1, 1, 2, 2, 1, 1, 2, 2]);
    }

    #[test]
    fn rescale_constant_round_trip() {
        let sem = SemanticLabelMap::new(6, 10, vec![3; 60]).unwrap();
        assert_eq!(sem.rescale(2, 3).rescale(6, 10), sem);
    }

    #[test]
    fn rescale_drops_vanished_ids() {
        let m = inst(1, 4, &[1, 1, 1, 2]);
        let down = m.rescale(1, 1);
        assert_eq!(down.instance_count(), 1);
    }

    #[test]
    fn new_rejects_missing_or_background_class() {
        assert!(InstanceLabelMap::new(1, 2, vec![1, 2], BTreeMap::from([(1, 1)])).is_err());
        assert!(InstanceLabelMap::new(1, 1, vec![1], BTreeMap::from([(1, 0)])).is_err());
        assert!(InstanceLabelMap::new(1, 2, vec![1], BTreeMap::new()).is_err());
    }

    #[test]
    fn merge_fragments_attaches_small_piece() {
        // Both IDs have a one-pixel stray. ID 2's stray (earlier fragment)
        // joins ID 1, after which ID 1's stray is no longer cut off.
        let m = inst(1, 6, &[1, 1, 2, 1, 2, 2]);
        let merged = merge_fragments(&m);
        assert_eq!(merged.labels(), &[1, 1, 1, 1, 2, 2]);
        let m = inst(1, 6, &[1, 1, 0, 2, 1, 2]);
        assert_eq!(merge_fragments(&m).labels(), &[1, 1, 0, 2, 2, 2]);
    }

    #[test]
    fn merge_fragments_keeps_isolated_piece() {
        let m = inst(1, 5, &[1, 1, 0, 1, 0]);
        let merged = merge_fragments(&m);
        assert_eq!(merged.labels(), &[1, 1, 0, 2, 0]);
    }

    #[test]
    fn area_scores() {
        let r = InstanceSegResult::scored_by_area(inst(1, 4, &[1, 1, 1, 2]));
        assert_eq!(r.scores, BTreeMap::from([(1, 3.0), (2, 1.0)]));
        assert!(InstanceSegResult::new(inst(1, 1, &[1]), BTreeMap::new()).is_err());
    }
}
