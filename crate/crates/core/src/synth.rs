//! Synthetic scenes and predictor-noise simulators.
//!
//! Everything here is a pure function of its arguments and seed; the
//! generator is xoshiro256++ (see [`crate::rng`]).

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::boundary::BoundaryMap;
use crate::error::{Error, Result};
use crate::labelmap::{neighbors4, Image, InstanceLabelMap, SemanticLabelMap, BACKGROUND};
use crate::pixel_affinity::PatchClassMap;
use crate::rng::{seeded, QsegRng};
use crate::superpixel::SuperpixelAffinityLabels;

/// Relative weights of the shape kinds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeMix {
    pub rectangles: f64,
    pub ellipses: f64,
    pub blobs: f64,
}

impl Default for ShapeMix {
    fn default() -> Self {
        ShapeMix { rectangles: 1.0, ellipses: 1.0, blobs: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub class_count: u32,
    /// Inclusive range of instance counts.
    pub instances: (usize, usize),
    pub shapes: ShapeMix,
    /// Inclusive range of shape extents in pixels.
    pub size: (usize, usize),
    /// Chance that a new instance is placed against an existing one of the
    /// same class.
    pub touching_probability: f64,
    /// Standard deviation of per-pixel color noise.
    pub color_noise: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            height: 64,
            width: 64,
            class_count: 3,
            instances: (2, 5),
            shapes: ShapeMix::default(),
            size: (10, 22),
            touching_probability: 0.5,
            color_noise: 6.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub image: Image,
    pub semantic: SemanticLabelMap,
    pub instances: InstanceLabelMap,
}

const PLACEMENT_ATTEMPTS: usize = 200;

/// Shape as offsets from its bounding-box corner.
type Mask = Vec<(usize, usize)>;

fn uniform_incl(rng: &mut QsegRng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

fn irange(rng: &mut QsegRng, lo: isize, hi: isize) -> isize {
    rng.random_range(lo as i64..=hi as i64) as isize
}

fn make_shape(rng: &mut QsegRng, mix: &ShapeMix, size: (usize, usize)) -> Mask {
    let total = mix.rectangles + mix.ellipses + mix.blobs;
    let pick = rng.random::<f64>() * total;
    let s = uniform_incl(rng, size.0, size.1);
    let lo = (s * 3 / 5).max(2);
    let (a, b) = (uniform_incl(rng, lo, s.max(lo)), uniform_incl(rng, lo, s.max(lo)));
    let raw: Vec<(isize, isize)> = if pick < mix.rectangles {
        (0..a as isize).flat_map(|y| (0..b as isize).map(move |x| (y, x))).collect()
    } else if pick < mix.rectangles + mix.ellipses {
        let (ry, rx) = ((a as f64 / 2.0).max(1.0), (b as f64 / 2.0).max(1.0));
        let (cy, cx) = (ry.floor() as isize, rx.floor() as isize);
        let mut px = Vec::new();
        for y in -cy..=cy {
            for x in -cx..=cx {
                if (y as f64 / ry).powi(2) + (x as f64 / rx).powi(2) <= 1.0 {
                    px.push((y, x));
                }
            }
        }
        px
    } else {
        // Random walk of overlapping disks.
        let radius = uniform_incl(rng, 2, (s / 4).max(2)) as isize;
        let steps = s / 2 + 1;
        let (mut y, mut x) = (0isize, 0isize);
        let mut px = BTreeSet::new();
        for _ in 0..steps {
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    if dy * dy + dx * dx <= radius * radius {
                        px.insert((y + dy, x + dx));
                    }
                }
            }
            y += irange(rng, -1, 1);
            x += irange(rng, -1, 1);
        }
        px.into_iter().collect()
    };
    let ymin = raw.iter().map(|p| p.0).min().expect("nonempty shape");
    let xmin = raw.iter().map(|p| p.1).min().expect("nonempty shape");
    raw.into_iter()
        .map(|(y, x)| ((y - ymin) as usize, (x - xmin) as usize))
        .collect()
}

fn extent(mask: &Mask) -> (usize, usize) {
    let h = mask.iter().map(|p| p.0).max().unwrap_or(0) + 1;
    let w = mask.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    (h, w)
}

struct Canvas {
    h: usize,
    w: usize,
    labels: Vec<u32>,
    class_of: BTreeMap<u32, u32>,
}

impl Canvas {
    fn at(&self, y: isize, x: isize) -> Option<u32> {
        (y >= 0 && x >= 0 && (y as usize) < self.h && (x as usize) < self.w).then(|| self.labels[y as usize * self.w + x as usize])
    }

    fn in_frame(&self, mask: &Mask, oy: isize, ox: isize) -> bool {
        let (mh, mw) = extent(mask);
        oy >= 0 && ox >= 0 && oy as usize + mh <= self.h && ox as usize + mw <= self.w
    }

    fn overlaps(&self, mask: &Mask, oy: isize, ox: isize) -> bool {
        mask.iter()
            .any(|&(y, x)| self.at(oy + y as isize, ox + x as isize).is_some_and(|l| l != BACKGROUND))
    }

    /// IDs 4-adjacent to the placed mask.
    fn neighbors(&self, mask: &Mask, oy: isize, ox: isize) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for &(y, x) in mask {
            let (py, px) = (oy + y as isize, ox + x as isize);
            for (dy, dx) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                if let Some(l) = self.at(py + dy, px + dx) {
                    if l != BACKGROUND {
                        out.insert(l);
                    }
                }
            }
        }
        out
    }

    fn same_class_neighbor(&self, mask: &Mask, oy: isize, ox: isize, class: u32, except: Option<u32>) -> bool {
        self.neighbors(mask, oy, ox)
            .iter()
            .any(|id| Some(*id) != except && self.class_of[id] == class)
    }

    fn paint(&mut self, mask: &Mask, oy: isize, ox: isize, id: u32, class: u32) {
        for &(y, x) in mask {
            self.labels[(oy as usize + y) * self.w + ox as usize + x] = id;
        }
        self.class_of.insert(id, class);
    }

    fn bbox(&self, id: u32) -> (isize, isize, isize, isize) {
        let (mut y0, mut x0, mut y1, mut x1) = (isize::MAX, isize::MAX, isize::MIN, isize::MIN);
        for (p, &l) in self.labels.iter().enumerate() {
            if l == id {
                let (y, x) = ((p / self.w) as isize, (p % self.w) as isize);
                y0 = y0.min(y);
                x0 = x0.min(x);
                y1 = y1.max(y);
                x1 = x1.max(x);
            }
        }
        (y0, x0, y1, x1)
    }
}

/// Slides the mask toward `anchor` from a random side until the next step
/// would overlap something. Returns the offset if it ends in frame and
/// touching the anchor.
fn place_touching(rng: &mut QsegRng, canvas: &Canvas, mask: &Mask, anchor: u32) -> Option<(isize, isize)> {
    let (mh, mw) = extent(mask);
    let (mh, mw) = (mh as isize, mw as isize);
    let (y0, x0, y1, x1) = canvas.bbox(anchor);
    let side = rng.random_range(0..4);
    let (mut oy, mut ox, dy, dx) = match side {
        0 => (y0 - mh - 1, irange(rng, x0 - mw + 1, x1), 1, 0),
        1 => (y1 + 2, irange(rng, x0 - mw + 1, x1), -1, 0),
        2 => (irange(rng, y0 - mh + 1, y1), x0 - mw - 1, 0, 1),
        _ => (irange(rng, y0 - mh + 1, y1), x1 + 2, 0, -1),
    };
    if canvas.overlaps(mask, oy, ox) {
        return None;
    }
    let limit = canvas.h.max(canvas.w) as isize + mh + mw;
    for _ in 0..limit {
        if canvas.overlaps(mask, oy + dy, ox + dx) {
            break;
        }
        oy += dy;
        ox += dx;
    }
    let class = canvas.class_of[&anchor];
    (canvas.in_frame(mask, oy, ox)
        && canvas.neighbors(mask, oy, ox).contains(&anchor)
        && !canvas.same_class_neighbor(mask, oy, ox, class, Some(anchor)))
    .then_some((oy, ox))
}

fn place_apart(rng: &mut QsegRng, canvas: &Canvas, mask: &Mask, class: u32) -> Option<(isize, isize)> {
    let (mh, mw) = extent(mask);
    if mh > canvas.h || mw > canvas.w {
        return None;
    }
    let oy = rng.random_range(0..=canvas.h - mh) as isize;
    let ox = rng.random_range(0..=canvas.w - mw) as isize;
    (!canvas.overlaps(mask, oy, ox) && !canvas.same_class_neighbor(mask, oy, ox, class, None)).then_some((oy, ox))
}

fn distinct_color(rng: &mut QsegRng, taken: &[[u8; 3]]) -> [u8; 3] {
    let mut best = [0u8; 3];
    let mut best_gap = -1i32;
    for _ in 0..64 {
        let c = [rng.random_range(20..=235u8), rng.random_range(20..=235u8), rng.random_range(20..=235u8)];
        let gap = taken
            .iter()
            .map(|t| (0..3).map(|i| (i32::from(c[i]) - i32::from(t[i])).abs()).sum::<i32>())
            .min()
            .unwrap_or(i32::MAX);
        if gap >= 90 {
            return c;
        }
        if gap > best_gap {
            best_gap = gap;
            best = c;
        }
    }
    best
}

fn validate(spec: &SceneSpec) -> Result<()> {
    if spec.height == 0 || spec.width == 0 {
        return Err(Error::invalid("scene must be at least 1x1"));
    }
    if spec.class_count == 0 {
        return Err(Error::invalid("class_count must be at least 1"));
    }
    if spec.instances.0 > spec.instances.1 || spec.size.0 > spec.size.1 || spec.size.0 == 0 {
        return Err(Error::invalid("empty instance-count or size range"));
    }
    if !(0.0..=1.0).contains(&spec.touching_probability) {
        return Err(Error::invalid("touching_probability must lie in [0, 1]"));
    }
    let mix = &spec.shapes;
    if [mix.rectangles, mix.ellipses, mix.blobs].iter().any(|w| !(w.is_finite() && *w >= 0.0))
        || mix.rectangles + mix.ellipses + mix.blobs <= 0.0
    {
        return Err(Error::invalid("shape weights must be non-negative with a positive sum"));
    }
    if !(spec.color_noise.is_finite() && spec.color_noise >= 0.0) {
        return Err(Error::invalid("color_noise must be non-negative"));
    }
    Ok(())
}

/// Generates an image with its semantic and instance maps.
///
/// Instances never overlap and lie fully inside the frame. A touching
/// instance copies the class of a random earlier instance and is slid
/// against it; every other instance keeps clear of same-class instances, so
/// touching is the only way two same-class instances share a border.
pub fn gen_scene(spec: &SceneSpec) -> Result<Scene> {
    validate(spec)?;
    let mut rng = seeded(spec.seed);
    let n = uniform_incl(&mut rng, spec.instances.0, spec.instances.1);
    let mut canvas = Canvas { h: spec.height, w: spec.width, labels: vec![BACKGROUND; spec.height * spec.width], class_of: BTreeMap::new() };
    for id in 1..=n as u32 {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let touching = id > 1 && rng.random::<f64>() < spec.touching_probability;
            let mask = make_shape(&mut rng, &spec.shapes, spec.size);
            let spot = if touching {
                let anchor = rng.random_range(1..id);
                place_touching(&mut rng, &canvas, &mask, anchor).map(|o| (o, canvas.class_of[&anchor]))
            } else {
                let class = rng.random_range(1..=spec.class_count);
                place_apart(&mut rng, &canvas, &mask, class).map(|o| (o, class))
            };
            if let Some(((oy, ox), class)) = spot {
                canvas.paint(&mask, oy, ox, id, class);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::invalid(format!(
                "could not place instance {id} of {n} in {}x{} after {PLACEMENT_ATTEMPTS} attempts",
                spec.height, spec.width
            )));
        }
    }

    let mut palette = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let c = distinct_color(&mut rng, &palette);
        palette.push(c);
    }
    let noise = Normal::new(0.0, spec.color_noise).map_err(|e| Error::invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(spec.height * spec.width * 3);
    for &l in &canvas.labels {
        for &base in &palette[l as usize] {
            let v = f64::from(base) + if spec.color_noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    let image = Image::new(spec.height, spec.width, data)?;
    let instances = InstanceLabelMap::new(spec.height, spec.width, canvas.labels, canvas.class_of)?;
    let semantic = instances.semantic();
    Ok(Scene { image, semantic, instances })
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::invalid(format!("flip rate {rate} outside [0, 1]")));
    }
    Ok(())
}

/// Replaces each pixel's class, with probability `flip_rate`, by a uniformly
/// drawn different class in `0..class_count`.
pub fn perturb_class_map(cm: &PatchClassMap, flip_rate: f64, class_count: u32, seed: u64) -> Result<PatchClassMap> {
    check_rate(flip_rate)?;
    if let Some(&c) = cm.classes().iter().find(|&&c| c >= class_count) {
        return Err(Error::invalid(format!("class {c} outside 0..{class_count}")));
    }
    let mut rng = seeded(seed);
    let classes = cm
        .classes()
        .iter()
        .map(|&c| {
            if rng.random::<f64>() < flip_rate && class_count > 1 {
                let other = rng.random_range(0..class_count - 1);
                if other >= c {
                    other + 1
                } else {
                    other
                }
            } else {
                c
            }
        })
        .collect();
    PatchClassMap::new(cm.height(), cm.width(), classes)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur with replicated edges.
pub fn gaussian_blur(values: &[f64], h: usize, w: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * values[y * w + clampi(x as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[clampi(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Simulated soft boundary prediction: blur, add Gaussian noise, clamp to
/// `[0, 1]`.
pub fn perturb_boundary(b: &BoundaryMap, blur_sigma: f64, noise_sigma: f64, seed: u64) -> Result<BoundaryMap> {
    if !(blur_sigma.is_finite() && blur_sigma >= 0.0 && noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::invalid("sigmas must be finite and non-negative"));
    }
    let (h, w) = (b.height(), b.width());
    let mut v = gaussian_blur(b.values(), h, w, blur_sigma);
    if noise_sigma > 0.0 {
        let mut rng = seeded(seed);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
        for x in v.iter_mut() {
            *x += normal.sample(&mut rng);
        }
    }
    v.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    BoundaryMap::new(h, w, v)
}

/// Flips each pair weight `w → 1 − w` with probability `flip_rate`, visiting
/// pairs in sorted order.
pub fn perturb_pair_labels(l: &SuperpixelAffinityLabels, flip_rate: f64, seed: u64) -> Result<SuperpixelAffinityLabels> {
    check_rate(flip_rate)?;
    let mut rng = seeded(seed);
    let pairs = l
        .pairs
        .iter()
        .map(|(&k, &w)| (k, if rng.random::<f64>() < flip_rate { 1.0 - w } else { w }))
        .collect();
    Ok(SuperpixelAffinityLabels { pairs })
}

/// Relabels instance IDs by a seeded random permutation of `1..=n`.
pub fn permute_ids(inst: &InstanceLabelMap, seed: u64) -> Result<InstanceLabelMap> {
    let ids: Vec<u32> = inst.ids().collect();
    let mut targets: Vec<u32> = (1..=ids.len() as u32).collect();
    let mut rng = seeded(seed);
    for i in (1..targets.len()).rev() {
        targets.swap(i, rng.random_range(0..=i));
    }
    let map: BTreeMap<u32, u32> = ids.into_iter().zip(targets).collect();
    inst.relabel(|id| map[&id])
}

/// Count of 4-connected pieces per instance ID.
pub fn pieces_per_instance(inst: &InstanceLabelMap) -> BTreeMap<u32, usize> {
    let (h, w) = (inst.height(), inst.width());
    let labels = inst.labels();
    let mut seen = vec![false; h * w];
    let mut out = BTreeMap::new();
    for start in 0..h * w {
        if labels[start] == BACKGROUND || seen[start] {
            continue;
        }
        *out.entry(labels[start]).or_insert(0) += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for (ny, nx) in neighbors4(p / w, p % w, h, w) {
                let q = ny * w + nx;
                if !seen[q] && labels[q] == labels[start] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelmap::connected_components;

    #[test]
    fn zero_instances_is_background() {
        let s = gen_scene(&SceneSpec { instances: (0, 0), ..SceneSpec::default() }).unwrap();
        assert_eq!(s.instances.instance_count(), 0);
        assert!(s.semantic.labels().iter().all(|&c| c == 0));
    }

    #[test]
    fn touching_pair_is_one_component() {
        for seed in 0..20 {
            let spec = SceneSpec { instances: (2, 2), touching_probability: 1.0, seed, ..SceneSpec::default() };
            let s = gen_scene(&spec).unwrap();
            assert_eq!(s.instances.instance_count(), 2);
            assert_eq!(connected_components(&s.semantic).instance_count(), 1, "seed {seed}");
        }
    }

    #[test]
    fn deterministic_and_connected() {
        let spec = SceneSpec { seed: 42, ..SceneSpec::default() };
        let a = gen_scene(&spec).unwrap();
        assert_eq!(a, gen_scene(&spec).unwrap());
        assert!(pieces_per_instance(&a.instances).values().all(|&n| n == 1));
    }

    #[test]
    fn infeasible_scene_errors() {
        let spec = SceneSpec { height: 8, width: 8, instances: (30, 30), size: (6, 6), ..SceneSpec::default() };
        assert!(gen_scene(&spec).is_err());
    }

    #[test]
    fn class_flips() {
        let cm = PatchClassMap::new(4, 4, (0..16).map(|i| i % 5).collect()).unwrap();
        assert_eq!(perturb_class_map(&cm, 0.0, 5, 1).unwrap(), cm);
        let all = perturb_class_map(&cm, 1.0, 5, 1).unwrap();
        assert!(all.classes().iter().zip(cm.classes()).all(|(a, b)| a != b && *a < 5));
        assert!(perturb_class_map(&cm, 1.5, 5, 1).is_err());
        assert!(perturb_class_map(&cm, 0.1, 3, 1).is_err());
    }

    #[test]
    fn boundary_identity_and_zero() {
        let b = BoundaryMap::new(2, 3, vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(perturb_boundary(&b, 0.0, 0.0, 3).unwrap(), b);
        let z = perturb_boundary(&BoundaryMap::zeros(5, 5), 1.5, 0.0, 3).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blur_preserves_constant() {
        let v = gaussian_blur(&[0.25; 20], 4, 5, 1.3);
        assert!(v.iter().all(|x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn pair_flips() {
        let mut l = SuperpixelAffinityLabels::default();
        l.insert(0, 1, 1.0).unwrap();
        l.insert(1, 2, 0.0).unwrap();
        assert_eq!(perturb_pair_labels(&l, 0.0, 9).unwrap(), l);
        let flipped = perturb_pair_labels(&l, 1.0, 9).unwrap();
        assert_eq!(flipped.get(0, 1), Some(0.0));
        assert_eq!(flipped.get(2, 1), Some(1.0));
    }

    #[test]
    fn permutation_is_bijective() {
        let s = gen_scene(&SceneSpec { instances: (5, 5), seed: 7, ..SceneSpec::default() }).unwrap();
        let p = permute_ids(&s.instances, 11).unwrap();
        assert_eq!(p.instance_count(), 5);
        assert!(crate::labelmap::partitions_equal(&p, &s.instances).unwrap());
    }
}
