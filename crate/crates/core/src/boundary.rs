//! Boundary-based component segmentation.
//!
//! Instance boundaries do not change when IDs are swapped. Removing them from
//! the semantic map separates touching instances into distinct connected
//! components, which are then grown back over the removed pixels.

use crate::error::{Error, Result};
use crate::labelmap::{
    canonicalize, connected_components, fill_by_majority, neighbors4, InstanceLabelMap, InstanceSegResult,
    SemanticLabelMap, BACKGROUND,
};

/// Per-pixel boundary strength in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl BoundaryMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "boundary map {height}x{width} with {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("boundary values must lie in [0, 1]"));
        }
        Ok(BoundaryMap { height, width, values })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        BoundaryMap { height, width, values: vec![0.0; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn count_on(&self) -> usize {
        self.values.iter().filter(|&&v| v >= 0.5).count()
    }

    /// Bilinear value at a fractional position; 0 outside the frame.
    fn sample(&self, y: f64, x: f64) -> f64 {
        let (ymax, xmax) = ((self.height - 1) as f64, (self.width - 1) as f64);
        if y < 0.0 || x < 0.0 || y > ymax || x > xmax {
            return 0.0;
        }
        let (y0, x0) = (y.floor() as usize, x.floor() as usize);
        let (y1, x1) = ((y0 + 1).min(self.height - 1), (x0 + 1).min(self.width - 1));
        let (fy, fx) = (y - y0 as f64, x - x0 as f64);
        let top = self.get(y0, x0) * (1.0 - fx) + self.get(y0, x1) * fx;
        let bottom = self.get(y1, x0) * (1.0 - fx) + self.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    fn clamped(&self, y: isize, x: isize) -> f64 {
        let y = y.clamp(0, self.height as isize - 1) as usize;
        let x = x.clamp(0, self.width as isize - 1) as usize;
        self.get(y, x)
    }
}

/// Foreground pixels with a 4-neighbor of a different ID (background
/// included). The frame edge is not a boundary.
pub fn instance_boundaries(inst: &InstanceLabelMap) -> BoundaryMap {
    let (h, w) = (inst.height(), inst.width());
    let labels = inst.labels();
    let values = (0..h * w)
        .map(|p| {
            let l = labels[p];
            let edge = l != BACKGROUND && neighbors4(p / w, p % w, h, w).any(|(y, x)| labels[y * w + x] != l);
            if edge {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    BoundaryMap { height: h, width: w, values }
}

/// Thins a soft boundary map to one-pixel ridges.
///
/// The orientation comes from central differences. Along it a pixel must be
/// at least the interpolated neighbor on one side and strictly above the
/// neighbor on the other, so flat-topped ridges keep a single side. Pixels
/// with zero gradient survive when no 8-neighbor exceeds them. Values below
/// `low_threshold` are dropped.
pub fn nms_thin(soft: &BoundaryMap, low_threshold: f64) -> BoundaryMap {
    let (h, w) = (soft.height, soft.width);
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let v = soft.get(y, x);
            if v <= 0.0 || v < low_threshold {
                continue;
            }
            let (yi, xi) = (y as isize, x as isize);
            let gx = 0.5 * (soft.clamped(yi, xi + 1) - soft.clamped(yi, xi - 1));
            let gy = 0.5 * (soft.clamped(yi + 1, xi) - soft.clamped(yi - 1, xi));
            let keep = if gx == 0.0 && gy == 0.0 {
                (-1..=1).all(|dy| (-1..=1).all(|dx| soft.clamped(yi + dy, xi + dx) <= v))
            } else {
                let norm = gx.hypot(gy);
                let (mut ux, mut uy) = (gx / norm, gy / norm);
                if ux < 0.0 || (ux == 0.0 && uy < 0.0) {
                    ux = -ux;
                    uy = -uy;
                }
                let ahead = soft.sample(y as f64 + uy, x as f64 + ux);
                let behind = soft.sample(y as f64 - uy, x as f64 - ux);
                v > ahead && v >= behind
            };
            if keep {
                out[y * w + x] = 1.0;
            }
        }
    }
    BoundaryMap { height: h, width: w, values: out }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Method3Options {
    /// Grow instances back over the removed boundary pixels. When false the
    /// boundary pixels stay background.
    pub reassign_boundaries: bool,
}

impl Default for Method3Options {
    fn default() -> Self {
        Method3Options { reassign_boundaries: true }
    }
}

/// Removes boundary pixels (value >= 0.5) from the semantic map, takes
/// connected components, and optionally grows them back over the removed
/// pixels. Instances are scored by area.
pub fn integrate_method3(sem: &SemanticLabelMap, b: &BoundaryMap, opts: &Method3Options) -> Result<InstanceSegResult> {
    let (h, w) = (sem.height(), sem.width());
    if b.height != h || b.width != w {
        return Err(Error::DimensionMismatch(format!(
            "semantic map {h}x{w} vs boundary map {}x{}",
            b.height, b.width
        )));
    }
    let cut: Vec<u32> = sem
        .labels()
        .iter()
        .zip(&b.values)
        .map(|(&c, &v)| if v >= 0.5 { BACKGROUND } else { c })
        .collect();
    let components = connected_components(&SemanticLabelMap::new(h, w, cut)?);
    let map = if opts.reassign_boundaries {
        let (_, _, mut labels, class_of) = components.into_parts();
        fill_by_majority(&mut labels, sem.labels(), h, w, &class_of);
        let on: Vec<bool> = b.values.iter().zip(sem.labels()).map(|(&v, &c)| v >= 0.5 && c != BACKGROUND).collect();
        repair_isolated_boundaries(&mut labels, &on, sem.labels(), h, w, &class_of);
        canonicalize(&InstanceLabelMap::new(h, w, labels, class_of)?)
    } else {
        components
    };
    Ok(InstanceSegResult::scored_by_area(map))
}

const REPAIR_PASSES: usize = 8;

/// A boundary pixel needs a 4-neighbor with another label. Where the grown
/// labels leave one without, a neighboring grown pixel that touches no
/// unmarked pixel of its class is moved to its most frequent other adjacent
/// instance.
fn repair_isolated_boundaries(
    labels: &mut [u32],
    on: &[bool],
    classes: &[u32],
    h: usize,
    w: usize,
    class_of: &std::collections::BTreeMap<u32, u32>,
) {
    let movable: Vec<bool> = (0..h * w)
        .map(|p| on[p] && !neighbors4(p / w, p % w, h, w).any(|(y, x)| !on[y * w + x] && classes[y * w + x] == classes[p]))
        .collect();
    for _ in 0..REPAIR_PASSES {
        let mut changed = false;
        for q in 0..h * w {
            let lq = labels[q];
            if !on[q] || lq == BACKGROUND || neighbors4(q / w, q % w, h, w).any(|(y, x)| labels[y * w + x] != lq) {
                continue;
            }
            let mut best: Option<(usize, u32, usize)> = None;
            for (py, px) in neighbors4(q / w, q % w, h, w) {
                let p = py * w + px;
                if !movable[p] {
                    continue;
                }
                let mut votes: std::collections::BTreeMap<u32, usize> = std::collections::BTreeMap::new();
                for (y, x) in neighbors4(py, px, h, w) {
                    let l = labels[y * w + x];
                    if l != lq && l != BACKGROUND && class_of.get(&l) == Some(&classes[p]) {
                        *votes.entry(l).or_insert(0) += 1;
                    }
                }
                for (l, n) in votes {
                    if best.is_none_or(|(_, _, m)| n > m) {
                        best = Some((p, l, n));
                    }
                }
            }
            if let Some((p, l, _)) = best {
                labels[p] = l;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}
