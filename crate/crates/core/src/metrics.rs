//! Evaluation measures: region AP, average recall, and the object-level
//! gland scores (F1, Dice, Hausdorff).
//!
//! Conventions fixed here so numbers are reproducible:
//! * matching is greedy in descending score order (ties: lower image index,
//!   then earlier first pixel in raster order); each prediction takes the
//!   unmatched ground-truth instance with the highest IoU at or above the
//!   threshold;
//! * every remaining tie is broken by first pixel, never by ID, so all
//!   scores are invariant under ID permutation;
//! * AP integrates the precision envelope over the achieved recall points;
//! * AR averages recall over the thresholds 0.50, 0.55, ..., 0.95;
//! * gland F1 counts a prediction as correct when it covers more than half of
//!   a ground-truth instance, matched one-to-one by overlap;
//! * unmatched objects cost the image diagonal in the Hausdorff score.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::labelmap::{neighbors4, InstanceLabelMap, InstanceSegResult, BACKGROUND};

/// IoU threshold used by AP.
pub const AP_IOU_THRESHOLD: f64 = 0.5;

/// The ten IoU thresholds AR averages over.
pub fn ar_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// `|a ∩ b| / |a ∪ b|`, 0 when both are empty.
pub fn iou(a: &BTreeSet<(usize, usize)>, b: &BTreeSet<(usize, usize)>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Pixel overlap counts between the instances of two aligned maps.
#[derive(Clone, Debug, Default)]
pub struct Overlaps {
    pub pred_area: BTreeMap<u32, usize>,
    pub gt_area: BTreeMap<u32, usize>,
    pub inter: BTreeMap<(u32, u32), usize>,
    /// Raster index of each instance's first pixel.
    pub pred_first: BTreeMap<u32, usize>,
    pub gt_first: BTreeMap<u32, usize>,
}

fn first_pixels(map: &InstanceLabelMap) -> BTreeMap<u32, usize> {
    let mut first = BTreeMap::new();
    for (p, &l) in map.labels().iter().enumerate() {
        if l != BACKGROUND {
            first.entry(l).or_insert(p);
        }
    }
    first
}

impl Overlaps {
    pub fn new(pred: &InstanceLabelMap, gt: &InstanceLabelMap) -> Result<Self> {
        check_dims(pred, gt)?;
        let mut o = Overlaps {
            pred_area: pred.areas(),
            gt_area: gt.areas(),
            inter: BTreeMap::new(),
            pred_first: first_pixels(pred),
            gt_first: first_pixels(gt),
        };
        for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
            if p != BACKGROUND && g != BACKGROUND {
                *o.inter.entry((p, g)).or_insert(0) += 1;
            }
        }
        Ok(o)
    }

    pub fn intersection(&self, p: u32, g: u32) -> usize {
        self.inter.get(&(p, g)).copied().unwrap_or(0)
    }

    pub fn iou(&self, p: u32, g: u32) -> f64 {
        let i = self.intersection(p, g);
        if i == 0 {
            return 0.0;
        }
        i as f64 / (self.pred_area[&p] + self.gt_area[&g] - i) as f64
    }
}

fn check_dims(a: &InstanceLabelMap, b: &InstanceLabelMap) -> Result<()> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::DimensionMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

/// Outcome of matching one image's predictions to its ground truth.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    /// Prediction ID → matched ground-truth ID and IoU.
    pub pred: BTreeMap<u32, Option<(u32, f64)>>,
    /// Ground-truth ID → whether some prediction matched it.
    pub gt_covered: BTreeMap<u32, bool>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.pred.values().filter(|m| m.is_some()).count()
    }
}

/// Prediction IDs by descending score, ties by first pixel.
fn score_order(r: &InstanceSegResult) -> Vec<u32> {
    let first = first_pixels(&r.map);
    let mut ids: Vec<u32> = r.map.ids().collect();
    ids.sort_by(|a, b| r.scores[b].total_cmp(&r.scores[a]).then(first[a].cmp(&first[b])));
    ids
}

/// Greedy score-ordered matching of `preds` (already ordered) at IoU ≥
/// `thresh`. With `class_aware` only same-class pairs may match. IoU ties go
/// to the ground-truth instance with the earlier first pixel.
pub fn match_greedy(
    order: &[u32],
    pred: &InstanceLabelMap,
    gt: &InstanceLabelMap,
    overlaps: &Overlaps,
    thresh: f64,
    class_aware: bool,
) -> MatchResult {
    let mut gt_covered: BTreeMap<u32, bool> = gt.ids().map(|g| (g, false)).collect();
    let mut matches = BTreeMap::new();
    for &p in order {
        let mut best: Option<(u32, f64)> = None;
        for (&(pp, g), _) in overlaps.inter.range((p, 0)..=(p, u32::MAX)) {
            debug_assert_eq!(pp, p);
            if gt_covered[&g] || (class_aware && pred.class_of_id(p) != gt.class_of_id(g)) {
                continue;
            }
            let v = overlaps.iou(p, g);
            let better = |(bg, b): (u32, f64)| v > b || (v == b && overlaps.gt_first[&g] < overlaps.gt_first[&bg]);
            if v >= thresh && best.is_none_or(better) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            gt_covered.insert(g, true);
        }
        matches.insert(p, best);
    }
    MatchResult { pred: matches, gt_covered }
}

fn check_aligned(preds: &[InstanceSegResult], gts: &[InstanceLabelMap]) -> Result<Vec<Overlaps>> {
    if preds.len() != gts.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} ground-truth images",
            preds.len(),
            gts.len()
        )));
    }
    preds.iter().zip(gts).map(|(p, g)| Overlaps::new(&p.map, g)).collect()
}

/// Region AP at one IoU threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ApReport {
    /// Mean over classes that have at least one ground-truth instance. With
    /// no ground truth at all: 1 if there are no predictions either, else 0.
    pub mean: f64,
    pub per_class: BTreeMap<u32, f64>,
}

/// Area under the precision envelope, given TP flags in ranked order.
pub fn average_precision(ranked_tp: &[bool], gt_count: usize) -> f64 {
    if gt_count == 0 {
        return if ranked_tp.is_empty() { 1.0 } else { 0.0 };
    }
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(ranked_tp.len());
    for (rank, &hit) in ranked_tp.iter().enumerate() {
        tp += usize::from(hit);
        points.push((tp as f64 / gt_count as f64, tp as f64 / (rank + 1) as f64));
    }
    for i in (0..points.len().saturating_sub(1)).rev() {
        points[i].1 = points[i].1.max(points[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &(r, p) in &points {
        ap += (r - prev_recall) * p;
        prev_recall = r;
    }
    ap
}

pub fn ap_r(preds: &[InstanceSegResult], gts: &[InstanceLabelMap], iou_thresh: f64) -> Result<ApReport> {
    let overlaps = check_aligned(preds, gts)?;
    // class → ranked (score, image, first pixel, hit)
    let mut ranked: BTreeMap<u32, Vec<(f64, usize, usize, bool)>> = BTreeMap::new();
    let mut gt_count: BTreeMap<u32, usize> = BTreeMap::new();
    for (img, ((pred, gt), ov)) in preds.iter().zip(gts).zip(&overlaps).enumerate() {
        for g in gt.ids() {
            *gt_count.entry(gt.class_of_id(g).expect("id has class")).or_insert(0) += 1;
        }
        let m = match_greedy(&score_order(pred), &pred.map, gt, ov, iou_thresh, true);
        for (&p, hit) in &m.pred {
            let class = pred.map.class_of_id(p).expect("id has class");
            ranked.entry(class).or_default().push((pred.scores[&p], img, ov.pred_first[&p], hit.is_some()));
        }
    }
    let mut per_class = BTreeMap::new();
    for (&class, &n) in &gt_count {
        let mut list = ranked.remove(&class).unwrap_or_default();
        list.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let hits: Vec<bool> = list.iter().map(|e| e.3).collect();
        per_class.insert(class, average_precision(&hits, n));
    }
    let mean = if per_class.is_empty() {
        if preds.iter().all(|p| p.map.instance_count() == 0) {
            1.0
        } else {
            0.0
        }
    } else {
        per_class.values().sum::<f64>() / per_class.len() as f64
    };
    Ok(ApReport { mean, per_class })
}

/// Average recall over the IoU grid, keeping the `n` best-scored
/// predictions per image and matching regardless of class. With no
/// ground truth the recall is 1 by convention.
pub fn ar_at_n(preds: &[InstanceSegResult], gts: &[InstanceLabelMap], n: usize) -> Result<f64> {
    let overlaps = check_aligned(preds, gts)?;
    let total: usize = gts.iter().map(|g| g.instance_count()).sum();
    if total == 0 {
        return Ok(1.0);
    }
    let thresholds = ar_thresholds();
    let mut recall_sum = 0.0;
    for &t in &thresholds {
        let mut matched = 0;
        for ((pred, gt), ov) in preds.iter().zip(gts).zip(&overlaps) {
            let mut order = score_order(pred);
            order.truncate(n);
            matched += match_greedy(&order, &pred.map, gt, ov, t, false).true_positives();
        }
        recall_sum += matched as f64 / total as f64;
    }
    Ok(recall_sum / thresholds.len() as f64)
}

/// Detection F1 for one image.
pub fn gland_f1(pred: &InstanceLabelMap, gt: &InstanceLabelMap) -> Result<f64> {
    let ov = Overlaps::new(pred, gt)?;
    let (np, ng) = (ov.pred_area.len(), ov.gt_area.len());
    if np == 0 && ng == 0 {
        return Ok(1.0);
    }
    let mut candidates: Vec<(usize, u32, u32)> = ov
        .inter
        .iter()
        .filter(|(&(_, g), &i)| 2 * i > ov.gt_area[&g])
        .map(|(&(p, g), &i)| (i, p, g))
        .collect();
    candidates.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(ov.pred_first[&a.1].cmp(&ov.pred_first[&b.1]))
            .then(ov.gt_first[&a.2].cmp(&ov.gt_first[&b.2]))
    });
    let (mut used_p, mut used_g) = (BTreeSet::new(), BTreeSet::new());
    let mut tp = 0;
    for (_, p, g) in candidates {
        if !used_p.contains(&p) && !used_g.contains(&g) {
            used_p.insert(p);
            used_g.insert(g);
            tp += 1;
        }
    }
    Ok(2.0 * tp as f64 / (np + ng) as f64)
}

/// For each ID in `from`, the ID in `to` with the largest overlap (ties:
/// earlier first pixel), if any.
fn best_partner(
    areas: &BTreeMap<u32, usize>,
    to_first: &BTreeMap<u32, usize>,
    pairs: impl Iterator<Item = (u32, u32, usize)>,
) -> BTreeMap<u32, Option<u32>> {
    let mut best: BTreeMap<u32, Option<(u32, usize)>> = areas.keys().map(|&k| (k, None)).collect();
    for (from, to, i) in pairs {
        let slot = best.get_mut(&from).expect("known id");
        match slot {
            Some((t, b)) if *b > i || (*b == i && to_first[t] < to_first[&to]) => {}
            _ => *slot = Some((to, i)),
        }
    }
    best.into_iter().map(|(k, v)| (k, v.map(|(t, _)| t))).collect()
}

/// Sums `½[Σ ω_i f(G_i, P*(G_i)) + Σ ω̃_j f(P_j, G*(P_j))]` with area
/// weights. `f(a, b)` receives `None` for a missing partner.
fn object_weighted(ov: &Overlaps, mut f: impl FnMut(bool, u32, Option<u32>) -> f64) -> f64 {
    let gt_partner = best_partner(&ov.gt_area, &ov.pred_first, ov.inter.iter().map(|(&(p, g), &i)| (g, p, i)));
    let pred_partner = best_partner(&ov.pred_area, &ov.gt_first, ov.inter.iter().map(|(&(p, g), &i)| (p, g, i)));
    let gt_total: usize = ov.gt_area.values().sum();
    let pred_total: usize = ov.pred_area.values().sum();
    // Summed in first-pixel order so the rounding does not depend on IDs.
    let by_first = |first: &BTreeMap<u32, usize>| {
        let mut ids: Vec<u32> = first.keys().copied().collect();
        ids.sort_by_key(|id| first[id]);
        ids
    };
    let mut gt_side = 0.0;
    for g in by_first(&ov.gt_first) {
        gt_side += ov.gt_area[&g] as f64 / gt_total as f64 * f(true, g, gt_partner[&g]);
    }
    let mut pred_side = 0.0;
    for p in by_first(&ov.pred_first) {
        pred_side += ov.pred_area[&p] as f64 / pred_total as f64 * f(false, p, pred_partner[&p]);
    }
    0.5 * (gt_side + pred_side)
}

/// Area-weighted object Dice; 1 when both maps are empty.
pub fn object_dice(pred: &InstanceLabelMap, gt: &InstanceLabelMap) -> Result<f64> {
    let ov = Overlaps::new(pred, gt)?;
    if ov.pred_area.is_empty() && ov.gt_area.is_empty() {
        return Ok(1.0);
    }
    Ok(object_weighted(&ov, |is_gt, id, partner| {
        let Some(other) = partner else { return 0.0 };
        let (p, g) = if is_gt { (other, id) } else { (id, other) };
        2.0 * ov.intersection(p, g) as f64 / (ov.pred_area[&p] + ov.gt_area[&g]) as f64
    }))
}

/// Pixels of instance `id` with a 4-neighbor outside it or on the frame edge.
pub fn contour(map: &InstanceLabelMap, id: u32) -> Vec<(usize, usize)> {
    let (h, w) = (map.height(), map.width());
    let labels = map.labels();
    (0..h * w)
        .filter(|&p| {
            let (y, x) = (p / w, p % w);
            labels[p] == id
                && (y == 0 || x == 0 || y + 1 == h || x + 1 == w || neighbors4(y, x, h, w).any(|(ny, nx)| labels[ny * w + nx] != id))
        })
        .map(|p| (p / w, p % w))
        .collect()
}

/// Exact squared Euclidean distance transform to the `sites` (1D lower
/// envelope of parabolas, applied along columns then rows).
fn squared_edt(h: usize, w: usize, sites: &[(usize, usize)]) -> Vec<f64> {
    let mut grid = vec![f64::INFINITY; h * w];
    for &(y, x) in sites {
        grid[y * w + x] = 0.0;
    }
    let mut buf = Vec::new();
    for x in 0..w {
        buf.clear();
        buf.extend((0..h).map(|y| grid[y * w + x]));
        let d = edt_1d(&buf);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        let d = edt_1d(&grid[y * w..(y + 1) * w]);
        grid[y * w..(y + 1) * w].copy_from_slice(&d);
    }
    grid
}

fn edt_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::INFINITY; n];
    let finite: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if finite.is_empty() {
        return out;
    }
    let mut v: Vec<usize> = Vec::with_capacity(finite.len());
    let mut z: Vec<f64> = Vec::with_capacity(finite.len() + 1);
    let inter = |q: usize, p: usize| -> f64 {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    v.push(finite[0]);
    z.push(f64::NEG_INFINITY);
    for &q in &finite[1..] {
        let mut s = inter(q, *v.last().expect("nonempty"));
        while s <= *z.last().expect("nonempty") {
            v.pop();
            z.pop();
            s = inter(q, *v.last().expect("nonempty"));
        }
        v.push(q);
        z.push(s);
    }
    z.push(f64::INFINITY);
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
    out
}

/// Symmetric Hausdorff distance between two nonempty pixel sets, given the
/// squared distance transform of each.
fn hausdorff_from(a: &[(usize, usize)], dt_a: &[f64], b: &[(usize, usize)], dt_b: &[f64], w: usize) -> f64 {
    let ab = a.iter().map(|&(y, x)| dt_b[y * w + x]).fold(0.0, f64::max);
    let ba = b.iter().map(|&(y, x)| dt_a[y * w + x]).fold(0.0, f64::max);
    ab.max(ba).sqrt()
}

/// Area-weighted object Hausdorff distance between contours; unmatched
/// objects cost the image diagonal. 0 when both maps are empty.
pub fn object_hausdorff(pred: &InstanceLabelMap, gt: &InstanceLabelMap) -> Result<f64> {
    let ov = Overlaps::new(pred, gt)?;
    if ov.pred_area.is_empty() && ov.gt_area.is_empty() {
        return Ok(0.0);
    }
    let (h, w) = (gt.height(), gt.width());
    let diagonal = ((h * h + w * w) as f64).sqrt();
    let mut cache: BTreeMap<(bool, u32), (Vec<(usize, usize)>, Vec<f64>)> = BTreeMap::new();
    let mut prepare = |is_gt: bool, id: u32| {
        cache
            .entry((is_gt, id))
            .or_insert_with(|| {
                let c = contour(if is_gt { gt } else { pred }, id);
                let dt = squared_edt(h, w, &c);
                (c, dt)
            })
            .clone()
    };
    Ok(object_weighted(&ov, |is_gt, id, partner| {
        let Some(other) = partner else { return diagonal };
        let (a, dt_a) = prepare(is_gt, id);
        let (b, dt_b) = prepare(!is_gt, other);
        hausdorff_from(&a, &dt_a, &b, &dt_b, w)
    }))
}

/// Dataset-level report.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub ap_r: f64,
    pub ap_r_per_class: BTreeMap<u32, f64>,
    pub ar: BTreeMap<usize, f64>,
    pub f1: f64,
    pub object_dice: f64,
    pub object_hausdorff: f64,
}

/// Computes every metric. Gland scores are averaged over images.
pub fn evaluate(preds: &[InstanceSegResult], gts: &[InstanceLabelMap], ar_ns: &[usize]) -> Result<MetricsReport> {
    let ap = ap_r(preds, gts, AP_IOU_THRESHOLD)?;
    let mut ar = BTreeMap::new();
    for &n in ar_ns {
        ar.insert(n, ar_at_n(preds, gts, n)?);
    }
    let (mut f1, mut dice, mut haus) = (0.0, 0.0, 0.0);
    for (p, g) in preds.iter().zip(gts) {
        f1 += gland_f1(&p.map, g)?;
        dice += object_dice(&p.map, g)?;
        haus += object_hausdorff(&p.map, g)?;
    }
    let n = preds.len().max(1) as f64;
    let images = !preds.is_empty();
    Ok(MetricsReport {
        ap_r: ap.mean,
        ap_r_per_class: ap.per_class,
        ar,
        f1: if images { f1 / n } else { 1.0 },
        object_dice: if images { dice / n } else { 1.0 },
        object_hausdorff: haus / n,
    })
}

impl MetricsReport {
    /// JSON with every real printed to six decimals.
    pub fn to_json(&self) -> String {
        let map = |m: Vec<(String, f64)>| {
            m.iter()
                .map(|(k, v)| format!("\"{k}\": {v:.6}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let per_class = map(self.ap_r_per_class.iter().map(|(k, &v)| (k.to_string(), v)).collect());
        let ar = map(self.ar.iter().map(|(k, &v)| (k.to_string(), v)).collect());
        format!(
            "{{\n  \"ap_r\": {:.6},\n  \"ap_r_per_class\": {{{per_class}}},\n  \"ar\": {{{ar}}},\n  \"gland\": {{\"f1\": {:.6}, \"object_dice\": {:.6}, \"object_hausdorff\": {:.6}}}\n}}\n",
            self.ap_r, self.f1, self.object_dice, self.object_hausdorff
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(h: usize, w: usize, labels: &[u32]) -> InstanceLabelMap {
        InstanceLabelMap::with_single_class(h, w, labels.to_vec(), 1).unwrap()
    }

    fn set(points: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        points.iter().copied().collect()
    }

    #[test]
    fn iou_counting() {
        let a = set(&[(0, 0), (0, 1), (1, 0), (1, 1)]);
        let b = set(&[(0, 1), (0, 2), (1, 1), (1, 2)]);
        assert_eq!(iou(&a, &a), 1.0);
        assert!((iou(&a, &b) - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(iou(&a, &set(&[(5, 5)])), 0.0);
        assert_eq!(iou(&BTreeSet::new(), &BTreeSet::new()), 0.0);
    }

    #[test]
    fn envelope_ap() {
        assert_eq!(average_precision(&[true], 2), 0.5);
        assert_eq!(average_precision(&[true, true], 2), 1.0);
        // P/R points (0.5,1), (0.5,0.5), (1,2/3) → envelope 1 then 2/3.
        let ap = average_precision(&[true, false, true], 2);
        assert!((ap - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(average_precision(&[], 0), 1.0);
        assert_eq!(average_precision(&[false], 0), 0.0);
    }

    #[test]
    fn ap_two_gt_one_hit() {
        let gt = inst(1, 4, &[1, 1, 2, 2]);
        let pred = InstanceSegResult::scored_by_area(inst(1, 4, &[1, 1, 0, 0]));
        let r = ap_r(&[pred], &[gt], 0.5).unwrap();
        assert!((r.mean - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ap_below_threshold() {
        // IoU 2/5 = 0.4.
        let gt = inst(1, 5, &[1, 1, 1, 1, 0]);
        let pred = InstanceSegResult::scored_by_area(inst(1, 5, &[0, 0, 1, 1, 1]));
        assert_eq!(ap_r(&[pred], &[gt], 0.5).unwrap().mean, 0.0);
    }

    #[test]
    fn ap_requires_alignment() {
        assert!(ap_r(&[], &[inst(1, 1, &[1])], 0.5).is_err());
    }

    #[test]
    fn ar_grid() {
        // IoU 18/25 = 0.72.
        let gt = inst(1, 25, &[[1u32; 18].as_slice(), &[1; 7]].concat());
        let mut p = vec![1u32; 18];
        p.extend([0; 7]);
        let pred = InstanceSegResult::scored_by_area(inst(1, 25, &p));
        assert!((ar_at_n(&[pred], std::slice::from_ref(&gt), 10).unwrap() - 0.5).abs() < 1e-9);
        let none = InstanceSegResult::scored_by_area(InstanceLabelMap::empty(1, 25));
        assert_eq!(ar_at_n(&[none], &[gt], 10).unwrap(), 0.0);
    }

    #[test]
    fn ar_respects_top_n() {
        let gt = inst(1, 4, &[1, 1, 2, 2]);
        let pred = InstanceSegResult::new(inst(1, 4, &[1, 1, 2, 2]), BTreeMap::from([(1, 0.9), (2, 0.1)])).unwrap();
        assert_eq!(ar_at_n(std::slice::from_ref(&pred), std::slice::from_ref(&gt), 1).unwrap(), 0.5);
        assert_eq!(ar_at_n(&[pred], &[gt], 2).unwrap(), 1.0);
    }

    #[test]
    fn f1_cases() {
        let gt = inst(1, 4, &[1, 1, 2, 2]);
        assert_eq!(gland_f1(&gt, &gt).unwrap(), 1.0);
        let half = inst(1, 4, &[1, 1, 0, 0]);
        assert!((gland_f1(&half, &gt).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        let gt5 = inst(1, 5, &[1, 1, 1, 1, 1]);
        let weak = inst(1, 5, &[1, 1, 0, 0, 0]);
        assert_eq!(gland_f1(&weak, &gt5).unwrap(), 0.0);
        let empty = InstanceLabelMap::empty(1, 5);
        assert_eq!(gland_f1(&empty, &empty).unwrap(), 1.0);
    }

    #[test]
    fn dice_cases() {
        let gt = inst(2, 4, &[1, 1, 2, 2, 1, 1, 2, 2]);
        assert_eq!(object_dice(&gt, &gt).unwrap(), 1.0);
        assert_eq!(object_dice(&InstanceLabelMap::empty(2, 4), &gt).unwrap(), 0.0);
        // Merged prediction: each GT half pairs with the whole prediction
        // (Dice 2*4/12), and the prediction pairs with GT 1 (same value).
        let merged = inst(2, 4, &[1; 8]);
        let d = 2.0 * 4.0 / 12.0;
        assert!((object_dice(&merged, &gt).unwrap() - d).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_cases() {
        let mut a = vec![0u32; 100];
        let mut b = vec![0u32; 100];
        for y in 3..7 {
            for x in 3..7 {
                a[y * 10 + x] = 1;
                b[y * 10 + x + 1] = 1;
            }
        }
        let (a, b) = (inst(10, 10, &a), inst(10, 10, &b));
        assert_eq!(object_hausdorff(&a, &a).unwrap(), 0.0);
        assert!((object_hausdorff(&b, &a).unwrap() - 1.0).abs() < 1e-12);
        let diag = 200f64.sqrt();
        let empty = InstanceLabelMap::empty(10, 10);
        assert!((object_hausdorff(&empty, &a).unwrap() - 0.5 * diag).abs() < 1e-12);
    }

    #[test]
    fn edt_matches_brute_force() {
        let sites = [(0, 3), (4, 1), (2, 2)];
        let dt = squared_edt(5, 6, &sites);
        for y in 0..5 {
            for x in 0..6 {
                let brute = sites
                    .iter()
                    .map(|&(sy, sx)| (sy as f64 - y as f64).powi(2) + (sx as f64 - x as f64).powi(2))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(dt[y * 6 + x], brute);
            }
        }
    }

    #[test]
    fn report_json_format() {
        let gt = inst(1, 4, &[1, 1, 2, 2]);
        let pred = InstanceSegResult::scored_by_area(gt.clone());
        let r = evaluate(&[pred], &[gt], &[10, 100]).unwrap();
        let json = r.to_json();
        assert!(json.contains("\"ap_r\": 1.000000"));
        assert!(json.contains("\"ar\": {\"10\": 1.000000, \"100\": 1.000000}"));
        assert!(json.contains("\"object_hausdorff\": 0.000000"));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["ap_r_per_class"]["1"], 1.0);
    }
}
