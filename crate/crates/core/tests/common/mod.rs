#![allow(dead_code)]

use std::collections::BTreeMap;

use qseg_core::rng::{seeded, QsegRng};
use qseg_core::InstanceLabelMap;
use rand::Rng;

/// Random instance map with IDs `0..=max_id` per pixel (blocky so that
/// patterns repeat) and random classes in `1..=classes`.
pub fn random_instances(rng: &mut QsegRng, h: usize, w: usize, max_id: u32, classes: u32) -> InstanceLabelMap {
    let block = rng.random_range(1..=3usize);
    let bh = h.div_ceil(block);
    let bw = w.div_ceil(block);
    let cells: Vec<u32> = (0..bh * bw).map(|_| rng.random_range(0..=max_id)).collect();
    let labels: Vec<u32> = (0..h * w).map(|p| cells[(p / w / block) * bw + (p % w) / block]).collect();
    let class_of: BTreeMap<u32, u32> = (1..=max_id).map(|id| (id, rng.random_range(1..=classes))).collect();
    InstanceLabelMap::new(h, w, labels, class_of).unwrap()
}

pub fn rng(seed: u64) -> QsegRng {
    seeded(seed)
}

/// Same-instance flag from the label grid.
pub fn same(inst: &InstanceLabelMap, i: usize, j: usize) -> bool {
    inst.labels()[i] == inst.labels()[j]
}
