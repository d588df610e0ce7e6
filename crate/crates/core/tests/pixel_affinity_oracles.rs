mod common;

use qseg_core::labelmap::connected_components;
use qseg_core::pixel_affinity::{
    build_codebook, decode_vote, encode, integrate_method1, patch_affinity, AffinityCodebook, Method1Options,
    PatchClassMap,
};
use qseg_core::synth::{gen_scene, perturb_class_map, permute_ids, SceneSpec};
use rand::Rng;

fn random_codebook(rng: &mut impl Rng, k: usize, c: usize) -> AffinityCodebook {
    let n = k * k;
    let centers = (0..c)
        .map(|_| {
            let mut m = vec![1.0; n * n];
            for p in 0..n {
                for q in p + 1..n {
                    let v: f64 = rng.random();
                    m[p * n + q] = v;
                    m[q * n + p] = v;
                }
            }
            m
        })
        .collect();
    AffinityCodebook::new(k, centers).unwrap()
}

/// Average over every center whose in-frame window holds both pixels.
fn brute_vote(cm: &PatchClassMap, cb: &AffinityCodebook, i: usize, j: usize) -> Option<f64> {
    let (h, w, k) = (cm.height() as isize, cm.width() as isize, cb.k() as isize);
    let r = k / 2;
    let kk = (k * k) as usize;
    let (yi, xi) = ((i as isize) / w, (i as isize) % w);
    let (yj, xj) = ((j as isize) / w, (j as isize) % w);
    let (mut sum, mut n) = (0.0, 0);
    for cy in 0..h {
        for cx in 0..w {
            let slot = |y: isize, x: isize| {
                let (py, px) = (y - cy + r, x - cx + r);
                (0..k).contains(&py) && (0..k).contains(&px)
            };
            if slot(yi, xi) && slot(yj, xj) {
                let rep = cb.representative(cm.get(cy as usize, cx as usize) as usize);
                let pa = ((yi - cy + r) * k + (xi - cx + r)) as usize;
                let pb = ((yj - cy + r) * k + (xj - cx + r)) as usize;
                sum += f64::from(rep[pa * kk + pb]);
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

#[test]
fn decode_vote_matches_brute_force() {
    let mut rng = common::rng(3);
    for k in [3, 5] {
        let c = 7;
        let cb = random_codebook(&mut rng, k, c);
        let (h, w) = (16, 16);
        let classes = (0..h * w).map(|_| rng.random_range(0..c as u32)).collect();
        let cm = PatchClassMap::new(h, w, classes).unwrap();
        let ga = decode_vote(&cm, &cb).unwrap();
        for i in 0..h * w {
            assert_eq!(ga.get(i, i), Some(1.0));
            for j in i + 1..h * w {
                let (got, want) = (ga.get(i, j), brute_vote(&cm, &cb, i, j));
                assert_eq!(got.is_some(), want.is_some(), "k={k} pair ({i},{j})");
                if let (Some(a), Some(b)) = (got, want) {
                    assert!((a - b).abs() <= 1e-12, "k={k} pair ({i},{j}): {a} vs {b}");
                    assert_eq!(ga.get(j, i), Some(a));
                    assert!((0.0..=1.0).contains(&a));
                }
            }
        }
    }
}

#[test]
fn stored_pairs_are_exactly_the_in_radius_pairs() {
    let mut rng = common::rng(4);
    let k = 5;
    let cb = random_codebook(&mut rng, k, 3);
    let (h, w) = (9, 11);
    let cm = PatchClassMap::new(h, w, vec![0; h * w]).unwrap();
    let ga = decode_vote(&cm, &cb).unwrap();
    for i in 0..h * w {
        for j in 0..h * w {
            let cheb = (i / w).abs_diff(j / w).max((i % w).abs_diff(j % w));
            assert_eq!(ga.get(i, j).is_some(), cheb < k);
        }
    }
}

#[test]
fn encode_matches_exhaustive_nearest_center() {
    let mut rng = common::rng(5);
    let inst = common::random_instances(&mut rng, 20, 20, 4, 2);
    let cb = random_codebook(&mut rng, 5, 12);
    let cm = encode(&inst, &cb);
    for _ in 0..20 {
        let (y, x) = (rng.random_range(0..20), rng.random_range(0..20));
        let pattern = patch_affinity(&inst, (y, x), 5).unwrap();
        let mut best = (0, f64::INFINITY);
        for (c, center) in cb.centers().iter().enumerate() {
            let d: f64 = center.iter().zip(pattern.matrix()).map(|(&m, &v)| (f64::from(v) - m).powi(2)).sum();
            if d < best.1 {
                best = (c, d);
            }
        }
        assert_eq!(cm.get(y, x) as usize, best.0, "pixel ({y},{x})");
    }
}

#[test]
fn encode_is_permutation_invariant() {
    let mut rng = common::rng(6);
    let train: Vec<_> = (0..4).map(|_| common::random_instances(&mut rng, 16, 16, 5, 2)).collect();
    let cb = build_codebook(&train, 5, 20, 1).unwrap().codebook;
    for trial in 0..100 {
        let inst = common::random_instances(&mut rng, 16, 16, 6, 3);
        let permuted = permute_ids(&inst, trial).unwrap();
        assert_eq!(encode(&inst, &cb), encode(&permuted, &cb), "trial {trial}");
    }
}

#[test]
fn codebook_with_enough_classes_has_zero_distortion() {
    let mut rng = common::rng(7);
    let train: Vec<_> = (0..3).map(|_| common::random_instances(&mut rng, 12, 12, 3, 1)).collect();
    let probe = build_codebook(&train, 3, 1, 0).unwrap();
    for extra in [0, 5] {
        let fit = build_codebook(&train, 3, probe.distinct_patterns + extra, 0).unwrap();
        assert_eq!(fit.distortion, 0.0);
        assert_eq!(fit.codebook.class_count(), probe.distinct_patterns + extra);
    }
    let short = build_codebook(&train, 3, probe.distinct_patterns - 1, 0).unwrap();
    assert!(short.distortion > 0.0);
}

#[test]
fn lossless_codebook_reproduces_same_instance_indicator() {
    let scenes: Vec<_> = (0..5)
        .map(|seed| gen_scene(&SceneSpec { touching_probability: 0.7, seed, ..SceneSpec::default() }).unwrap().instances)
        .collect();
    let distinct = build_codebook(&scenes, 5, 1, 0).unwrap().distinct_patterns;
    let fit = build_codebook(&scenes, 5, distinct, 0).unwrap();
    assert_eq!(fit.distortion, 0.0);
    for inst in &scenes {
        let ga = decode_vote(&encode(inst, &fit.codebook), &fit.codebook).unwrap();
        let w = inst.width();
        for (i, j, v) in ga.graph().edges() {
            let cheb = (i / w).abs_diff(j / w).max((i % w).abs_diff(j % w));
            assert!(cheb < 5);
            assert_eq!(v, f64::from(u8::from(common::same(inst, i, j))), "pair ({i},{j})");
        }
    }
}

#[test]
fn method1_instances_stay_inside_semantic_components() {
    let train: Vec<_> = (100..104).map(|seed| gen_scene(&SceneSpec { seed, ..SceneSpec::default() }).unwrap().instances).collect();
    let cb = build_codebook(&train, 5, 30, 0).unwrap().codebook;
    for seed in 0..6 {
        let scene = gen_scene(&SceneSpec { seed, touching_probability: 0.7, ..SceneSpec::default() }).unwrap();
        let cm = perturb_class_map(&encode(&scene.instances, &cb), 0.1, 30, seed).unwrap();
        let out = integrate_method1(&scene.semantic, &cm, &cb, &Method1Options::default()).unwrap();
        let comps = connected_components(&scene.semantic);
        for id in out.map.ids() {
            let mut owner = None;
            for (p, &l) in out.map.labels().iter().enumerate() {
                if l == id {
                    let c = comps.labels()[p];
                    assert_ne!(c, 0);
                    assert_eq!(*owner.get_or_insert(c), c, "instance {id} spans components");
                }
            }
            assert_eq!(out.map.class_of_id(id), comps.class_of_id(owner.unwrap()));
        }
    }
}
