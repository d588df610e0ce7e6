use qseg_core::labelmap::connected_components;
use qseg_core::pixel_affinity::PatchClassMap;
use qseg_core::rng::seeded;
use qseg_core::superpixel::SuperpixelAffinityLabels;
use qseg_core::synth::{gen_scene, perturb_class_map, perturb_pair_labels, pieces_per_instance, SceneSpec};
use rand::RngCore;

/// Reference splitmix64-seeded xoshiro256++.
fn reference_stream(seed: u64, n: usize) -> Vec<u64> {
    let mut sm = seed;
    let mut split = || {
        sm = sm.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = sm;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    let mut s = [split(), split(), split(), split()];
    (0..n)
        .map(|_| {
            let out = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
            let t = s[1] << 17;
            s[2] ^= s[0];
            s[3] ^= s[1];
            s[1] ^= s[2];
            s[0] ^= s[3];
            s[2] ^= t;
            s[3] = s[3].rotate_left(45);
            out
        })
        .collect()
}

#[test]
fn generator_matches_reference_algorithm() {
    for seed in [0, 1, 42, u64::MAX] {
        let mut rng = seeded(seed);
        let got: Vec<u64> = (0..16).map(|_| rng.next_u64()).collect();
        assert_eq!(got, reference_stream(seed, 16), "seed {seed}");
    }
}

fn within_three_sigma(flips: usize, n: usize, p: f64) -> bool {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (flips as f64 - mean).abs() <= 3.0 * sd
}

#[test]
fn class_flip_fraction_is_binomial() {
    let classes: Vec<u32> = (0..64 * 64).map(|p| (p % 100) as u32).collect();
    let cm = PatchClassMap::new(64, 64, classes).unwrap();
    for (seed, rate) in [(1, 0.05), (2, 0.05), (3, 0.2), (4, 0.5), (5, 0.01)] {
        let noisy = perturb_class_map(&cm, rate, 100, seed).unwrap();
        let flips = noisy.classes().iter().zip(cm.classes()).filter(|(a, b)| a != b).count();
        assert!(within_three_sigma(flips, 64 * 64, rate), "seed {seed} rate {rate}: {flips}");
        assert!(noisy.classes().iter().all(|&c| c < 100));
        assert_eq!(noisy, perturb_class_map(&cm, rate, 100, seed).unwrap());
    }
}

#[test]
fn pair_flip_fraction_is_binomial() {
    let mut labels = SuperpixelAffinityLabels::default();
    for i in 0..100u32 {
        for j in i + 1..(i + 41).min(100) {
            labels.insert(i, j, f64::from((i + j) % 2)).unwrap();
        }
    }
    let n = labels.len();
    for (seed, rate) in [(1, 0.05), (2, 0.1), (3, 0.3)] {
        let noisy = perturb_pair_labels(&labels, rate, seed).unwrap();
        assert_eq!(noisy.len(), n);
        let flips = labels.pairs.iter().filter(|(k, &v)| noisy.pairs[*k] == 1.0 - v).count();
        let kept = labels.pairs.iter().filter(|(k, &v)| noisy.pairs[*k] == v).count();
        assert_eq!(flips + kept, n);
        assert!(within_three_sigma(flips, n, rate), "seed {seed} rate {rate}: {flips}/{n}");
    }
}

#[test]
fn scenes_are_consistent_and_connected() {
    for seed in 0..100 {
        let spec = SceneSpec { seed, touching_probability: 0.7, ..SceneSpec::default() };
        let s = gen_scene(&spec).unwrap();
        assert_eq!(s, gen_scene(&spec).unwrap(), "seed {seed}");
        assert!(pieces_per_instance(&s.instances).values().all(|&n| n == 1), "seed {seed}");
        assert_eq!(s.instances.semantic(), s.semantic);
        let n = s.instances.instance_count();
        assert!((spec.instances.0..=spec.instances.1).contains(&n), "seed {seed}: {n}");
        assert!(s.instances.class_of().values().all(|&c| (1..=spec.class_count).contains(&c)));
    }
    assert_ne!(gen_scene(&SceneSpec { seed: 1, ..SceneSpec::default() }).unwrap(), gen_scene(&SceneSpec::default()).unwrap());
}

#[test]
fn always_touching_pairs_merge_semantically() {
    for seed in 0..20 {
        let spec = SceneSpec { seed, class_count: 1, instances: (2, 2), touching_probability: 1.0, ..SceneSpec::default() };
        let s = gen_scene(&spec).unwrap();
        assert_eq!(s.instances.instance_count(), 2);
        assert_eq!(connected_components(&s.semantic).instance_count(), 1, "seed {seed}");
    }
}

#[test]
fn zero_instances_give_background() {
    let s = gen_scene(&SceneSpec { instances: (0, 0), ..SceneSpec::default() }).unwrap();
    assert_eq!(s.instances.instance_count(), 0);
    assert!(s.semantic.labels().iter().all(|&c| c == 0));
}
