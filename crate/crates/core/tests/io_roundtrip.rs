use std::collections::BTreeMap;

use proptest::prelude::*;
use qseg_core::io::{encode_pairs, encode_pgm, encode_sidecar, parse_pairs, parse_pgm, parse_sidecar, Gray, PnmEncoding};
use qseg_core::pixel_affinity::AffinityCodebook;
use qseg_core::superpixel::SuperpixelAffinityLabels;

fn gray_strategy() -> impl Strategy<Value = Gray> {
    (1usize..9, 1usize..9, prop_oneof![Just(1u32), Just(255), Just(1000), Just(65535)]).prop_flat_map(|(h, w, maxval)| {
        prop::collection::vec(0..=maxval, h * w).prop_map(move |data| Gray { height: h, width: w, maxval, data })
    })
}

proptest! {
    #[test]
    fn pgm_round_trips(g in gray_strategy(), binary in any::<bool>()) {
        let enc = if binary { PnmEncoding::Binary } else { PnmEncoding::Ascii };
        let bytes = encode_pgm(&g, enc).unwrap();
        prop_assert_eq!(parse_pgm(&bytes).unwrap(), g);
    }

    #[test]
    fn pair_text_round_trips(entries in prop::collection::btree_map((0u32..50, 0u32..50), 0.0f64..=1.0, 0..40)) {
        let mut labels = SuperpixelAffinityLabels::default();
        for ((i, j), w) in entries {
            if i != j {
                labels.insert(i, j, w).unwrap();
            }
        }
        let text = encode_pairs(&labels);
        prop_assert_eq!(parse_pairs(&text).unwrap(), labels);
        let keys: Vec<(u32, u32)> = text.lines().map(|l| {
            let f: Vec<u32> = l.split(' ').take(2).map(|s| s.parse().unwrap()).collect();
            (f[0], f[1])
        }).collect();
        prop_assert!(keys.windows(2).all(|p| p[0] < p[1]));
        prop_assert!(keys.iter().all(|&(i, j)| i < j));
    }

    #[test]
    fn sidecar_round_trips(class_of in prop::collection::btree_map(1u32..500, 1u32..20, 0..10), with_scores in any::<bool>()) {
        let scores: BTreeMap<u32, f64> = class_of.keys().map(|&id| (id, f64::from(id) * 0.25)).collect();
        let text = encode_sidecar(&class_of, with_scores.then_some(&scores));
        let (c, s) = parse_sidecar(&text).unwrap();
        prop_assert_eq!(c, class_of);
        prop_assert_eq!(s, with_scores.then_some(scores));
    }
}

#[test]
fn codebook_layout_is_little_endian() {
    let n = 9;
    let center: Vec<f64> = (0..n * n).map(|i| if i % (n + 1) == 0 { 1.0 } else { 0.5 }).collect();
    let cb = AffinityCodebook::new(3, vec![center.clone(), center]).unwrap();
    let bytes = cb.to_bytes();
    assert_eq!(&bytes[..4], b"AFCB");
    assert_eq!(bytes[4..8], 1u32.to_le_bytes());
    assert_eq!(bytes[8..12], 3u32.to_le_bytes());
    assert_eq!(bytes[12..16], 2u32.to_le_bytes());
    assert_eq!(bytes.len(), 16 + 2 * 81 * 8);
    assert_eq!(bytes[16..24], 1.0f64.to_le_bytes());
    assert_eq!(bytes[24..32], 0.5f64.to_le_bytes());
    assert_eq!(AffinityCodebook::from_bytes(&bytes).unwrap(), cb);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err());
    assert!(parse_pgm(b"P3\n1 1\n255\n0 0 0\n").is_err());
    assert!(parse_pairs("3 3 1\n").is_err());
    assert!(parse_pairs("1 2\n").is_err());
    assert!(parse_pairs("1 2 1.5\n").is_err());
    assert!(AffinityCodebook::from_bytes(b"AFCX\x01\0\0\0").is_err());
}
