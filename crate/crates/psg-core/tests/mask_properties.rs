//! Property tests for the run-length mask algebra, checked against dense
//! per-pixel brute force.

use proptest::prelude::*;

use psg_core::mask::{
    bbox_iou, mask_iou, mask_union, pixelwise_argmax_merge, rle_decode, rle_encode, tightest_bbox,
    Bitmap, LabeledSoftMask, SceneCanvas, SegmentMask, SoftMask,
};

fn canvas(h: u32, w: u32) -> SceneCanvas {
    SceneCanvas::new(h, w).unwrap()
}

fn arb_bitmap() -> impl Strategy<Value = Bitmap> {
    (1u32..=12, 1u32..=12).prop_flat_map(|(h, w)| {
        proptest::collection::vec(any::<bool>(), (h * w) as usize)
            .prop_map(move |bits| Bitmap::new(canvas(h, w), bits).unwrap())
    })
}

fn arb_bitmap_pair() -> impl Strategy<Value = (Bitmap, Bitmap)> {
    (1u32..=12, 1u32..=12).prop_flat_map(|(h, w)| {
        let len = (h * w) as usize;
        (
            proptest::collection::vec(any::<bool>(), len),
            proptest::collection::vec(any::<bool>(), len),
        )
            .prop_map(move |(a, b)| {
                (
                    Bitmap::new(canvas(h, w), a).unwrap(),
                    Bitmap::new(canvas(h, w), b).unwrap(),
                )
            })
    })
}

/// IoU computed directly on the dense grids, before any encoding.
fn dense_iou(a: &Bitmap, b: &Bitmap) -> f64 {
    let inter = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(&x, &y)| x && y)
        .count();
    let union = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(&x, &y)| x || y)
        .count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

proptest! {
    #[test]
    fn decode_inverts_encode(bitmap in arb_bitmap()) {
        let mask = rle_encode(&bitmap);
        prop_assert_eq!(rle_decode(&mask), bitmap);
    }

    #[test]
    fn encode_inverts_decode(bitmap in arb_bitmap()) {
        // every canonical mask is the encoding of some bitmap
        let mask = rle_encode(&bitmap);
        prop_assert_eq!(rle_encode(&rle_decode(&mask)), mask);
    }

    #[test]
    fn encoded_runs_are_canonical(bitmap in arb_bitmap()) {
        let mask = rle_encode(&bitmap);
        let runs = mask.runs();
        prop_assert_eq!(runs.iter().sum::<usize>(), bitmap.canvas().pixel_count());
        prop_assert!(runs.iter().skip(1).all(|&r| r > 0));
        // reconstructing through the validating constructor accepts them
        prop_assert!(SegmentMask::from_runs(bitmap.canvas(), runs.to_vec()).is_ok());
    }

    #[test]
    fn iou_matches_dense_oracle_exactly(pair in arb_bitmap_pair()) {
        let (a, b) = pair;
        let got = mask_iou(&rle_encode(&a), &rle_encode(&b)).unwrap();
        prop_assert_eq!(got, dense_iou(&a, &b));
    }

    #[test]
    fn iou_is_symmetric_and_bounded(pair in arb_bitmap_pair()) {
        let (a, b) = pair;
        let (ma, mb) = (rle_encode(&a), rle_encode(&b));
        let ab = mask_iou(&ma, &mb).unwrap();
        let ba = mask_iou(&mb, &ma).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        if !ma.is_empty() {
            prop_assert_eq!(mask_iou(&ma, &ma).unwrap(), 1.0);
        }
    }

    #[test]
    fn union_matches_dense_or(pair in arb_bitmap_pair()) {
        let (a, b) = pair;
        let got = mask_union(&rle_encode(&a), &rle_encode(&b)).unwrap();
        let or_bits: Vec<bool> = a.bits().iter().zip(b.bits()).map(|(&x, &y)| x || y).collect();
        let want = rle_encode(&Bitmap::new(a.canvas(), or_bits).unwrap());
        prop_assert_eq!(got, want);
    }

    #[test]
    fn tightest_bbox_matches_pixel_scan(bitmap in arb_bitmap()) {
        let mask = rle_encode(&bitmap);
        let w = bitmap.canvas().width;
        let set: Vec<(u32, u32)> = bitmap
            .bits()
            .iter()
            .enumerate()
            .filter(|(_, &bit)| bit)
            .map(|(i, _)| ((i as u32) % w, (i as u32) / w))
            .collect();
        if set.is_empty() {
            prop_assert!(tightest_bbox(&mask).is_err());
        } else {
            let bbox = tightest_bbox(&mask).unwrap();
            prop_assert_eq!(bbox.x0, set.iter().map(|p| p.0).min().unwrap());
            prop_assert_eq!(bbox.x1, set.iter().map(|p| p.0).max().unwrap() + 1);
            prop_assert_eq!(bbox.y0, set.iter().map(|p| p.1).min().unwrap());
            prop_assert_eq!(bbox.y1, set.iter().map(|p| p.1).max().unwrap() + 1);
        }
    }

    #[test]
    fn box_iou_of_tightest_boxes_is_bounded(pair in arb_bitmap_pair()) {
        let (a, b) = pair;
        let (ma, mb) = (rle_encode(&a), rle_encode(&b));
        if !ma.is_empty() && !mb.is_empty() {
            let iou = bbox_iou(tightest_bbox(&ma).unwrap(), tightest_bbox(&mb).unwrap());
            prop_assert!((0.0..=1.0).contains(&iou));
        }
    }
}

fn arb_soft_parts() -> impl Strategy<Value = Vec<LabeledSoftMask>> {
    (1u32..=8, 1u32..=8, 1usize..=4).prop_flat_map(|(h, w, parts)| {
        let len = (h * w) as usize;
        proptest::collection::vec(
            (
                proptest::collection::vec(
                    prop_oneof![3 => 0.0..=1.0f64, 1 => Just(0.0)],
                    len,
                ),
                0usize..3,
                0.0..=1.0f64,
            ),
            parts,
        )
        .prop_map(move |specs| {
            specs
                .into_iter()
                .map(|(scores, label, priority)| LabeledSoftMask {
                    mask: SoftMask::new(canvas(h, w), scores).unwrap(),
                    label,
                    priority,
                })
                .collect()
        })
    })
}

/// Straight per-pixel loop over the parts, written independently.
fn dense_argmax(parts: &[LabeledSoftMask]) -> Vec<Option<usize>> {
    let pixels = parts[0].mask.canvas().pixel_count();
    (0..pixels)
        .map(|px| {
            let mut winner: Option<usize> = None;
            let mut best = (0.0f64, f64::NEG_INFINITY);
            for (index, part) in parts.iter().enumerate() {
                let score = part.mask.scores()[px];
                if score <= 0.0 {
                    continue;
                }
                if winner.is_none() || score > best.0 || (score == best.0 && part.priority > best.1)
                {
                    winner = Some(index);
                    best = (score, part.priority);
                }
            }
            winner.map(|index| parts[index].label)
        })
        .collect()
}

proptest! {
    #[test]
    fn argmax_merge_matches_dense_oracle(parts in arb_soft_parts()) {
        let map = pixelwise_argmax_merge(&parts).unwrap();
        let expected = dense_argmax(&parts);
        prop_assert_eq!(map.labels(), expected.as_slice());
    }

    #[test]
    fn argmax_merge_labels_are_disjoint(parts in arb_soft_parts()) {
        // splitting the merged map back into per-label masks gives
        // pairwise-disjoint masks
        let map = pixelwise_argmax_merge(&parts).unwrap();
        let labels = map.present_labels();
        let masks: Vec<SegmentMask> = labels
            .iter()
            .map(|&l| rle_encode(&map.label_mask(l)))
            .collect();
        for i in 0..masks.len() {
            for j in (i + 1)..masks.len() {
                let union = mask_union(&masks[i], &masks[j]).unwrap();
                prop_assert_eq!(
                    union.foreground_area(),
                    masks[i].foreground_area() + masks[j].foreground_area()
                );
            }
        }
    }
}
