use proptest::prelude::*;
use raformer_core::dataset::{decode_mask, encode_mask};
use raformer_core::mask::{
    bounding_boxes, create_pp_mask, create_video_mask, create_wire_layers, create_wire_mask, dilate,
    label_components,
};
use raformer_core::{Mask, Rng, WireSpec};

const CANVAS: (usize, usize) = (240, 432);

/// Erosion by a `size×size` square, anchored like a centred dilation.
fn erode(mask: &Mask, size: usize) -> Mask {
    let (h, w) = (mask.height(), mask.width());
    let r = (size / 2) as i64;
    let lo = -r;
    let hi = size as i64 - 1 - r;
    let mut out = Mask::new(h, w);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let all = (lo..=hi).all(|dy| {
                (lo..=hi).all(|dx| {
                    let (yy, xx) = (y + dy, x + dx);
                    yy >= 0 && xx >= 0 && yy < h as i64 && xx < w as i64 && mask.get(yy as usize, xx as usize)
                })
            });
            if all {
                out.set(y as usize, x as usize, true);
            }
        }
    }
    out
}

#[test]
fn wire_masks_replay_bitwise() {
    let spec = WireSpec::default();
    for seed in 0..5 {
        let a = create_wire_mask(&spec, CANVAS, &mut Rng::new(seed)).unwrap();
        let b = create_wire_mask(&spec, CANVAS, &mut Rng::new(seed)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn masks_stay_binary_through_pgm() {
    let m = create_wire_mask(&WireSpec::default(), CANVAS, &mut Rng::new(3)).unwrap();
    assert!(m.bits().iter().all(|&b| b <= 1));
    let bytes = encode_mask(&m);
    let header = b"P5\n432 240\n255\n".len();
    assert!(bytes[header..].iter().all(|&v| v == 0 || v == 255));
    assert_eq!(decode_mask(&bytes).unwrap(), m);
}

#[test]
fn component_count_bounded_by_wire_count() {
    for num in 0..5 {
        let spec = WireSpec { num, ..Default::default() };
        for seed in 0..10 {
            let m = create_wire_mask(&spec, CANVAS, &mut Rng::new(seed)).unwrap();
            let (_, count) = label_components(&m);
            assert!(count <= num, "num {num} seed {seed}: {count} components");
            assert_eq!(bounding_boxes(&m).len(), count);
        }
    }
}

#[test]
fn strokes_dilate_to_the_mask_and_respect_width() {
    let spec = WireSpec::default();
    for seed in 0..10 {
        let layers = create_wire_layers(&spec, CANVAS, &mut Rng::new(seed)).unwrap();
        assert!(layers.dilate_times <= spec.max_dilate_times);
        let mut union = Mask::new(CANVAS.0, CANVAS.1);
        for (stroke, &width) in layers.strokes.iter().zip(&layers.widths) {
            assert!((spec.width_range.0..=spec.width_range.1).contains(&width));
            // a stroke never contains a (w+1)×(w+1) solid square
            assert!(erode(stroke, width + 1).is_empty(), "seed {seed} width {width}");
            union.union_with(stroke).unwrap();
        }
        let expect = dilate(&union, spec.dilate_kernel, layers.dilate_times).unwrap();
        assert_eq!(layers.mask, expect);
    }
}

#[test]
fn video_frames_are_translates_when_unclipped() {
    let spec = WireSpec { num: 2, len_range: (40, 100), ..Default::default() };
    let mut checked = 0;
    for seed in 0..10 {
        let mut rng = Rng::new(seed);
        let base = create_wire_mask(&spec, CANVAS, &mut rng).unwrap();
        let seq = create_video_mask(&base, 20, 4, &mut rng).unwrap();
        let first = &seq.frames()[0];
        let (mut dr, mut dc) = (0i64, 0i64);
        for (t, &(dx, dy)) in seq.motion_log().iter().enumerate() {
            assert!(dx.abs() <= 4 && dy.abs() <= 4);
            dc += dx as i64;
            dr += dy as i64;
            let frame = &seq.frames()[t + 1];
            let moved = first.translated(dr, dc);
            if frame.count() == first.count() && moved.count() == first.count() {
                assert_eq!(frame, &moved, "seed {seed} frame {}", t + 1);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn zero_wires_give_empty_video() {
    let spec = WireSpec { num: 0, ..Default::default() };
    let mut rng = Rng::new(1);
    let base = create_wire_mask(&spec, CANVAS, &mut rng).unwrap();
    let seq = create_video_mask(&base, 5, 4, &mut rng).unwrap();
    assert!(seq.frames().iter().all(Mask::is_empty));
}

#[test]
fn pp_masks_replay() {
    assert_eq!(
        create_pp_mask(CANVAS, &mut Rng::new(8)),
        create_pp_mask(CANVAS, &mut Rng::new(8))
    );
}

fn random_mask(h: usize, w: usize, seed: u64, density: f64) -> Mask {
    let mut rng = Rng::new(seed);
    let bits = (0..h * w).map(|_| (rng.next_f64() < density) as u8).collect();
    Mask::from_bits(h, w, bits).unwrap()
}

proptest! {
    #[test]
    fn dilation_is_extensive(seed in 0u64..10_000, k in prop::sample::select(vec![1usize, 3, 5]), times in 0usize..3) {
        let m = random_mask(17, 23, seed, 0.05);
        prop_assert!(dilate(&m, k, times).unwrap().contains(&m));
    }

    #[test]
    fn dilation_is_monotone(seed in 0u64..10_000, k in prop::sample::select(vec![1usize, 3, 5]), times in 0usize..3) {
        let a = random_mask(17, 23, seed, 0.03);
        let mut b = a.clone();
        b.union_with(&random_mask(17, 23, seed + 1, 0.03)).unwrap();
        let (da, db) = (dilate(&a, k, times).unwrap(), dilate(&b, k, times).unwrap());
        prop_assert!(db.contains(&da));
    }
}
