use std::collections::BTreeSet;

use feeder_core::vision::{
    build_mask, classify_food_level, decode_pgm, detect_presence, encode_pgm, food_level, presence_from_fraction,
    update_background, BowlRegion, ForegroundMask, Frame, FoodStatus, VisionError,
};
use feeder_core::{BackgroundModel, LevelConfig};
use proptest::prelude::*;

/// Every pixel of the frame tested against the disc inequality.
fn brute_force_disc(w: u32, h: u32, cx: i64, cy: i64, r: u32) -> BTreeSet<(u32, u32)> {
    let r2 = (r as i64) * (r as i64);
    let mut out = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            let dx = x as i64 - cx;
            let dy = y as i64 - cy;
            if dx * dx + dy * dy <= r2 {
                out.insert((x, y));
            }
        }
    }
    out
}

fn brute_force_dark(frame: &Frame, inside: &BTreeSet<(u32, u32)>, threshold: u8) -> usize {
    inside
        .iter()
        .filter(|&&(x, y)| frame.get(x, y).unwrap() < threshold)
        .count()
}

fn cfg() -> LevelConfig {
    LevelConfig::default()
}

#[test]
fn lattice_count_for_radius_ten() {
    let oracle = brute_force_disc(100, 100, 50, 50, 10);
    assert_eq!(oracle.len(), 317);
    let mask = build_mask(100, 100, BowlRegion::new(50, 50, 10)).unwrap();
    assert_eq!(mask.count(), 317);
    assert_eq!(mask.points().collect::<BTreeSet<_>>(), oracle);
}

#[test]
fn mask_examples() {
    let m = build_mask(4, 4, BowlRegion::new(1, 1, 0)).unwrap();
    assert_eq!(m.count(), 1);
    assert_eq!(m.points().collect::<Vec<_>>(), vec![(1, 1)]);
    assert!(matches!(
        build_mask(10, 10, BowlRegion::new(50, 50, 3)),
        Err(VisionError::EmptyMask { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mask_matches_brute_force(
        w in 1u32..=128,
        h in 1u32..=128,
        cx in -40i64..170,
        cy in -40i64..170,
        r in 0u32..90,
    ) {
        let oracle = brute_force_disc(w, h, cx, cy, r);
        match build_mask(w, h, BowlRegion::new(cx, cy, r)) {
            Ok(mask) => {
                prop_assert_eq!(mask.count(), oracle.len());
                prop_assert_eq!(mask.points().collect::<BTreeSet<_>>(), oracle);
            }
            Err(VisionError::EmptyMask { .. }) => prop_assert!(oracle.is_empty()),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn constant_frames() {
    let mask = build_mask(100, 100, BowlRegion::new(50, 50, 10)).unwrap();
    let dark = food_level(&Frame::filled(100, 100, 0).unwrap(), &mask, &cfg(), 0).unwrap();
    assert_eq!(dark.percent, 100.0);
    assert_eq!(dark.dark_pixels, 317);
    assert_eq!(dark.total_pixels, 317);
    let bright = food_level(&Frame::filled(100, 100, 255).unwrap(), &mask, &cfg(), 0).unwrap();
    assert_eq!(bright.percent, 0.0);
    // Strict comparison: a pixel exactly at the threshold is not food.
    let edge = food_level(&Frame::filled(100, 100, 50).unwrap(), &mask, &cfg(), 0).unwrap();
    assert_eq!(edge.percent, 0.0);
    assert_eq!(edge.intensity_threshold, 50);
}

#[test]
fn half_dark_bowl() {
    let mask = build_mask(100, 100, BowlRegion::new(50, 50, 10)).unwrap();
    let mut frame = Frame::filled(100, 100, 200).unwrap();
    for (x, y) in mask.points().take(158) {
        frame.set(x, y, 10);
    }
    let oracle = brute_force_dark(&frame, &brute_force_disc(100, 100, 50, 50, 10), 50);
    assert_eq!(oracle, 158);
    let r = food_level(&frame, &mask, &cfg(), 42).unwrap();
    assert_eq!(r.dark_pixels, oracle);
    assert!((r.percent - 49.84).abs() <= 0.01, "{}", r.percent);
    assert_eq!(r.percent, 100.0 * 158.0 / 317.0);
    assert_eq!(r.timestamp, 42);
    assert_eq!(r.status, FoodStatus::Adequate);
}

#[test]
fn dimension_mismatch() {
    let mask = build_mask(100, 100, BowlRegion::new(50, 50, 10)).unwrap();
    assert!(matches!(
        food_level(&Frame::filled(99, 100, 0).unwrap(), &mask, &cfg(), 0),
        Err(VisionError::DimensionMismatch { .. })
    ));
}

#[test]
fn classification_is_strict() {
    assert_eq!(classify_food_level(0.0, 30.0), FoodStatus::Low);
    assert_eq!(classify_food_level(30.0, 30.0), FoodStatus::Adequate);
    assert_eq!(classify_food_level(99.9, 30.0), FoodStatus::Adequate);
    assert_eq!(classify_food_level(29.999f32, 30.0), FoodStatus::Low);
}

fn frame_strategy() -> impl Strategy<Value = (u32, u32, Vec<u8>)> {
    (1u32..=40, 1u32..=40).prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(any::<u8>(), (w * h) as usize)))
}

proptest! {
    #[test]
    fn level_range_and_formula((w, h, px) in frame_strategy(), cx in 0i64..40, cy in 0i64..40, r in 0u32..25, t in any::<u8>()) {
        let Ok(mask) = build_mask(w, h, BowlRegion::new(cx, cy, r)) else { return Ok(()); };
        let frame = Frame::new(w, h, px).unwrap();
        let cfg = LevelConfig { intensity_threshold: t, low_threshold: 30.0 };
        let reading = food_level(&frame, &mask, &cfg, 0).unwrap();
        let oracle = brute_force_dark(&frame, &brute_force_disc(w, h, cx, cy, r), t);
        prop_assert_eq!(reading.dark_pixels, oracle);
        prop_assert!(reading.dark_pixels <= reading.total_pixels);
        prop_assert!((0.0..=100.0).contains(&reading.percent));
        prop_assert_eq!(reading.percent, 100.0 * oracle as f64 / mask.count() as f64);
        prop_assert_eq!(reading.status == FoodStatus::Low, reading.percent < 30.0);
    }

    #[test]
    fn constant_frame_is_all_or_nothing(c in any::<u8>(), t in any::<u8>()) {
        let mask = build_mask(30, 30, BowlRegion::new(15, 15, 8)).unwrap();
        let cfg = LevelConfig { intensity_threshold: t, low_threshold: 30.0 };
        let r = food_level(&Frame::filled(30, 30, c).unwrap(), &mask, &cfg, 0).unwrap();
        prop_assert_eq!(r.percent, if c < t { 100.0 } else { 0.0 });
    }

    #[test]
    fn darkening_never_lowers_level((w, h, px) in frame_strategy(), pick in any::<prop::sample::Index>(), v in 0u8..50) {
        let Ok(mask) = build_mask(w, h, BowlRegion::new(w as i64 / 2, h as i64 / 2, w.min(h) / 2)) else { return Ok(()); };
        let mut frame = Frame::new(w, h, px).unwrap();
        let before = food_level(&frame, &mask, &cfg(), 0).unwrap();
        let points: Vec<_> = mask.points().collect();
        let (x, y) = points[pick.index(points.len())];
        frame.set(x, y, v);
        let after = food_level(&frame, &mask, &cfg(), 0).unwrap();
        prop_assert!(after.percent >= before.percent);
    }

    #[test]
    fn outside_pixels_are_ignored((w, h, px) in frame_strategy(), pick in any::<prop::sample::Index>(), v in any::<u8>()) {
        let Ok(mask) = build_mask(w, h, BowlRegion::new(w as i64 / 2, h as i64 / 2, w.min(h) / 3)) else { return Ok(()); };
        let outside: Vec<_> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).filter(|&(x, y)| !mask.contains(x, y)).collect();
        if outside.is_empty() { return Ok(()); }
        let mut frame = Frame::new(w, h, px).unwrap();
        let before = food_level(&frame, &mask, &cfg(), 0).unwrap();
        let (x, y) = outside[pick.index(outside.len())];
        frame.set(x, y, v);
        prop_assert_eq!(food_level(&frame, &mask, &cfg(), 0).unwrap(), before);
    }

    #[test]
    fn vision_is_pure((w, h, px) in frame_strategy()) {
        let frame = Frame::new(w, h, px).unwrap();
        let model = BackgroundModel::new(0.05, 25.0).unwrap();
        let (m1, f1) = update_background(&model, &frame).unwrap();
        let (m2, f2) = update_background(&model, &frame).unwrap();
        prop_assert_eq!(&m1, &m2);
        prop_assert_eq!(f1, f2);
        let next = Frame::new(w, h, frame.pixels().iter().map(|p| p.wrapping_add(90)).collect()).unwrap();
        prop_assert_eq!(update_background(&m1, &next).unwrap(), update_background(&m2, &next).unwrap());
    }
}

#[test]
fn first_frame_seeds_model() {
    let frame = Frame::new(3, 1, vec![0, 100, 255]).unwrap();
    let (model, fg) = update_background(&BackgroundModel::new(0.05, 25.0).unwrap(), &frame).unwrap();
    assert_eq!(fg.count(), 0);
    assert_eq!(fg.fraction::<f64>(), 0.0);
    assert_eq!(model.mean(), &[0.0, 100.0, 255.0]);
    assert!(model.is_initialized());
}

#[test]
fn zero_alpha_freezes_mean() {
    let frame = Frame::filled(8, 8, 77).unwrap();
    let mut model = BackgroundModel::new(0.0, 25.0).unwrap();
    model.update(&frame).unwrap();
    for _ in 0..20 {
        assert_eq!(model.update(&frame).unwrap().count(), 0);
        assert!(model.mean().iter().all(|&m| m == 77.0));
    }
}

#[test]
fn block_after_static_scene() {
    let scene = Frame::filled(100, 100, 200).unwrap();
    let mut model = BackgroundModel::new(0.05, 25.0).unwrap();
    for _ in 0..10 {
        model.update(&scene).unwrap();
    }
    let mut intruder = scene.clone();
    for y in 10..40 {
        for x in 20..50 {
            intruder.set(x, y, 20);
        }
    }
    let fg = model.update(&intruder).unwrap();
    assert_eq!(fg.count(), 900);
    assert_eq!(fg.fraction::<f64>(), 0.09);
    assert!(detect_presence(&fg, 0.05, 0).detected);
}

#[test]
fn size_change_rejected() {
    let mut model = BackgroundModel::new(0.05, 25.0).unwrap();
    model.update(&Frame::filled(4, 4, 0).unwrap()).unwrap();
    assert!(matches!(
        model.update(&Frame::filled(5, 4, 0).unwrap()),
        Err(VisionError::DimensionMismatch { .. })
    ));
}

/// `(1 - alpha)^k * gap0` is attained exactly by the worst pixel in real
/// arithmetic, so the comparison allows for the rounding of the k updates:
/// at most two ulps of the 0..=255 intensity scale each.
fn contraction_bound(k: usize, initial: f64) -> f64 {
    0.95f64.powi(k as i32) * initial + k as f64 * 256.0 * f64::EPSILON
}

fn max_gap(mean: &[f64], scene: &Frame) -> f64 {
    mean.iter()
        .zip(scene.pixels())
        .map(|(m, &s)| (m - s as f64).abs())
        .fold(0.0, f64::max)
}

#[test]
fn background_converges_geometrically() {
    let w = 64u32;
    let h = 48u32;
    let start = Frame::new(w, h, (0..w * h).map(|i| (i * 37 % 256) as u8).collect()).unwrap();
    let scene = Frame::new(w, h, (0..w * h).map(|i| 255 - (i * 11 % 256) as u8).collect()).unwrap();
    let mut model = BackgroundModel::seeded(&start, 0.05, 25.0).unwrap();
    let initial = max_gap(model.mean(), &scene);
    assert!(initial > 0.0);
    for k in 1..=50usize {
        model.update(&scene).unwrap();
        if [1, 10, 50].contains(&k) {
            let bound = contraction_bound(k, initial);
            let gap = max_gap(model.mean(), &scene);
            assert!(gap <= bound, "k={k}: gap {gap} > bound {bound}");
        }
    }
    assert!(model.mean().iter().all(|m| (0.0..=255.0).contains(m)));
}

proptest! {
    #[test]
    fn background_bound_holds_for_any_start(a in any::<u8>(), s in any::<u8>(), k in 1usize..80) {
        let mut model = BackgroundModel::seeded(&Frame::filled(2, 2, a).unwrap(), 0.05, 25.0).unwrap();
        let scene = Frame::filled(2, 2, s).unwrap();
        let initial = (a as f64 - s as f64).abs();
        for _ in 0..k {
            model.update(&scene).unwrap();
        }
        prop_assert!(max_gap(model.mean(), &scene) <= contraction_bound(k, initial));
    }
}

fn raster_with(count: usize) -> ForegroundMask {
    let bits = (0..1000).map(|i| i < count).collect();
    ForegroundMask::from_bits(40, 25, bits).unwrap()
}

#[test]
fn presence_boundary() {
    let cases = [(49, 0.049, false), (50, 0.050, false), (51, 0.051, true)];
    for (count, fraction, expected) in cases {
        let r = detect_presence(&raster_with(count), 0.05, 9);
        assert_eq!(r.foreground_fraction, fraction);
        assert_eq!(r.detected, expected, "fraction {fraction}");
        assert_eq!(r.timestamp, 9);
    }
    let empty = detect_presence::<f64>(&ForegroundMask::empty(10, 10), 0.05, 0);
    assert_eq!(empty.foreground_fraction, 0.0);
    assert!(!empty.detected);
    assert!(presence_from_fraction(0.09, 0.05, 0).detected);
}

proptest! {
    #[test]
    fn presence_is_strictly_above_threshold(count in 0usize..=1000, threshold in 0.0f64..1.0) {
        let r = detect_presence(&raster_with(count), threshold, 0);
        prop_assert_eq!(r.detected, r.foreground_fraction > threshold);
        prop_assert!((0.0..=1.0).contains(&r.foreground_fraction));
    }
}

#[test]
fn pgm_examples() {
    let f = decode_pgm(b"P5\n2 2\n255\n\x00\xff\x80\x07").unwrap();
    assert_eq!(f, Frame::new(2, 2, vec![0, 255, 128, 7]).unwrap());
    assert!(matches!(decode_pgm(b"P6\n2 2\n255\n\x00\x00\x00\x00"), Err(VisionError::MalformedImage(_))));
    let mut short = b"P5\n4 4\n255\n".to_vec();
    short.extend([0u8; 15]);
    assert!(matches!(decode_pgm(&short), Err(VisionError::MalformedImage(_))));
    assert!(matches!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00"), Err(VisionError::MalformedImage(_))));
}

proptest! {
    #[test]
    fn pgm_round_trip((w, h, px) in frame_strategy()) {
        let frame = Frame::new(w, h, px).unwrap();
        prop_assert_eq!(decode_pgm(&encode_pgm(&frame)).unwrap(), frame);
    }
}
