#[path = "support/oracles.rs"]
mod oracles;

use crowdgen_core::geometry::{
    point_seg_distance, raycast, seg_intersect, seg_seg_distance, swept_circle_vs_segment, Circle,
};
use crowdgen_core::{Polygon, Segment, Vec2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(rng: &mut ChaCha8Rng, half: f64) -> Vec2 {
    Vec2::new(rng.gen_range(-half..half), rng.gen_range(-half..half))
}

#[test]
fn swept_disc_matches_dense_time_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut hits, mut misses, mut grazes) = (0, 0, 0);
    for case in 0..1000 {
        let seg = Segment::new(point(&mut rng, 3.0), point(&mut rng, 3.0));
        let c0 = point(&mut rng, 5.0);
        let c1 = point(&mut rng, 5.0);
        let r = rng.gen_range(0.1..1.5);
        let exact = swept_circle_vs_segment(c0, c1, r, &seg);
        let (dense, min_gap) = oracles::swept_dense(c0, c1, r, &seg, 1e-5);
        if min_gap.abs() < 1e-6 {
            grazes += 1;
            continue;
        }
        match (exact, dense) {
            (Some(t), Some(td)) => {
                hits += 1;
                assert!((t - td).abs() <= 1e-4, "case {case}: exact {t} dense {td}");
            }
            (None, None) => misses += 1,
            other => panic!("case {case}: disagreement {other:?}, min gap {min_gap}"),
        }
    }
    assert!(grazes < 5, "{grazes} ambiguous grazing cases");
    assert!(hits > 100 && misses > 100, "hits {hits} misses {misses}");
}

#[test]
fn point_segment_distance_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let seg = Segment::new(point(&mut rng, 3.0), point(&mut rng, 3.0));
        let p = point(&mut rng, 5.0);
        let d = point_seg_distance(p, &seg);
        let dense = oracles::point_seg_dense(p, &seg, 20_000);
        assert!((d - dense).abs() <= 1e-4, "case {case}: {d} vs {dense}");
        assert!((d - oracles::point_seg_projection(p, &seg)).abs() <= 1e-12);
    }
}

#[test]
fn segment_segment_distance_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut crossing = 0;
    for case in 0..1000 {
        let s1 = Segment::new(point(&mut rng, 3.0), point(&mut rng, 3.0));
        let s2 = Segment::new(point(&mut rng, 3.0), point(&mut rng, 3.0));
        let d = seg_seg_distance(&s1, &s2);
        let dense = oracles::seg_seg_dense(&s1, &s2, 20_000);
        if d == 0.0 {
            crossing += 1;
        }
        assert!((d - dense).abs() <= 1e-4, "case {case}: {d} vs {dense}");
    }
    assert!(crossing > 50, "only {crossing} crossing pairs sampled");
}

#[test]
fn swept_disc_degenerate_cases() {
    let wall = Segment::new(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0));
    // stationary disc away from the wall
    assert_eq!(swept_circle_vs_segment(Vec2::new(2.0, 0.0), Vec2::new(2.0, 0.0), 0.5, &wall), None);
    // starting in contact
    assert_eq!(swept_circle_vs_segment(Vec2::new(0.3, 0.0), Vec2::new(3.0, 0.0), 0.5, &wall), Some(0.0));
    // head-on: touches when the center is 0.5 from the wall, a quarter of the way
    let t = swept_circle_vs_segment(Vec2::new(2.5, 0.0), Vec2::new(-5.5, 0.0), 0.5, &wall).unwrap();
    assert!((t - 0.25).abs() < 1e-12);
    // moving parallel beyond the cap
    assert_eq!(swept_circle_vs_segment(Vec2::new(1.0, -3.0), Vec2::new(1.0, 3.0), 0.5, &wall), None);
}

#[test]
fn raycast_examples() {
    let square = Polygon::rect(Vec2::new(2.0, -1.0), Vec2::new(4.0, 1.0));
    let d = raycast(Vec2::ZERO, 0.0, std::slice::from_ref(&square), &[], 10.0);
    assert!((d - 2.0).abs() < 1e-12);
    // pointing away reports max range
    assert_eq!(raycast(Vec2::ZERO, std::f64::consts::PI, &[square.clone()], &[], 10.0), 10.0);
    // a disc in front of the square wins
    let disc = Circle { center: Vec2::new(1.0, 0.0), radius: 0.5 };
    let d = raycast(Vec2::ZERO, 0.0, &[square.clone()], &[disc], 10.0);
    assert!((d - 0.5).abs() < 1e-12);
    // inside the obstacle
    assert_eq!(raycast(Vec2::new(3.0, 0.0), 1.0, &[square], &[], 10.0), 0.0);
}

fn arb_point() -> impl Strategy<Value = Vec2> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    #[test]
    fn intersection_is_symmetric(a in arb_point(), b in arb_point(), c in arb_point(), d in arb_point()) {
        let s1 = Segment::new(a, b);
        let s2 = Segment::new(c, d);
        let p = seg_intersect(&s1, &s2);
        let q = seg_intersect(&s2, &s1);
        prop_assert_eq!(p.is_some(), q.is_some());
        if let (Some(p), Some(q)) = (p, q) {
            prop_assert!(p.distance(q) < 1e-6);
            prop_assert!(point_seg_distance(p, &s1) < 1e-6);
            prop_assert!(point_seg_distance(p, &s2) < 1e-6);
        }
    }

    #[test]
    fn distances_are_symmetric_and_bounded(a in arb_point(), b in arb_point(), c in arb_point(), d in arb_point()) {
        let s1 = Segment::new(a, b);
        let s2 = Segment::new(c, d);
        let d12 = seg_seg_distance(&s1, &s2);
        prop_assert!((d12 - seg_seg_distance(&s2, &s1)).abs() < 1e-12);
        prop_assert!(d12 <= point_seg_distance(a, &s2) + 1e-12);
        prop_assert!(d12 >= 0.0);
    }

    #[test]
    fn swept_contact_time_is_a_contact(c0 in arb_point(), c1 in arb_point(), a in arb_point(), b in arb_point(), r in 0.1..1.5f64) {
        let seg = Segment::new(a, b);
        if let Some(t) = swept_circle_vs_segment(c0, c1, r, &seg) {
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert!(point_seg_distance(c0.lerp(c1, t), &seg) <= r + 1e-7);
        }
    }
}
