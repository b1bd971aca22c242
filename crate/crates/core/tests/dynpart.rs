mod common;

use breakcircle::circle;
use breakcircle::dynpart::*;
use breakcircle::numberth::circle_distance;
use breakcircle::real::{tolerance_for, Real};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn golden_depth_three_endpoints() {
    let t = golden_table();
    let f = golden_rotation();
    let p = build_partition(&f, &Real::zero(), 3, &t).unwrap();
    assert_eq!((p.q_prev, p.q_n), (2, 3));
    assert_eq!(p.len(), 5);
    for (k, x) in p.orbit.iter().enumerate() {
        let expect = (Real::from_i64(k as i64) * &t.alpha).frac();
        assert!(circle::dist(x, &expect) < tolerance_for(240));
    }
    assert!(p.covers_disjointly());
}

#[test]
fn rotation_lengths_are_rigid() {
    let t = golden_table();
    let f = golden_rotation();
    for n in 2..=9 {
        let p = build_partition(&f, &Real::zero(), n, &t).unwrap();
        let long = circle_distance(&t.alpha, t.q(n - 1));
        let short = circle_distance(&t.alpha, t.q(n));
        for (side, _, iv) in p.intervals() {
            let want = if side == Side::Long { &long } else { &short };
            assert!((p.length(iv) - want).abs() < tolerance_for(230), "n = {n}");
        }
    }
}

#[test]
fn tuned_map_depth_nine() {
    let t = golden_table();
    let p = build_partition(&tuned_two_piece(), &Real::zero(), 9, &t).unwrap();
    assert!(p.covers_disjointly());
    assert!(p.max_length() < Real::one());
    assert_eq!(p.len(), t.qn(9) + t.qn(8));
}

#[test]
fn phi_examples() {
    // q_{n-1} = 3, q_n = 5 is the golden pair at n = 4.
    let t = golden_table();
    assert_eq!((t.q(3), t.q(4)), (3, 5));
    assert_eq!(phi(&t, 4, 1), 3);
    assert_eq!(phi(&t, 4, 4), 1);
}

#[test]
fn base_point_is_long_zero() {
    let t = golden_table();
    for n in [3, 5, 7] {
        let p = build_partition(&tuned_two_piece(), &r("0.25"), n, &t).unwrap();
        let l = p.locate(&r("0.25"), &t);
        assert_eq!((l.i, l.side), (0, Side::Long));
    }
}

/// Scans every interval for the one whose half-open arc holds `x`.
fn brute_locate(p: &DynamicalPartition, x: &Real) -> (Side, usize) {
    let hits: Vec<(Side, usize)> = p
        .intervals()
        .filter(|&(_, _, iv)| {
            let (a, b) = p.coords(iv);
            circle::arc_len(&a, x) < circle::arc_len(&a, &b)
        })
        .map(|(s, i, _)| (s, i))
        .collect();
    assert_eq!(hits.len(), 1, "point in {} intervals", hits.len());
    hits[0]
}

#[test]
fn locator_matches_scan_at_depth_seven() {
    let t = golden_table();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for f in [golden_rotation(), tuned_two_piece()] {
        let p = build_partition(&f, &Real::zero(), 7, &t).unwrap();
        for _ in 0..300 {
            let x = Real::from_f64(rng.gen::<f64>());
            let l = p.locate(&x, &t);
            let (side, idx) = brute_locate(&p, &x);
            assert_eq!(l.side, side);
            // Short interval j pairs with i = j < q_{n-1}.
            assert_eq!(l.i, idx);
            if side == Side::Short {
                assert!(l.i < t.qn(6));
            }
            assert_eq!(l.phi, phi(&t, 7, l.i));
        }
    }
}

#[test]
fn overlap_index_sets_at_depth_three() {
    let t = golden_table();
    let mixed: Vec<usize> = (0..t.qn(4) + t.qn(3)).filter(|&k| overlap_base_long(&t, 3, k)).collect();
    assert_eq!(mixed, vec![2, 5, 7]);
    let rev: Vec<usize> = (0..(t.a(4) as usize + 2) * t.qn(3)).filter(|&k| overlap_long_base(&t, 3, k)).collect();
    assert_eq!(rev, vec![3, 6, 8]);
    assert!(!overlap_base_long(&t, 3, 0));
    assert!(!overlap_long_base(&t, 3, 1));
}

#[test]
fn overlap_predicates_match_geometry() {
    let t = golden_table();
    for f in [golden_rotation(), tuned_two_piece()] {
        for n in [3, 5, 7, 9] {
            let mixed: Vec<usize> = (0..t.qn(n + 1) + t.qn(n)).filter(|&k| overlap_base_long(&t, n, k)).collect();
            assert_eq!(mixed, overlap_base_long_brute(&f, &Real::zero(), n, &t), "mixed n = {n}");
            let upper = (t.a(n + 1) as usize + 2) * t.qn(n);
            let rev: Vec<usize> = (0..upper).filter(|&k| overlap_long_base(&t, n, k)).collect();
            assert_eq!(rev, overlap_long_base_brute(&f, &Real::zero(), n, &t), "reverse n = {n}");
        }
    }
}

#[test]
fn refinement_and_dichotomy() {
    let t = golden_table();
    for f in [golden_rotation(), tuned_two_piece()] {
        for n in [3, 5, 7, 9] {
            assert!(verify_refinement(&f, &Real::zero(), n, &t).unwrap());
            assert!(verify_pairing(&f, &r("0.25"), n, &t));
        }
    }
}

#[test]
fn rotation_decay_bound() {
    let t = golden_table();
    let f = golden_rotation();
    // From n = 2 on, |q_{n-1} alpha - p_{n-1}| is the distance to the nearest integer.
    for n in 2..=15 {
        let p = build_partition(&f, &Real::zero(), n, &t).unwrap();
        let max = p.max_length();
        assert!((max.clone() - circle_distance(&t.alpha, t.q(n - 1))).abs() < tolerance_for(230));
        assert!(max.to_f64() < 2.0 * 2f64.powf(-(n as f64) / 2.0), "n = {n}");
    }
}

#[test]
fn tuned_map_decay_slope() {
    let t = golden_table();
    let d = decay_profile(&tuned_two_piece(), &Real::zero(), 5..=15, &t).unwrap();
    assert!((d.log_lambda - (1.0f64 + 1.0 / 9.0).powf(-0.5).ln()).abs() < 1e-12);
    assert!(d.slope <= d.log_lambda + 0.05, "slope {} vs {}", d.slope, d.log_lambda);
}

#[test]
fn even_depth_refusal() {
    let t = golden_table();
    let opts = PartitionOptions { allow_even: false };
    let e = build_partition_with(&golden_rotation(), &Real::zero(), 4, &t, opts).unwrap_err();
    assert!(matches!(e, PartitionError::EvenDepthWithoutReversal(4)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_is_bijective(n in 2usize..20) {
        let t = golden_table();
        let mut seen = vec![false; t.qn(n)];
        for i in 0..t.qn(n) {
            let j = phi(&t, n, i);
            prop_assert!(!seen[j]);
            prop_assert_eq!(phi_inv(&t, n, j), i);
            seen[j] = true;
        }
    }

    #[test]
    fn deeper_partition_nests(n in 2usize..9, x0 in 0.0f64..1.0, tuned in any::<bool>()) {
        let t = golden_table();
        let f = if tuned { tuned_two_piece() } else { golden_rotation() };
        let x0 = Real::from_f64(x0);
        let coarse = build_partition(&f, &x0, n, &t).unwrap();
        let fine = build_partition(&f, &x0, n + 1, &t).unwrap();
        prop_assert!(coarse.covers_disjointly() && fine.covers_disjointly());
        for (_, _, iv) in fine.intervals() {
            let (a, b) = fine.coords(iv);
            let inside = coarse.intervals().filter(|&(_, _, c)| {
                let (ca, cb) = coarse.coords(c);
                let span = circle::arc_len(&ca, &cb);
                circle::arc_len(&ca, &a) < span && circle::arc_len(&ca, &a) + circle::arc_len(&a, &b) <= span
            }).count();
            prop_assert_eq!(inside, 1);
        }
    }
}
