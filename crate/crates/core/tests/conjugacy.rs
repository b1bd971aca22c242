mod common;

use breakcircle::circle;
use breakcircle::circlemaps::{conjugate, CircleMap, MapSpec};
use breakcircle::conjugacy::*;
use breakcircle::numberth::{cf_expand_surd, QuadSurd};
use breakcircle::real::{tolerance_for, Real};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Oracle {
    f: CircleMap,
    g: CircleMap,
    h: CircleMap,
    alpha: Real,
}

fn oracle() -> Oracle {
    let b = MapSpec::from_json(ORACLE_SPEC).unwrap().build().unwrap();
    let alpha = b.rotation.unwrap().to_real();
    Oracle { g: CircleMap::rotation(&alpha), f: b.map, h: b.oracle.unwrap(), alpha }
}

#[test]
fn rotation_to_itself_is_identity() {
    let f = golden_rotation();
    let t = build_conjugacy(&f, &f, &Real::zero(), &Real::zero(), 144).unwrap();
    for (x, y) in t.xs.iter().zip(&t.ys) {
        assert_eq!(x, y);
    }
    for i in 0..100 {
        let x = Real::from_f64(i as f64 / 100.0 + 0.003);
        assert!(circle::dist(&t.eval(&x), &x) < tolerance_for(200));
    }
    assert!(t.equivariance_residual() < tolerance_for(200));
}

#[test]
fn oracle_table_matches_closed_form() {
    let o = oracle();
    let n = golden_table().qn(13);
    let x0 = o.h.apply_inv(&Real::zero());
    let t = build_conjugacy(&o.f, &o.g, &x0, &Real::zero(), n).unwrap().with_oracle(o.h.clone());
    assert!(t.oracle_sample_error().unwrap() < tolerance_for(200));
    let gap = t.max_gap_g();
    // Interpolation between samples: gap times (1 + largest slope of h0).
    let bound = &gap * Real::parse("5/2").unwrap();
    assert!(t.oracle_error(1000).unwrap() <= bound);
    assert!(t.self_consistency(1000) <= &gap * Real::from_i64(2));
    assert!(t.equivariance_residual() < Real::parse("1e-25").unwrap());
}

#[test]
fn different_quotients_mismatch() {
    let f = tuned_two_piece();
    let g = CircleMap::rotation(&QuadSurd::new(8, 2, 2).to_real());
    let e = build_conjugacy(&f, &g, &Real::zero(), &Real::zero(), 89).unwrap_err();
    assert!(matches!(e, ConjugacyError::OrderMismatch { .. }));
    let e = build_conjugacy(&f, &f, &Real::zero(), &Real::zero(), 1).unwrap_err();
    assert!(matches!(e, ConjugacyError::TooFewSamples { .. }));
}

#[test]
fn table_lift_is_a_degree_one_homeomorphism() {
    let t = build_conjugacy(&tuned_two_piece(), &golden_rotation(), &Real::zero(), &Real::zero(), 233).unwrap();
    let mut prev = t.lift(&Real::zero());
    for i in 1..=2000 {
        let x = Real::from_f64(i as f64 / 1000.0 - 0.0005);
        let y = t.lift(&x);
        assert!(y > prev);
        prev = y;
        assert!((t.lift(&(&x + 1)) - t.lift(&x) - 1).abs() < tolerance_for(200));
    }
}

#[test]
fn rotation_measure_is_lebesgue() {
    let t = golden_table();
    let m = InvariantMeasure::new(&golden_rotation(), &t.alpha, t.qn(12), 8).unwrap();
    for (a, b) in [("0.1", "0.35"), ("0.9", "0.2"), ("0", "0.5")] {
        let got = m.measure(&r(a), &r(b));
        let want = circle::arc_len(&r(a), &r(b));
        assert!((got - want).abs() < tolerance_for(200));
    }
}

#[test]
fn oracle_measure_matches_h0() {
    let o = oracle();
    let n = golden_table().qn(15);
    assert!(o.h.apply(&Real::zero()).is_zero());
    let m = InvariantMeasure::new(&o.f, &o.alpha, n, 8).unwrap();
    let tol = m.table.max_gap_g() * Real::parse("5/2").unwrap();
    for (a, b) in [("0.1", "0.35"), ("0.4", "0.6"), ("0.75", "0.2")] {
        let (a, b) = (r(a), r(b));
        let want = circle::arc_len(&o.h.apply(&a), &o.h.apply(&b));
        assert!((m.measure(&a, &b) - want).abs() <= tol);
    }
    let single = invariant_measure(&o.f, &o.alpha, &r("0"), &r("0.5"), n).unwrap();
    assert!((single - r("0.25")).abs() <= tol);
}

#[test]
fn measure_is_invariant_on_random_intervals() {
    let t = golden_table();
    let n = t.qn(15);
    let m = InvariantMeasure::new(&tuned_two_piece(), &t.alpha, n, default_averaging(n)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let limit = Real::parse("1e-6").unwrap();
    for _ in 0..100 {
        let a = Real::from_f64(rng.gen());
        let b = Real::from_f64(rng.gen());
        let d = m.invariance_defect(&a, &b).abs();
        assert!(d <= limit, "defect {} on [{}, {}]", d.to_f64(), a.to_f64(), b.to_f64());
    }
}

#[test]
fn measure_is_additive_and_normalised() {
    let t = golden_table();
    let m = InvariantMeasure::new(&tuned_two_piece(), &t.alpha, t.qn(12), 16).unwrap();
    let eps = Real::parse("1e-9").unwrap();
    let (a, b, c) = (r("0.1"), r("0.45"), r("0.8"));
    let sum = m.measure(&a, &b) + m.measure(&b, &c);
    assert!((sum - m.measure(&a, &c)).abs() < eps);
    let whole = m.measure(&c, &a) + m.measure(&a, &c);
    assert!((whole - 1).abs() < eps);
    assert!((m.measure_lift(&a, &(&a + 1)) - 1).abs() < eps);
}

#[test]
fn identity_profile_is_diagonal() {
    let f = golden_rotation();
    let t = build_conjugacy(&f, &f, &Real::zero(), &Real::zero(), 610).unwrap();
    let p = singularity_profile(&t, 50).unwrap();
    for k in 1..=50 {
        let q = k as f64 / 50.0;
        assert!((p.s(q) - q).abs() < 1e-12, "p = {q}");
    }
    assert!((p.total_mass() - 1.0).abs() < 1e-9);
    assert!(singularity_profile(&t, 62).is_err());
}

#[test]
fn pl_oracle_profile_is_bounded_below() {
    let o = oracle();
    let x0 = o.h.apply_inv(&Real::zero());
    let t = build_conjugacy(&o.f, &o.g, &x0, &Real::zero(), golden_table().qn(16)).unwrap();
    for grid in [10, 40, 100, 159] {
        let p = singularity_profile(&t, grid).unwrap();
        assert!(p.s(0.9) >= 0.9 / 1.5, "grid {grid}: {}", p.s(0.9));
        assert!((p.total_mass() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn non_d_profile_decreases_with_depth() {
    let t = golden_table();
    let s: Vec<f64> = [10, 14, 18].iter().map(|&n| profile_at_depth(&tuned_two_piece(), &t, n, 0.9).unwrap().s).collect();
    assert!(s[1] < s[0] && s[2] < s[1], "{s:?}");
}

#[test]
fn d_property_verdicts() {
    let t = golden_table();
    let cfg = VerdictConfig::default();
    let o = oracle();
    let v = d_property_verdict(&o.f, &t, &VERDICT_DEPTHS, &cfg).unwrap();
    assert!(v.d_property);
    assert_eq!(v.prediction, MeasurePrediction::Equivalent);
    assert_eq!(v.trend, ProfileTrend::Stable);
    assert!(v.agreement && v.hypotheses_met);

    let v = d_property_verdict(&tuned_two_piece(), &t, &VERDICT_DEPTHS, &cfg).unwrap();
    assert!(!v.d_property);
    assert_eq!(v.prediction, MeasurePrediction::Singular);
    assert_eq!(v.trend, ProfileTrend::Concentrating);
    assert!(v.agreement);
    assert_eq!(v.scores.iter().map(|s| s.samples).collect::<Vec<_>>(), vec![610, 4181, 28657]);
}

#[test]
fn unbounded_prefix_is_flagged() {
    // sqrt(37) - 6 = [0; 12, 12, ...]
    let table = cf_expand_surd(&QuadSurd::new(37, 6, 1), 10).unwrap();
    assert!(table.quotients.iter().all(|&a| a == 12));
    let f = CircleMap::rotation(&table.alpha);
    let v = d_property_verdict(&f, &table, &[2, 3], &VerdictConfig::default()).unwrap();
    assert!(!v.hypotheses_met);
    assert_eq!(v.bounded.max_quotient, 12);
    // The verdict is still emitted.
    assert_eq!(v.prediction, MeasurePrediction::Equivalent);
}

#[test]
fn conjugate_pair_profile_is_uniform() {
    let f = tuned_two_piece();
    let beta = r("0.3");
    let rot = CircleMap::rotation(&beta);
    let g = conjugate(&rot, &f);
    let t = build_conjugacy(&f, &g, &Real::zero(), &beta, 987).unwrap();
    for i in 0..20 {
        let x = Real::from_f64(i as f64 / 20.0 + 0.01);
        assert!(circle::dist(&t.eval(&x), &rot.apply(&x)) < tolerance_for(180));
    }
    let p = singularity_profile(&t, 98).unwrap();
    assert!((p.s(0.9) - 89.0 / 98.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn profile_monotone_and_normalised(grid in 1usize..60, p1 in 0.0f64..1.0, p2 in 0.0f64..1.0) {
        let t = build_conjugacy(&tuned_two_piece(), &golden_rotation(), &Real::zero(), &Real::zero(), 610).unwrap();
        let prof = singularity_profile(&t, grid).unwrap();
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        prop_assert!(prof.s(lo) <= prof.s(hi));
        prop_assert!((prof.s(1.0) - 1.0).abs() < 1e-12);
        prop_assert!((prof.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!(prof.increments.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn samples_are_equivariant(k in 0usize..600) {
        let o = oracle();
        let t = build_conjugacy(&o.f, &o.g, &Real::zero(), &Real::zero(), 610).unwrap();
        let lhs = t.eval(&o.f.apply(&t.xs[k]));
        let rhs = o.g.apply(&t.eval(&t.xs[k]));
        prop_assert!(circle::dist(&lhs, &rhs) < tolerance_for(200));
    }
}
