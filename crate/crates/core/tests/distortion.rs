mod common;

use breakcircle::circle;
use breakcircle::circlemaps::{compose, CircleMap, MapSpec};
use breakcircle::conjugacy::build_conjugacy;
use breakcircle::distortion::*;
use breakcircle::dynpart;
use breakcircle::real::{tolerance_for, Real};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pl(json: &str) -> CircleMap {
    MapSpec::from_json(json).unwrap().build().unwrap().map
}

fn oracle_pair() -> (CircleMap, CircleMap, CircleMap) {
    let b = MapSpec::from_json(ORACLE_SPEC).unwrap().build().unwrap();
    let g = CircleMap::rotation(&b.rotation.unwrap().to_real());
    (b.map, g, b.oracle.unwrap())
}

fn setup(c: &str, c1: &str) -> TraceSetup {
    TraceSetup {
        x0: r("0.25"),
        c: r(c),
        c1: Some(r(c1)),
        delta: r("0.1"),
        beta: 0.01,
        gamma: 0.04,
        window: vec![9, 11, 13],
        class_window: (5..=17).step_by(2).collect(),
        max_iter: 233,
        cfg: CellConfig::default(),
    }
}

fn random_triple(rng: &mut ChaCha8Rng) -> Triple {
    loop {
        let mut u: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
        u.sort_by(f64::total_cmp);
        if let Ok(t) = Triple::new(Real::from_f64(u[0]), Real::from_f64(u[1]), Real::from_f64(u[2])) {
            return t;
        }
    }
}

#[test]
fn ratio_on_the_line() {
    let v = ratio_line(&[r("0"), r("1/3"), r("1")]);
    assert!((v - r("1/2")).abs() < tolerance_for(250));
}

#[test]
fn rotations_have_unit_distortion() {
    let f = golden_rotation();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let t = random_triple(&mut rng);
        assert!((dr(&f, &t) - 1).abs() < tolerance_for(240));
    }
}

#[test]
fn dr_is_multiplicative_under_composition() {
    let f = pl(r#"{"type":"pl","breaks":[{"x":"0","slope_right":"1/2"},{"x":"1/3","slope_right":"2"},{"x":"2/3","slope_right":"1/2"}],"shift":"1/7"}"#);
    let g = pl(r#"{"type":"pl","breaks":[{"x":"1/10","slope_right":"3/2"},{"x":"3/5","slope_right":"1/2"}],"shift":"2/9"}"#);
    let gf = compose(&g, &f);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eps = r("1e-25");
    for _ in 0..100 {
        let t = random_triple(&mut rng);
        let ft = Triple::new(f.apply(&t.z[0]), f.apply(&t.z[1]), f.apply(&t.z[2])).unwrap();
        let lhs = dr(&gf, &t);
        let rhs = dr(&g, &ft) * dr(&f, &t);
        assert!((lhs - rhs).abs() < eps);
    }
}

#[test]
fn finzi_examples() {
    let t = golden_table();
    let rot = verify_finzi(&golden_rotation(), &t, 9, 200, 3);
    assert_eq!(rot.worst, 0.0);
    assert_eq!(rot.bound, 0.0);

    let f = tuned_two_piece();
    assert!((f.log_variation() - 2.0 * 3f64.ln()).abs() < 1e-12);
    let rep = verify_finzi(&f, &t, 9, 1000, 11);
    assert!(rep.holds);
    assert!(rep.worst <= 2.0 * 3f64.ln() + 1e-9);
    // k = 0: the empty product.
    assert_eq!(log_df_iter(&f, &r("0.3"), 0), 0.0);
}

#[test]
fn denjoy_examples() {
    let t = golden_table();
    let rot = verify_denjoy(&golden_rotation(), &t, 11, 100, 5);
    assert!(rot.levels.iter().all(|l| l.min == 1.0 && l.max == 1.0));

    let rep = verify_denjoy(&tuned_two_piece(), &t, 11, 1000, 5);
    assert_eq!(rep.levels.len(), 11);
    for l in &rep.levels {
        assert!(l.min >= 1.0 / 9.0 - 1e-9 && l.max <= 9.0 + 1e-9, "n = {}: [{}, {}]", l.n, l.min, l.max);
    }
    assert!(rep.holds);

    let cmp = verify_comparability(&tuned_two_piece(), &t, 7, 200, 9);
    assert!(cmp.holds);
    assert!(cmp.worst <= 4.0 * 3f64.ln() + 1e-9);
}

#[test]
fn rotation_cells() {
    let t = golden_table();
    let f = golden_rotation();
    let cfg = CellConfig::default();
    for n in [11, 13, 15] {
        let cell = build_primary_cell(&f, &t, &r("0.2"), &r("0.7"), &r("0.1"), n, &cfg).unwrap();
        // For a rotation the cell is centred: y3 - y2 = y2 - y1.
        let a = circle::arc_len(&cell.points.y1, &cell.points.y2);
        let b = circle::arc_len(&cell.points.y2, &cell.points.y3);
        assert!((a - b).abs() < tolerance_for(200));
    }
    let e = build_primary_cell(&f, &t, &r("0.2"), &r("0.7"), &r("1e-6"), 1, &cfg).unwrap_err();
    assert!(matches!(e, DistortionError::DepthTooShallow { property: "c-0", .. }));
}

/// Re-checks the cell properties from the raw orbit data.
fn recheck_cell(f: &CircleMap, cell: &PrimaryCell, cfg: &CellConfig) {
    let p = &cell.points;
    let qp = cell.q_prev as i64;
    let qn = cell.q_n as i64;
    assert!(circle::dist(&f.iterate(&cell.c, -(p.i_c as i64)), &p.y2) < tolerance_for(200));
    assert!(circle::dist(&f.iterate(&p.y2, -qp), &p.y1) < tolerance_for(200));
    assert!(circle::dist(&f.iterate(&p.y2, qp), &p.y3) < tolerance_for(200));
    // c-0
    for y in [&p.y1, &p.y2, &p.y3] {
        assert!(circle::dist(y, &cell.x0) < cell.delta);
        assert!(circle::dist(&f.iterate(y, qn), &cell.x0) < cell.delta);
    }
    // c-2, c-3
    let v = f.log_variation();
    let lam = (1.0 + (-v).exp()).powf(-0.5);
    let mut total = 0.0;
    for i in 0..qn {
        let l = circle::arc_len(&f.iterate(&p.y1, i), &f.iterate(&p.y3, i)).to_f64();
        assert!(l <= cfg.k_const * lam.powi(p.n as i32));
        total += l;
    }
    assert!(total <= 2.0);
    // c-4
    let rr = (3.0 * v).exp() + v.exp() + 1.0;
    for k in [0, qn] {
        let z: Vec<Real> = [&p.y1, &p.y2, &p.y3].iter().map(|y| f.iterate(y, k)).collect();
        let m12 = circle::arc_len(&z[0], &z[1]).to_f64();
        let m23 = circle::arc_len(&z[1], &z[2]).to_f64();
        assert!(m23 / m12 >= 1.0 / rr && m23 / m12 <= rr);
        assert!(z.iter().all(|zz| circle::dist(zz, &cell.x0).to_f64() <= rr * m12));
    }
    // c-5: c stays out of every iterate but its own; that one holds no other break.
    let margin = r("1e-30");
    for i in 0..cell.q_n {
        let a = f.iterate(&p.y1, i as i64);
        let e = f.iterate(&p.y3, i as i64);
        let inside = |x: &Real| {
            let s = circle::arc_len(&a, x);
            s > margin && s < circle::arc_len(&a, &e) - &margin
        };
        if i == p.i_c {
            for b in f.breaks().iter().filter(|b| circle::dist(&b.x, &cell.c) > margin) {
                assert!(!inside(&b.x), "break {} inside iterate {i}", b.x.to_f64());
            }
        } else {
            assert!(!inside(&cell.c), "c inside iterate {i}");
        }
    }
}

#[test]
fn two_break_first_admissible_depth() {
    let t = golden_table();
    let f = tuned_two_piece();
    let cfg = CellConfig::default();
    let c = r("0");
    let (l, rr) = f.derivs(&c);
    assert!(((l / rr).to_f64() - 3.0).abs() < 1e-12);
    let (n, cell) = first_admissible_depth(&f, &t, &r("0.25"), &c, &r("0.1"), 1..=21, &cfg).unwrap();
    assert_eq!(n, 7);
    recheck_cell(&f, &cell, &cfg);
    for m in [9, 11, 13] {
        recheck_cell(&f, &build_primary_cell(&f, &t, &r("0.25"), &c, &r("0.1"), m, &cfg).unwrap(), &cfg);
    }
}

/// Locates `d` in the partition of `base` under the rotation by `alpha`:
/// returns `(i, f^{-i} d, short)`.
fn rot_locate(base: f64, d: f64, alpha: f64, qp: usize, qn: usize) -> (usize, f64, bool) {
    let fr = |x: f64| x.rem_euclid(1.0);
    let l_long = fr(qp as f64 * alpha - 0.0).min(fr(-(qp as f64) * alpha));
    let l_short = fr(qn as f64 * alpha).min(fr(-(qn as f64) * alpha));
    // Odd depth: the long base runs counter-clockwise from `base`, the short one ends at it.
    let mut hits = Vec::new();
    for i in 0..qn {
        let p = fr(d - i as f64 * alpha);
        if fr(p - base) < l_long {
            hits.push((i, p, false));
        }
    }
    for j in 0..qp {
        let p = fr(d - j as f64 * alpha);
        if fr(base - p) <= l_short && fr(base - p) > 0.0 {
            hits.push((j, p, true));
        }
    }
    assert_eq!(hits.len(), 1, "three-distance cover");
    hits[0]
}

#[test]
fn rotation_t_levels_match_closed_form() {
    let t = golden_table();
    let f = golden_rotation();
    let alpha = t.alpha.to_f64();
    let (x0, c) = (0.2, 0.7);
    for d in [0.05, 0.33, 0.61, 0.9] {
        for n in (5..=13).step_by(2) {
            let (qp, qn) = (t.qn(n - 1), t.qn(n));
            let (i_c, y2, _) = rot_locate(x0, c, alpha, qp, qn);
            assert_eq!(y2, (c - i_c as f64 * alpha).rem_euclid(1.0));
            let y1 = (y2 - qp as f64 * alpha).rem_euclid(1.0);
            let (i, back, _) = rot_locate(y1, d, alpha, qp, qn);
            let low = i < qp;
            let num = (y2 - back).rem_euclid(1.0);
            let den = if low { (y2 - (y1 + qn as f64 * alpha)).rem_euclid(1.0) } else { (y2 - y1).rem_euclid(1.0) };
            let lv = t_level(&f, &t, &r("0.2"), &r("0.7"), &Real::from_f64(d), n).unwrap();
            assert_eq!(lv.i, i, "d = {d}, n = {n}");
            assert_eq!(lv.low_regime, low);
            assert!((lv.t - num / den).abs() < 1e-9, "d = {d}, n = {n}: {} vs {}", lv.t, num / den);
            assert!(lv.t >= 0.0 && lv.t <= 1.0);
        }
    }
}

#[test]
fn rotation_marked_point_tags() {
    let t = golden_table();
    let f = golden_rotation();
    let cfg = CellConfig::default();
    let window: Vec<usize> = (5..=17).step_by(2).collect();
    let mut checked = 0;
    for d in [0.05, 0.33, 0.61, 0.9] {
        let levels: Vec<TLevel> = window.iter().map(|&n| t_level(&f, &t, &r("0.2"), &r("0.7"), &Real::from_f64(d), n).unwrap()).collect();
        let ts: Vec<f64> = levels.iter().map(|l| l.t).collect();
        let mid = ts.iter().filter(|&&x| (0.15..=0.85).contains(&x)).count();
        let tail = &ts[ts.len() / 2..];
        let expected = if tail.iter().all(|&x| x < 0.05) {
            Some(QTag::Q2)
        } else if tail.iter().all(|&x| x > 0.95) {
            Some(QTag::Q3)
        } else if mid as f64 >= 0.6 * ts.len() as f64 {
            let low = levels.iter().filter(|l| (0.15..=0.85).contains(&l.t) && l.low_regime).count();
            Some(if 2 * low >= mid { QTag::Q11 } else { QTag::Q12 })
        } else {
            None
        };
        let got = classify_levels(&Real::from_f64(d), levels, &cfg).ok().map(|c| c.tag);
        if expected.is_some() {
            assert_eq!(got, expected, "d = {d}, t = {ts:?}");
            checked += 1;
        }
    }
    assert!(checked >= 2, "only {checked} marked points met a criterion");
}

#[test]
fn classification_excludes_orbit_of_c() {
    let t = golden_table();
    let (f, _, _) = oracle_pair();
    let window: Vec<usize> = (5..=17).step_by(2).collect();
    let c = r("0");
    let cl = classify_breaks_lenient(&f, &t, &r("0.25"), &c, &window, 233, &CellConfig::default()).unwrap();
    assert_eq!(cl.same_orbit.len(), 1);
    assert!(cl.classes.iter().all(|k| circle::dist(&k.d, &cl.same_orbit[0]) > r("1e-20")));
    let bad = classify_breaks(&f, &t, &r("0.25"), &c, &[5, 7, 9], 233, &CellConfig::default()).unwrap_err();
    assert!(matches!(bad, DistortionError::BadParameters(_)));
}

#[test]
fn secondary_cell_on_rotation() {
    let t = golden_table();
    let f = golden_rotation();
    let cfg = CellConfig::default();
    let cell = build_primary_cell(&f, &t, &r("0.2"), &r("0.7"), &r("0.1"), 11, &cfg).unwrap();
    let (beta, gamma) = (0.02, 0.04);
    let sec = build_secondary_cell(&f, &cell, beta, gamma, 0.15, &[r("0.7")], &cfg).unwrap();
    let l = cell.scale();
    for (a, b) in [(&sec.z.z[0], &sec.z.z[1]), (&sec.z.z[1], &sec.z.z[2])] {
        let q = (circle::arc_len(a, b) / &l).to_f64();
        assert!(q >= beta && q <= gamma);
    }
    let e = build_secondary_cell(&f, &cell, 0.02, 0.2, 0.15, &[], &cfg).unwrap_err();
    assert!(matches!(e, DistortionError::BadParameters(_)));
    let e = build_secondary_cell(&f, &cell, 0.05, 0.04, 0.15, &[], &cfg).unwrap_err();
    assert!(matches!(e, DistortionError::BadParameters(_)));
}

#[test]
fn secondary_cell_avoids_breaks() {
    let t = golden_table();
    let (f, _, _) = oracle_pair();
    let cfg = CellConfig::default();
    let s = setup("0", "0.5");
    let cl = classify_breaks_lenient(&f, &t, &s.x0, &s.c, &s.class_window, s.max_iter, &cfg).unwrap();
    let e = vec![s.c.clone()];
    for n in [9, 11, 13] {
        let cell = build_primary_cell(&f, &t, &s.x0, &s.c, &s.delta, n, &cfg).unwrap();
        let sec = build_secondary_cell(&f, &cell, s.beta, s.gamma, cl.gamma0_or(&cfg), &e, &cfg).unwrap();
        let tol = r("1e-30");
        for b in f.breaks() {
            for i in 0..cell.q_n {
                let x = f.iterate(&b.x, -(i as i64));
                if circle::in_closed_arc(&x, &sec.z.z[0], &sec.z.z[2]) {
                    assert!(sec.k.iter().any(|(d, k)| *k == i && circle::dist(d, &b.x) < tol), "n = {n}, i = {i}");
                }
            }
        }
        // Dr envelope over a valid cell.
        let v = f.log_variation();
        let d = dr_iter(&f, &sec.z, cell.q_n as u64).to_f64();
        let lo = (-2.0 * v).exp() * s.beta / s.gamma;
        let hi = (2.0 * v).exp() * s.gamma / s.beta;
        assert!(d >= lo && d <= hi);
    }
}

#[test]
fn trace_of_identity_pair_is_one() {
    let t = golden_table();
    let (f, _, _) = oracle_pair();
    let id = CircleMap::identity();
    let tr = trace_distortion(&f, &f, &id, &t, &setup("0", "0.5")).unwrap();
    assert_eq!(tr.records.len(), 3);
    for rec in &tr.records {
        assert_eq!(rec.d_n, 1.0);
        assert_eq!(rec.dr_f, rec.dr_g);
    }
    assert_eq!(tr.pi, 1.0);
}

#[test]
fn trace_of_oracle_pair() {
    let t = golden_table();
    let (f, g, h) = oracle_pair();
    let s = setup("0", "0.5");
    let tr = trace_distortion(&f, &g, &h, &t, &s).unwrap();
    let bound = 2.0 * s.beta / (1.0 - tr.gamma0) + 0.02;
    for rec in &tr.records {
        assert!((rec.d_n - 1.0).abs() <= bound, "n = {}: {}", rec.n, rec.d_n);
        assert!(rec.within_envelope);
        assert!(rec.h1_unique);
    }
    assert!((tr.pi - 1.0).abs() < 1e-12);
}

#[test]
fn trace_of_non_equivalent_pair() {
    let t = golden_table();
    let f = tuned_two_piece();
    let g = golden_rotation();
    let h = build_conjugacy(&f, &g, &Real::zero(), &Real::zero(), t.qn(18)).unwrap();
    let tr = trace_distortion(&f, &g, &h, &t, &setup("0", "0.5")).unwrap();
    // Jump data alone: E = {0}, sigma_f(0) = 3 and g has no breaks.
    let (l, rr) = f.derivs(&Real::zero());
    let pi = 1.0 / (l / rr).to_f64();
    assert!((tr.pi - pi).abs() < 1e-12);
    assert!(tr.pi.ln().abs() >= 0.5);
    let last = tr.records.last().unwrap();
    assert!((last.d_n - tr.pi).abs() < 1e-3);
}

#[test]
fn shallow_partition_levels_report_discards() {
    let t = golden_table();
    let f = tuned_two_piece();
    let window: Vec<usize> = (7..=21).step_by(2).collect();
    let cl = classify_breaks(&f, &t, &r("0.25"), &r("0"), &window, 233, &CellConfig::default()).unwrap();
    assert_eq!(cl.classes.len(), 1);
    let k = &cl.classes[0];
    assert!(matches!(k.tag, QTag::Q11 | QTag::Q12));
    assert_eq!(k.subset.len() + k.discarded.len(), window.len());
    assert!(cl.gamma0.unwrap() >= 0.15);
}

#[test]
fn partition_scale_matches_cell() {
    // m([y1, y2]) is one interval of the partition at level n - 1.
    let t = golden_table();
    let f = tuned_two_piece();
    let cell = build_primary_cell(&f, &t, &r("0.25"), &r("0"), &r("0.1"), 9, &CellConfig::default()).unwrap();
    let part = dynpart::build_partition(&f, &cell.points.y1, 9, &t).unwrap();
    let l = part.length(dynpart::delta(&t, 8, 0));
    assert!((l - cell.scale()).abs() < tolerance_for(200));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dr_rotation_invariant(a in 0.0f64..1.0, b in 0.0f64..1.0, u in 0.001f64..0.33, v in 0.001f64..0.33, w in 0.0f64..1.0) {
        let f = pl(r#"{"type":"pl","breaks":[{"x":"0","slope_right":"1/2"},{"x":"1/2","slope_right":"3/2"}],"shift":"0.3"}"#);
        let ra = CircleMap::rotation(&Real::from_f64(a));
        let rb = CircleMap::rotation(&Real::from_f64(b));
        let t = Triple::new(Real::from_f64(w), Real::from_f64((w + u) % 1.0), Real::from_f64((w + u + v) % 1.0)).unwrap();
        let g = compose(&rb, &compose(&f, &ra));
        let at = Triple::new(ra.apply(&t.z[0]), ra.apply(&t.z[1]), ra.apply(&t.z[2])).unwrap();
        prop_assert!((dr(&g, &t) - dr(&f, &at)).abs() < tolerance_for(220));
    }

    #[test]
    fn ratio_is_positive_and_lift_free(w in 0.0f64..1.0, u in 0.001f64..0.49, v in 0.001f64..0.49) {
        let t = Triple::new(Real::from_f64(w), Real::from_f64((w + u) % 1.0), Real::from_f64((w + u + v) % 1.0)).unwrap();
        let x = ratio(&t).to_f64();
        prop_assert!(x > 0.0);
        prop_assert!((x - u / v).abs() < 1e-9 * (1.0 + u / v));
    }
}
