//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::sync::OnceLock;

use breakcircle::circlemaps::{conjugate, tune_to_rotation, CircleMap, MapSpec, PiecewiseMap, ShiftFamily};
use breakcircle::circlemaps::two_piece_pl;
use breakcircle::numberth::{cf_expand_surd, ConvergentTable, QuadSurd};
use breakcircle::orbitalg::{auto_delta, make_adjuster};
use breakcircle::real::Real;

pub const TUNE_DEPTH: usize = 22;

/// `h0` of the oracle pair: slopes 1/2 on `[0, 1/2)` and 3/2 on `[1/2, 1)`.
pub const ORACLE_SPEC: &str = r#"{"type":"conjugated_rotation","alpha":"surd(5,1,2)",
    "h0":{"type":"pl","breaks":[{"x":"0","slope_right":"1/2"},{"x":"1/2","slope_right":"3/2"}]}}"#;

pub fn golden_table() -> ConvergentTable {
    cf_expand_surd(&QuadSurd::golden(), 40).unwrap()
}

pub fn golden_rotation() -> CircleMap {
    CircleMap::rotation(&QuadSurd::golden().to_real())
}

fn tuned(base: PiecewiseMap) -> CircleMap {
    let target = golden_table();
    tune_to_rotation(&ShiftFamily::new(base), &target, TUNE_DEPTH, (Real::zero(), Real::one())).unwrap().map
}

/// The two-piece map (slopes 1/2, 3/2) shifted so its rotation number
/// shares the first `TUNE_DEPTH` quotients with the golden mean.
pub fn tuned_two_piece() -> CircleMap {
    static MAP: OnceLock<CircleMap> = OnceLock::new();
    MAP.get_or_init(|| tuned(two_piece_pl(&Real::zero()).as_piecewise().unwrap().clone())).clone()
}

/// Slopes 2/3 and 4/3: jumps 2 at 0 and 1/2 at 1/2, tuned like the above.
pub fn tuned_two_piece_2() -> CircleMap {
    static MAP: OnceLock<CircleMap> = OnceLock::new();
    MAP.get_or_init(|| {
        let s = r#"{"type":"pl","breaks":[{"x":"0","slope_right":"2/3"},{"x":"1/2","slope_right":"4/3"}]}"#;
        let m = MapSpec::from_json(s).unwrap().build().unwrap().map;
        tuned(m.as_piecewise().unwrap().clone())
    })
    .clone()
}

/// The tuned two-piece map conjugated so that the orbit of 0 carries three
/// breaks (at 0, f(0), f^2(0)) with jumps 6, 5/2, 1/5 and product 3.
pub fn three_break_connection() -> CircleMap {
    static MAP: OnceLock<CircleMap> = OnceLock::new();
    MAP.get_or_init(|| {
        let f = tuned_two_piece();
        let c1 = f.apply(&Real::zero());
        let k1 = make_adjuster(&c1, &auto_delta(&f, &c1), &r("2")).unwrap();
        let f1 = conjugate(&k1.map, &f);
        let c2 = f1.apply(&c1);
        let k2 = make_adjuster(&c2, &auto_delta(&f1, &c2), &r("5")).unwrap();
        conjugate(&k2.map, &f1)
    })
    .clone()
}

pub fn r(s: &str) -> Real {
    Real::parse(s).unwrap()
}
