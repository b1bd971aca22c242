//! Fixtures shared by the kernel benchmarks.

use breakcircle::numberth::{cf_expand_surd, ConvergentTable, QuadSurd};
use breakcircle::{CircleMap, MapSpec};

/// Conjugate of the golden rotation by the PL map with slopes 1/2 and 3/2.
pub const ORACLE_SPEC: &str = r#"{"type":"conjugated_rotation","alpha":"surd(5,1,2)",
    "h0":{"type":"pl","breaks":[{"x":"0","slope_right":"1/2"},{"x":"1/2","slope_right":"3/2"}]}}"#;

pub fn golden_table(depth: usize) -> ConvergentTable {
    cf_expand_surd(&QuadSurd::golden(), depth).expect("golden mean expands")
}

pub fn golden_rotation() -> CircleMap {
    CircleMap::rotation(&QuadSurd::golden().to_real())
}

/// PL map with four breaks and the golden rotation number.
pub fn oracle_map() -> CircleMap {
    MapSpec::from_json(ORACLE_SPEC).and_then(|s| s.build()).expect("fixture spec builds").map
}
