//! Points on the circle `R/Z`, represented by reals in `[0, 1)`.

use crate::real::Real;

/// Reduces `x` into `[0, 1)`.
pub fn wrap(x: &Real) -> Real {
    x.frac()
}

/// Counter-clockwise length of the arc from `a` to `b`, in `[0, 1)`.
pub fn arc_len(a: &Real, b: &Real) -> Real {
    (b - a).frac()
}

/// Distance on the circle.
pub fn dist(a: &Real, b: &Real) -> Real {
    let d = arc_len(a, b);
    let e = d.one_like() - &d;
    d.min(e)
}

/// True when `x` lies strictly inside the counter-clockwise arc `(a, b)`.
pub fn in_open_arc(x: &Real, a: &Real, b: &Real) -> bool {
    let l = arc_len(a, b);
    let t = arc_len(a, x);
    t.is_positive() && t < l
}

/// True when `x` lies in the closed arc `[a, b]`.
pub fn in_closed_arc(x: &Real, a: &Real, b: &Real) -> bool {
    let l = arc_len(a, b);
    arc_len(a, x) <= l
}

/// Lifts `x` to the representative in `[base, base + 1)`.
pub fn lift_above(x: &Real, base: &Real) -> Real {
    base + arc_len(base, x)
}
