//! Orbit algebra of break points.
//!
//! Breaks are grouped into maximal connections (the stretch of one orbit
//! between its first and last break), each connection carries the product
//! of its jumps, and a quadratic adjuster `K` moves a jump one step along
//! its orbit through the conjugation law
//! `sigma_{K f K^-1}(K x) = sigma_K(f x) sigma_f(x) / sigma_K(x)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle;
use crate::circlemaps::{compose, Break, CircleMap, MapError, Piece, PiecewiseMap};
use crate::real::{self, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrbitError {
    #[error("offsets {k1} and {k2} both match within tolerance; raise the precision")]
    AmbiguousMatch { k1: i64, k2: i64 },
    #[error("no admissible one-sided slopes for jump {0}")]
    InfeasibleSlopes(f64),
    #[error("adjuster support around {0} meets another break or break image")]
    SupportCollision(String),
    #[error("{0} is not a break point")]
    NotABreak(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Anything that sends circle points to circle points.
pub trait PointMap {
    fn eval(&self, x: &Real) -> Real;
}

impl PointMap for CircleMap {
    fn eval(&self, x: &Real) -> Real {
        self.apply(x)
    }
}

/// Default matching tolerance for orbit searches: `2^{-prec/2}`.
pub fn default_match_tol() -> Real {
    let p = real::precision();
    Real::pow2_prec(-(p as i64) / 2, p)
}

/// Smallest `|k| <= max_iter` with `f^k(c) = d` within `tol`; ties between
/// `k` and `-k`, or a second match anywhere in the window, are ambiguous.
pub fn same_orbit(f: &CircleMap, c: &Real, d: &Real, max_iter: usize, tol: &Real) -> Result<Option<i64>, OrbitError> {
    let mut fw = c.frac();
    let mut bw = c.frac();
    let mut found: Option<i64> = None;
    let mut check = |k: i64, x: &Real| -> Result<(), OrbitError> {
        if circle::dist(x, d) <= *tol {
            if let Some(k1) = found {
                return Err(OrbitError::AmbiguousMatch { k1, k2: k });
            }
            found = Some(k);
        }
        Ok(())
    };
    check(0, &fw)?;
    for k in 1..=max_iter as i64 {
        fw = f.apply(&fw);
        bw = f.apply_inv(&bw);
        check(k, &fw)?;
        check(-k, &bw)?;
    }
    Ok(found)
}

/// One maximal connection: breaks on a common orbit.
#[derive(Debug, Clone, Serialize)]
pub struct Connection {
    /// Smallest-location member; offsets are relative to it.
    pub representative: Real,
    /// `(-p, q)`: offsets of the first and last member.
    pub window: (i64, i64),
    /// `(offset, break)` sorted by offset.
    pub members: Vec<(i64, Break)>,
    pub product: Real,
    #[serde(serialize_with = "ser_ratio")]
    pub exact_product: Option<BigRational>,
    pub log_product: f64,
}

fn ser_ratio<S: serde::Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_some(&real::rational_to_string(r)),
        None => s.serialize_none(),
    }
}

impl Connection {
    /// First member along the orbit (offset `-p`).
    pub fn first(&self) -> &Break {
        &self.members[0].1
    }

    /// `|log pi| <= tol`, with `tol = 1e-12` for exact products and `1e-8` otherwise.
    pub fn is_trivial(&self) -> bool {
        match &self.exact_product {
            Some(r) => r.is_one(),
            None => self.log_product.abs() <= 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitReport {
    pub connections: Vec<Connection>,
    /// Indices into `connections` with nontrivial product.
    pub singular: Vec<usize>,
    pub d_property: bool,
    pub total_product: Real,
    pub log_total_product: f64,
}

impl OrbitReport {
    pub fn singular_connections(&self) -> impl Iterator<Item = &Connection> {
        self.singular.iter().map(|&i| &self.connections[i])
    }
}

/// Groups the breaks of `f` into maximal connections.
pub fn analyze_orbits(f: &CircleMap, max_iter: usize) -> Result<OrbitReport, OrbitError> {
    analyze_breaks(f, f.breaks(), max_iter, &default_match_tol())
}

/// As [`analyze_orbits`] for an explicit break list (order irrelevant).
pub fn analyze_breaks(f: &CircleMap, mut breaks: Vec<Break>, max_iter: usize, tol: &Real) -> Result<OrbitReport, OrbitError> {
    breaks.sort_by(|a, b| a.x.cmp(&b.x));
    let n = breaks.len();
    // Offset of each break relative to its group root.
    let mut group: Vec<Option<(usize, i64)>> = vec![None; n];
    for i in 0..n {
        if group[i].is_some() {
            continue;
        }
        group[i] = Some((i, 0));
        for j in i + 1..n {
            if group[j].is_some() {
                continue;
            }
            if let Some(k) = same_orbit(f, &breaks[i].x, &breaks[j].x, max_iter, tol)? {
                group[j] = Some((i, k));
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<(i64, Break)>> = BTreeMap::new();
    for (j, g) in group.iter().enumerate() {
        let (root, k) = g.expect("assigned");
        by_root.entry(root).or_default().push((k, breaks[j].clone()));
    }
    let mut connections = Vec::new();
    for (root, mut members) in by_root {
        members.sort_by_key(|m| m.0);
        let lo = members[0].0;
        let hi = members.last().unwrap().0;
        let exact: Option<BigRational> =
            members.iter().map(|m| m.1.exact_jump.clone()).try_fold(BigRational::one(), |acc, e| e.map(|e| acc * e));
        let product = members.iter().fold(Real::one(), |acc, m| acc * &m.1.jump);
        let log_product = match &exact {
            Some(r) => real::ln_ratio(r),
            None => members.iter().map(|m| m.1.log_jump()).sum(),
        };
        connections.push(Connection {
            representative: breaks[root].x.clone(),
            window: (lo, hi),
            members,
            product,
            exact_product: exact,
            log_product,
        });
    }
    let singular: Vec<usize> = (0..connections.len()).filter(|&i| !connections[i].is_trivial()).collect();
    let total_product = connections.iter().fold(Real::one(), |acc, c| acc * &c.product);
    let log_total_product = connections.iter().map(|c| c.log_product).sum();
    Ok(OrbitReport { d_property: singular.is_empty(), connections, singular, total_product, log_total_product })
}

/// A piecewise quadratic homeomorphism equal to the identity outside
/// `[c - delta, c + delta]`, fixing `c` and carrying jump `sigma` there.
#[derive(Debug, Clone)]
pub struct QuadraticAdjuster {
    pub center: Real,
    pub delta: Real,
    pub sigma: Real,
    pub slope_left: Real,
    pub slope_right: Real,
    pub map: CircleMap,
}

/// One-sided slopes at the center: `s+ = min(1, 2/(1+sigma)) (63/64)`, `s- = sigma s+`.
pub fn adjuster_slopes(sigma: &Real) -> (Real, Real) {
    let one = sigma.one_like();
    let cap = (one.int_like(2) / (&one + sigma)).min(one.clone());
    let sp = cap * Real::from_i64_prec(63, sigma.prec()) / 64;
    (sigma * &sp, sp)
}

pub fn make_adjuster(c: &Real, delta: &Real, sigma: &Real) -> Result<QuadraticAdjuster, OrbitError> {
    if !sigma.is_positive() {
        return Err(OrbitError::InfeasibleSlopes(sigma.to_f64()));
    }
    if sigma.ln().to_f64().abs() <= crate::circlemaps::break_threshold() {
        let one = sigma.one_like();
        return Ok(QuadraticAdjuster {
            center: c.frac(),
            delta: delta.clone(),
            sigma: sigma.clone(),
            slope_left: one.clone(),
            slope_right: one,
            map: CircleMap::identity(),
        });
    }
    let (sm, sp) = adjuster_slopes(sigma);
    make_adjuster_with_slopes(c, delta, &sm, &sp)
}

/// Adjuster with prescribed one-sided slopes `s-`, `s+` in `(0, 2)` at the center.
pub fn make_adjuster_with_slopes(c: &Real, delta: &Real, sm: &Real, sp: &Real) -> Result<QuadraticAdjuster, OrbitError> {
    let two = sm.int_like(2);
    for s in [sm, sp] {
        if !s.is_positive() || *s >= two {
            return Err(OrbitError::InfeasibleSlopes(s.to_f64()));
        }
    }
    let c = c.frac();
    let one = c.one_like();
    let a = &c - delta;
    let b = &c + delta;
    let segs = vec![
        Piece { left: a.clone(), v0: a.clone(), d0: &two - sm, curv: (sm - &one) / delta, exact_slope: None },
        Piece { left: c.clone(), v0: c.clone(), d0: sp.clone(), curv: (&one - sp) / delta, exact_slope: None },
        Piece { left: b.clone(), v0: b.clone(), d0: one.clone(), curv: c.zero_like(), exact_slope: Some(BigRational::one()) },
    ];
    let map: CircleMap = PiecewiseMap::from_segments(segs)?.into();
    Ok(QuadraticAdjuster { center: c, delta: delta.clone(), sigma: sm / sp, slope_left: sm.clone(), slope_right: sp.clone(), map })
}

/// Points the adjuster support must avoid when centred at `center`.
fn obstacles(f: &CircleMap, center: &Real, breaks: &[Break], tol: &Real) -> Vec<Real> {
    let pre = f.apply_inv(center);
    let mut out = vec![f.apply(center), pre.clone()];
    for b in breaks {
        if circle::dist(&b.x, center) > *tol {
            out.push(b.x.clone());
        }
        if circle::dist(&b.x, &pre) > *tol {
            out.push(f.apply(&b.x));
        }
    }
    out
}

fn clearance(center: &Real, obs: &[Real]) -> Real {
    obs.iter().map(|o| circle::dist(o, center)).min().unwrap_or_else(|| center.one_like())
}

/// `delta` for an adjuster at `center`: a quarter of the clearance, at most 1/16.
pub fn auto_delta(f: &CircleMap, center: &Real) -> Real {
    let tol = default_match_tol();
    let cl = clearance(center, &obstacles(f, center, &f.breaks(), &tol));
    (cl / 4).min(Real::pow2_prec(-4, center.prec()))
}

/// Result of moving the jump at `c` one step along its orbit.
#[derive(Debug, Clone)]
pub struct Transfer {
    /// `K f K^{-1}`.
    pub map: CircleMap,
    pub adjuster: QuadraticAdjuster,
    /// Where the transported jump now sits, `K(f^{direction}(c))`.
    pub target: Real,
}

/// Moves the jump of `f` at the break `c` to `f^{-1}(c)` (`direction = -1`)
/// or `f(c)` (`direction = +1`). With `delta = None` the support radius is
/// chosen automatically.
pub fn transfer_jump(f: &CircleMap, c: &Real, direction: i32, delta: Option<&Real>) -> Result<Transfer, OrbitError> {
    let tol = default_match_tol();
    let breaks = f.breaks();
    let brk = breaks
        .iter()
        .find(|b| circle::dist(&b.x, c) <= tol)
        .ok_or_else(|| OrbitError::NotABreak(c.to_decimal()))?;
    let (center, sigma) = if direction < 0 {
        (c.frac(), brk.jump.clone())
    } else {
        (f.apply(c), brk.jump.recip())
    };
    let obs = obstacles(f, &center, &breaks, &tol);
    let cl = clearance(&center, &obs);
    let delta = match delta {
        Some(d) => {
            if *d >= cl {
                return Err(OrbitError::SupportCollision(center.to_decimal()));
            }
            d.clone()
        }
        None => (cl / 4).min(Real::pow2_prec(-4, center.prec())),
    };
    let k = make_adjuster(&center, &delta, &sigma)?;
    let map = compose(&k.map, &compose(f, &k.map.inverse()));
    let target = k.map.apply(&f.iterate(c, direction.signum() as i64));
    Ok(Transfer { map, adjuster: k, target })
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateEntry {
    pub representative: Real,
    pub orbit_product: f64,
    pub final_log_jump: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub map: CircleMap,
    /// Adjusters in the order applied; the total conjugator is their composition.
    pub chain: Vec<QuadraticAdjuster>,
    pub certificate: Vec<CertificateEntry>,
}

/// Collapses every maximal connection of `f` onto its first member by
/// backward transfers. Trivial-product connections end with no break.
pub fn reduce_to_distinct_orbits(f: &CircleMap, max_iter: usize) -> Result<Reduction, OrbitError> {
    let report = analyze_orbits(f, max_iter)?;
    let mut map = f.clone();
    let mut chain = Vec::new();
    let mut certificate = Vec::new();
    for conn in &report.connections {
        let (lo, hi) = conn.window;
        let mut steps = 0;
        if hi > lo {
            // Current position of the accumulated jump, tracked through each K.
            let mut pos = conn.members.last().unwrap().1.x.clone();
            for _ in lo..hi {
                let t = transfer_jump(&map, &pos, -1, None)?;
                map = t.map;
                pos = t.target;
                chain.push(t.adjuster);
                steps += 1;
            }
        }
        let rep = &conn.first().x;
        let (l, r) = map.derivs(rep);
        certificate.push(CertificateEntry {
            representative: rep.clone(),
            orbit_product: conn.log_product,
            final_log_jump: (l / r).ln().to_f64(),
            steps,
        });
    }
    Ok(Reduction { map, chain, certificate })
}

/// Why two maps are not break-equivalent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Witness {
    /// Different numbers of singular orbits; names the first singular
    /// orbit of `f` whose `h`-image meets no singular orbit of `g`.
    CardinalityMismatch { f_count: usize, g_count: usize, first_unmatched: Option<String> },
    /// A singular orbit of `g` whose product is not a product of `f`.
    JumpNotInSet { g_orbit: String, log_product: f64 },
    /// `h` sends a singular orbit of `f` off the singular orbits of `g`.
    NotMapped { f_orbit: String },
    JumpMismatch { f_orbit: String, log_f: f64, log_g: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Equivalence {
    pub equivalent: bool,
    pub witness: Option<Witness>,
}

fn maps_into(g: &CircleMap, conn: &Connection, y: &Real, max_iter: usize, tol: &Real) -> Result<bool, OrbitError> {
    for (_, b) in &conn.members {
        if same_orbit(g, &b.x, y, max_iter, tol)?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Break-equivalence of `f` and `g` through `h`: singular orbits of `f`
/// go onto singular orbits of `g` with the same products (within `tol_log`).
pub fn break_equivalent(
    f: &CircleMap,
    g: &CircleMap,
    h: &dyn PointMap,
    max_iter: usize,
    tol_log: f64,
) -> Result<Equivalence, OrbitError> {
    let tol = default_match_tol();
    let rf = analyze_orbits(f, max_iter)?;
    let rg = analyze_orbits(g, max_iter)?;
    let sf: Vec<&Connection> = rf.singular_connections().collect();
    let sg: Vec<&Connection> = rg.singular_connections().collect();
    let image_of = |c: &Connection| -> Result<Option<usize>, OrbitError> {
        let y = h.eval(&c.representative);
        for (k, cg) in sg.iter().enumerate() {
            if maps_into(g, cg, &y, max_iter, &tol)? {
                return Ok(Some(k));
            }
        }
        Ok(None)
    };
    let fail = |w: Witness| Ok(Equivalence { equivalent: false, witness: Some(w) });
    if sf.len() != sg.len() {
        let mut first = None;
        for c in &sf {
            if image_of(c)?.is_none() {
                first = Some(c.representative.to_decimal());
                break;
            }
        }
        return fail(Witness::CardinalityMismatch { f_count: sf.len(), g_count: sg.len(), first_unmatched: first });
    }
    for cg in &sg {
        if !sf.iter().any(|c| (c.log_product - cg.log_product).abs() <= tol_log) {
            return fail(Witness::JumpNotInSet { g_orbit: cg.representative.to_decimal(), log_product: cg.log_product });
        }
    }
    for c in &sf {
        match image_of(c)? {
            None => return fail(Witness::NotMapped { f_orbit: c.representative.to_decimal() }),
            Some(k) => {
                if (c.log_product - sg[k].log_product).abs() > tol_log {
                    return fail(Witness::JumpMismatch {
                        f_orbit: c.representative.to_decimal(),
                        log_f: c.log_product,
                        log_g: sg[k].log_product,
                    });
                }
            }
        }
    }
    Ok(Equivalence { equivalent: true, witness: None })
}

/// The `0/1` matrix `epsilon` of shape `((q+1)^2, q+1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JumpSystem {
    pub q: usize,
    pub eps: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    pub kernel_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankSweep {
    pub q: usize,
    pub fillings: u64,
    pub min_rank: usize,
    pub max_rank: usize,
}

impl JumpSystem {
    /// Number of entries not forced by the constraints: `q (q+1) (q-1)`.
    pub fn free_entries(q: usize) -> usize {
        q * (q + 1) * q.saturating_sub(1)
    }

    /// Builds the system whose free entries, in row-major order, are the
    /// successive bits of `bits` (least significant first).
    pub fn from_bits(q: usize, bits: &[bool]) -> Self {
        let m = q + 1;
        let mut eps = vec![vec![0u8; m]; m * m];
        let mut it = bits.iter();
        for i in 0..m {
            for k in 0..m {
                if i == k {
                    continue;
                }
                let row = &mut eps[k + i * m];
                for (j, e) in row.iter_mut().enumerate() {
                    *e = if j == i {
                        1
                    } else if j == k {
                        0
                    } else {
                        u8::from(*it.next().expect("enough free bits"))
                    };
                }
            }
        }
        JumpSystem { q, eps }
    }

    pub fn is_admissible(&self) -> bool {
        let m = self.q + 1;
        if self.eps.len() != m * m || self.eps.iter().any(|r| r.len() != m || r.iter().any(|&e| e > 1)) {
            return false;
        }
        (0..m).all(|i| {
            (0..m).all(|k| {
                let row = &self.eps[k + i * m];
                if i == k {
                    row.iter().all(|&e| e == 0)
                } else {
                    row[i] == 1 && row[k] == 0
                }
            })
        })
    }
}

/// Exact rank of `epsilon` over the rationals.
pub fn jump_system_nullspace(system: &JumpSystem) -> RankReport {
    let cols = system.q + 1;
    let mut rows: Vec<Vec<BigRational>> = system
        .eps
        .iter()
        .map(|r| r.iter().map(|&e| BigRational::from_integer(BigInt::from(e))).collect())
        .collect();
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let prow = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let factor = &row[col] / &prow[col];
                for (v, p) in row[col..cols].iter_mut().zip(&prow[col..cols]) {
                    *v -= p * &factor;
                }
            }
        }
        rank += 1;
    }
    debug_assert!(rows.iter().skip(rank).all(|r| r.iter().all(|v| v.abs().is_zero())));
    RankReport { rank, kernel_dim: cols - rank }
}

/// Rank over every admissible filling.
pub fn exhaustive_rank(q: usize) -> RankSweep {
    let free = JumpSystem::free_entries(q);
    assert!(free < 32, "exhaustive sweep too large");
    let total = 1u64 << free;
    let mut sweep = RankSweep { q, fillings: total, min_rank: usize::MAX, max_rank: 0 };
    for mask in 0..total {
        let bits: Vec<bool> = (0..free).map(|b| mask >> b & 1 == 1).collect();
        let r = jump_system_nullspace(&JumpSystem::from_bits(q, &bits)).rank;
        sweep.min_rank = sweep.min_rank.min(r);
        sweep.max_rank = sweep.max_rank.max(r);
    }
    sweep
}

/// Rank over `samples` seeded random admissible fillings.
pub fn random_rank(q: usize, samples: u64, seed: u64) -> RankSweep {
    let free = JumpSystem::free_entries(q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sweep = RankSweep { q, fillings: samples, min_rank: usize::MAX, max_rank: 0 };
    for _ in 0..samples {
        let bits: Vec<bool> = (0..free).map(|_| rng.gen()).collect();
        let r = jump_system_nullspace(&JumpSystem::from_bits(q, &bits)).rank;
        sweep.min_rank = sweep.min_rank.min(r);
        sweep.max_rank = sweep.max_rank.max(r);
    }
    sweep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemaps::two_piece_pl;
    use crate::numberth::QuadSurd;

    fn r(s: &str) -> Real {
        Real::parse(s).unwrap()
    }

    #[test]
    fn golden_orbit_offsets() {
        let g = QuadSurd::golden().to_real();
        let f = CircleMap::rotation(&g);
        let tol = default_match_tol();
        let d = (&g * 3).frac();
        assert_eq!(same_orbit(&f, &Real::zero(), &d, 10, &tol).unwrap(), Some(3));
        assert_eq!(same_orbit(&f, &Real::zero(), &Real::zero(), 10, &tol).unwrap(), Some(0));
        assert_eq!(same_orbit(&f, &Real::zero(), &r("0.5"), 50, &tol).unwrap(), None);
    }

    #[test]
    fn rational_rotation_is_ambiguous() {
        let f = CircleMap::rotation(&r("1/4"));
        let e = same_orbit(&f, &Real::zero(), &r("1/2"), 10, &default_match_tol()).unwrap_err();
        assert!(matches!(e, OrbitError::AmbiguousMatch { .. }));
    }

    #[test]
    fn documented_adjuster_example() {
        let k = make_adjuster_with_slopes(&r("1/2"), &r("1/8"), &r("1/2"), &r("3/2")).unwrap();
        // x - 4 (x - 3/8)(x - 1/2) on the left arc.
        let x = r("7/16");
        let expect = &x - (&x - r("3/8")) * (&x - r("1/2")) * 4;
        assert!((k.map.lift(&x) - expect).abs() < Real::pow2_prec(-250, 256));
        let (l, rr) = k.map.derivs(&r("1/2"));
        assert!((l - r("1/2")).abs() < Real::pow2_prec(-200, 256));
        assert!((rr - r("3/2")).abs() < Real::pow2_prec(-200, 256));
        assert_eq!(k.map.lift(&r("3/8")), r("3/8"));
        assert_eq!(k.map.lift(&r("5/8")), r("5/8"));
    }

    #[test]
    fn slope_rule_and_identity_case() {
        let k = make_adjuster(&r("0.3"), &r("1/16"), &r("4")).unwrap();
        assert!((&k.sigma - r("4")).abs() < Real::pow2_prec(-240, 256));
        assert!(k.slope_left < Real::from_i64(2));
        let id = make_adjuster(&r("0.3"), &r("1/16"), &Real::one()).unwrap();
        assert!(id.map.breaks().is_empty());
    }

    #[test]
    fn rank_small_cases() {
        assert_eq!(jump_system_nullspace(&JumpSystem::from_bits(1, &[])).rank, 2);
        let s = exhaustive_rank(2);
        assert_eq!((s.fillings, s.min_rank, s.max_rank), (64, 3, 3));
        assert!(JumpSystem::from_bits(2, &[true; 6]).is_admissible());
    }

    #[test]
    fn two_piece_map_has_two_singular_orbits() {
        let f = two_piece_pl(&r("0.3"));
        let rep = analyze_orbits(&f, 40).unwrap();
        assert_eq!(rep.connections.len(), 2);
        assert!(!rep.d_property);
        assert!(rep.log_total_product.abs() < 1e-12);
    }
}
