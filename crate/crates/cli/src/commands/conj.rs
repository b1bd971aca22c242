use std::path::Path;

use breakcircle::circlemaps::compose;
use breakcircle::conjugacy::{
    build_conjugacy, profile_trend, singularity_profile_of, Interpolant, MeasurePrediction, ProfileTrend, SingularityProfile,
    VERDICT_DEPTHS,
};
use breakcircle::numberth::{is_bounded_type, BoundedTypeReport};
use breakcircle::orbitalg::analyze_orbits;
use breakcircle::{circle, CircleMap, Real};
use serde::Serialize;
use serde_json::json;

use super::{levels_arg, real_arg, Ctx, Resolved};
use crate::bundle::{display, float, full, Bundle, Table};
use crate::cli::{ConjugateArgs, SingularityArgs};
use crate::error::{CliError, Context};

/// Closed-form conjugacy from `f` to `g` when both maps carry one to the rotation.
pub fn oracle_between(f: &Resolved, g: &Resolved) -> Option<CircleMap> {
    let hf = f.built.oracle.as_ref()?;
    let hg = g.built.oracle.as_ref()?;
    Some(compose(&hg.inverse(), hf))
}

fn residual_limit() -> Real {
    let p = breakcircle::real::precision();
    Real::pow2_prec(-(p as i64) / 2, p)
}

#[derive(Serialize)]
struct ConjugateOut {
    depth: usize,
    samples: usize,
    rotation: String,
    max_gap_f: Real,
    max_gap_g: Real,
    equivariance_residual: Real,
    self_consistency: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_sample_error: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_error: Option<Real>,
}

pub fn conjugate(a: &ConjugateArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    let f = ctx.map(&a.map_f, "--map-f")?;
    let g = ctx.map(&a.map_g, "--map-g")?;
    let (x0, y0) = (real_arg(&a.x0, "--x0")?, real_arg(&a.y0, "--y0")?);
    let (rt, rot) = ctx.rotation_table(&[&f, &g], a.depth + 2)?;
    let n = rt.qn(a.depth);
    let mut t = build_conjugacy(f.map(), g.map(), &x0, &y0, n).during("build conjugacy")?;
    // The closed form only serves as a reference when it pairs x0 with y0.
    if let Some(h) = oracle_between(&f, &g) {
        if circle::dist(&h.apply(&x0), &y0) <= residual_limit() {
            t = t.with_oracle(h);
        }
    }
    let mut tab = Table::new(&[
        ("k", "orbit index"),
        ("x", "f^k(x0), full precision"),
        ("y", "g^k(y0), full precision"),
        ("x_display", "x rounded to 6 decimals"),
        ("y_display", "y rounded to 6 decimals"),
    ]);
    for (k, (x, y)) in t.xs.iter().zip(&t.ys).enumerate() {
        tab.push(vec![k.to_string(), full(x), full(y), display(x.to_f64()), display(y.to_f64())]);
    }
    let residual = t.equivariance_residual();
    let bad = residual > residual_limit();
    let out = ConjugateOut {
        depth: a.depth,
        samples: n,
        rotation: rot.clone(),
        max_gap_f: t.max_gap_f(),
        max_gap_g: t.max_gap_g(),
        self_consistency: t.self_consistency(1000),
        oracle_sample_error: t.oracle_sample_error(),
        oracle_error: t.oracle_error(1000),
        equivariance_residual: residual,
    };
    Ok(Bundle::new("conjugate", out)
        .with_table(tab)
        .with_inputs(json!({"map_f": f.input(), "map_g": g.input(), "rotation": rot, "x0": a.x0, "y0": a.y0}))
        .violated_if(bad, "equivariance residual above 2^(-precision/2)"))
}

/// Reads `(x, y)` pairs from a `conjugate.csv`, ordered by `k`.
fn read_table(path: &Path) -> Result<(Vec<Real>, Vec<Real>), CliError> {
    let flag = "--table";
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::config(flag, format!("{}: {e}", path.display())))?;
    let headers = rd.headers().map_err(|e| CliError::config(flag, e))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| CliError::config(flag, format!("missing column `{name}`")))
    };
    let (ck, cx, cy) = (col("k")?, col("x")?, col("y")?);
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::config(flag, e))?;
        let at = |c: usize| rec.get(c).unwrap_or("");
        let k: usize = at(ck).parse().map_err(|_| CliError::config(format!("{flag}[{line}].k"), "not an index"))?;
        let x = Real::parse(at(cx)).ok_or_else(|| CliError::config(format!("{flag}[{line}].x"), "not a number"))?;
        let y = Real::parse(at(cy)).ok_or_else(|| CliError::config(format!("{flag}[{line}].y"), "not a number"))?;
        rows.push((k, x, y));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(CliError::config(flag, "orbit indices must be 0, 1, ..., N-1"));
    }
    Ok(rows.into_iter().map(|(_, x, y)| (x, y)).unzip())
}

#[derive(Serialize)]
struct DepthRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<usize>,
    samples: usize,
    grid: usize,
    s_50: f64,
    s_90: f64,
    s_99: f64,
    total_mass: f64,
}

#[derive(Serialize)]
struct SingularityOut {
    rows: Vec<DepthRow>,
    trend: ProfileTrend,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_property: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<MeasurePrediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agreement: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounded: Option<BoundedTypeReport>,
}

pub fn singularity(a: &SingularityArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    if a.steps == 0 {
        return Err(CliError::config("--steps", "must be positive"));
    }
    let depths: Option<Vec<usize>> = a.depths.as_deref().map(|d| levels_arg(d, "--depths", false)).transpose()?;
    let vcfg = ctx.cfg.thresholds.verdict();
    let map = a.map.as_deref().map(|m| ctx.map(m, "--map")).transpose()?;

    // (depth label, interpolant) pairs to profile.
    let mut cases: Vec<(Option<usize>, Interpolant)> = Vec::new();
    let mut inputs = json!({});
    let mut bounded = None;
    match (&map, &a.table) {
        (Some(m), _) => {
            let depths = depths.unwrap_or_else(|| VERDICT_DEPTHS.to_vec());
            let (rt, rot) = ctx.rotation_table(&[m], depths.last().unwrap() + 2)?;
            let r = CircleMap::rotation(&rt.alpha);
            for &d in &depths {
                let t = build_conjugacy(m.map(), &r, &Real::zero(), &Real::zero(), rt.qn(d)).during("build conjugacy")?;
                cases.push((Some(d), t.interpolant().clone()));
            }
            bounded = Some(is_bounded_type(&rt, vcfg.bound));
            inputs = json!({"map": m.input(), "rotation": rot, "depths": depths});
        }
        (None, Some(path)) => {
            let (xs, ys) = read_table(path)?;
            match depths {
                Some(depths) => {
                    let (rt, rot) = ctx.rotation_table(&[], depths.last().unwrap() + 2)?;
                    for &d in &depths {
                        let n = rt.qn(d);
                        if n > xs.len() {
                            return Err(CliError::config("--depths", format!("q_{d} = {n} exceeds the {} tabled samples", xs.len())));
                        }
                        let (ip, _) = Interpolant::from_pairs(&xs[..n], &ys[..n]).during("read conjugacy table")?;
                        cases.push((Some(d), ip));
                    }
                    inputs = json!({"table": path, "rotation": rot, "depths": depths});
                }
                None => {
                    let (ip, _) = Interpolant::from_pairs(&xs, &ys).during("read conjugacy table")?;
                    cases.push((None, ip));
                    inputs = json!({"table": path});
                }
            }
        }
        (None, None) => return Err(CliError::config("--map", "give --map or --table")),
    }

    let mut tab = Table::new(&[
        ("depth", "q-index of the sample count (empty for a whole table)"),
        ("samples", "tabled orbit points"),
        ("grid", "uniform grid cells"),
        ("p", "mass fraction"),
        ("s", "smallest fraction of cells carrying mass p"),
    ]);
    let mut rows = Vec::new();
    let mut mass_error = 0f64;
    for (depth, ip) in &cases {
        let grid = a.grid.unwrap_or((ip.len() / 10).max(1));
        let prof: SingularityProfile = singularity_profile_of(ip, grid).during("singularity profile")?;
        let label = depth.map(|d| d.to_string()).unwrap_or_default();
        for (p, s) in prof.curve(a.steps) {
            tab.push(vec![label.clone(), ip.len().to_string(), grid.to_string(), float(p), float(s)]);
        }
        mass_error = mass_error.max((prof.total_mass() - 1.0).abs());
        rows.push(DepthRow {
            depth: *depth,
            samples: ip.len(),
            grid,
            s_50: prof.s(0.5),
            s_90: prof.s(vcfg.p),
            s_99: prof.s(0.99),
            total_mass: prof.total_mass(),
        });
    }
    let scores: Vec<f64> = rows.iter().map(|r| r.s_90).collect();
    let trend = profile_trend(&scores, &vcfg);
    let (mut d_property, mut prediction, mut agreement) = (None, None, None);
    if let Some(m) = &map {
        let rep = analyze_orbits(m.map(), vcfg.max_iter).during("analyze orbits")?;
        let pred = if rep.d_property { MeasurePrediction::Equivalent } else { MeasurePrediction::Singular };
        d_property = Some(rep.d_property);
        prediction = Some(pred);
        agreement = Some(matches!(
            (pred, trend),
            (MeasurePrediction::Equivalent, ProfileTrend::Stable) | (MeasurePrediction::Singular, ProfileTrend::Concentrating)
        ));
    }
    let out = SingularityOut { rows, trend, d_property, prediction, agreement, bounded };
    Ok(Bundle::new("singularity", out)
        .with_table(tab)
        .with_inputs(inputs)
        .violated_if(mass_error > 1e-9, format!("profile mass off by {mass_error:e}")))
}
