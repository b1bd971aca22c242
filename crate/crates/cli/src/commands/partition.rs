use breakcircle::distortion::{verify_comparability, verify_denjoy, verify_finzi};
use breakcircle::dynpart::{build_partition, decay_profile, verify_refinement, Side};
use serde::Serialize;
use serde_json::json;

use super::{levels_arg, real_arg, Ctx};
use crate::bundle::{display, float, full, Bundle, Table};
use crate::cli::{PartitionArgs, VerifyArgs};
use crate::error::{CliError, Context};

/// Slack on the Denjoy, Finzi and comparability bounds.
const BOUND_SLACK: f64 = 1e-9;
/// Allowed excess of the fitted decay slope over `log lambda`.
const SLOPE_SLACK: f64 = 0.05;

#[derive(Serialize)]
struct PartitionSummary {
    n: usize,
    q_n: usize,
    q_prev: usize,
    intervals: usize,
    covers_disjointly: bool,
    refinement_holds: bool,
    max_length: String,
    min_length: String,
    rotation: String,
}

pub fn partition(a: &PartitionArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    let m = ctx.map(&a.map, "--map")?;
    let x0 = real_arg(&a.x0, "--x0")?;
    let (table, rot) = ctx.rotation_table(&[&m], a.depth + 2)?;
    let p = build_partition(m.map(), &x0, a.depth, &table).during("build partition")?;
    let refinement = verify_refinement(m.map(), &x0, a.depth, &table).during("verify refinement")?;
    let covers = p.covers_disjointly();

    let mut tab = Table::new(&[
        ("n", "partition depth"),
        ("i", "interval index within its family"),
        ("level", "n - 1 for the long family, n for the short family"),
        ("left", "left endpoint, full precision"),
        ("right", "right endpoint, full precision"),
        ("length", "counter-clockwise length, full precision"),
        ("length_display", "length rounded to 6 decimals"),
    ]);
    for (side, i, iv) in p.intervals() {
        let (l, r) = p.coords(iv);
        let len = p.length(iv);
        let level = match side {
            Side::Long => a.depth - 1,
            Side::Short => a.depth,
        };
        tab.push(vec![
            a.depth.to_string(),
            i.to_string(),
            level.to_string(),
            full(&l),
            full(&r),
            full(&len),
            display(len.to_f64()),
        ]);
    }
    let out = PartitionSummary {
        n: a.depth,
        q_n: p.q_n,
        q_prev: p.q_prev,
        intervals: p.len(),
        covers_disjointly: covers,
        refinement_holds: refinement,
        max_length: full(&p.max_length()),
        min_length: full(&p.min_length()),
        rotation: rot.clone(),
    };
    Ok(Bundle::new("partition", out)
        .with_table(tab)
        .with_inputs(json!({"map": m.input(), "rotation": rot, "x0": a.x0}))
        .violated_if(!covers, "intervals do not tile the circle")
        .violated_if(!refinement, "refinement identity fails"))
}

#[derive(Serialize)]
struct VerifySummary {
    levels: Vec<usize>,
    log_variation: f64,
    checks: usize,
    min_margin: f64,
    all_nonnegative: bool,
    decay_slope: f64,
    log_lambda: f64,
    rotation: String,
}

pub fn verify(a: &VerifyArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    let levels = match (&a.window, ctx.cfg.window()) {
        (Some(w), _) => levels_arg(w, "--window", false)?,
        (None, Some(w)) => w,
        (None, None) => levels_arg("5:11", "--window", false)?,
    };
    if levels[0] < 2 {
        return Err(CliError::config("--window", "levels start at 2 (the checks use q_{n-1})"));
    }
    if a.samples == 0 || a.pair_samples == 0 {
        return Err(CliError::config("--samples", "must be positive"));
    }
    let m = ctx.map(&a.map, "--map")?;
    let x0 = real_arg(&a.x0, "--x0")?;
    let last = *levels.last().unwrap();
    let (table, rot) = ctx.rotation_table(&[&m], last + 2)?;
    let f = m.map();
    let v = f.log_variation();

    let mut tab = Table::new(&[
        ("check", "denjoy_lower, denjoy_upper, finzi, comparability or decay"),
        ("n", "depth (last window level for decay)"),
        ("value", "measured quantity: extreme of Df^{q_n}, worst log deviation, or fitted slope"),
        ("bound", "bound the value is compared against, slack included"),
        ("margin", "signed distance to the bound; nonnegative when the check holds"),
        ("margin_display", "margin rounded to 6 decimals"),
    ]);
    let mut push = |check: &str, n: usize, value: f64, bound: f64, margin: f64| {
        tab.push(vec![check.into(), n.to_string(), float(value), float(bound), float(margin), display(margin)]);
        margin
    };
    let mut margins = Vec::new();

    let denjoy = verify_denjoy(f, &table, last, a.samples, ctx.seed);
    for l in denjoy.levels.iter().filter(|l| levels.contains(&l.n)) {
        let lo = denjoy.lower - BOUND_SLACK;
        let hi = denjoy.upper + BOUND_SLACK;
        margins.push(push("denjoy_lower", l.n, l.min, lo, l.min - lo));
        margins.push(push("denjoy_upper", l.n, l.max, hi, hi - l.max));
    }
    for &n in &levels {
        let seed = ctx.seed.wrapping_add(n as u64);
        let r = verify_finzi(f, &table, n, a.pair_samples, seed);
        let b = r.bound + BOUND_SLACK;
        margins.push(push("finzi", n, r.worst, b, b - r.worst));
        let c = verify_comparability(f, &table, n, a.pair_samples, seed);
        let b = c.bound + BOUND_SLACK;
        margins.push(push("comparability", n, c.worst, b, b - c.worst));
    }
    let d = decay_profile(f, &x0, levels[0]..=last, &table).during("decay profile")?;
    let b = d.log_lambda + SLOPE_SLACK;
    margins.push(push("decay", last, d.slope, b, b - d.slope));

    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = min_margin >= 0.0;
    let out = VerifySummary {
        levels: levels.clone(),
        log_variation: v,
        checks: margins.len(),
        min_margin,
        all_nonnegative: ok,
        decay_slope: d.slope,
        log_lambda: d.log_lambda,
        rotation: rot.clone(),
    };
    Ok(Bundle::new("verify", out)
        .with_table(tab)
        .with_inputs(json!({"map": m.input(), "rotation": rot, "levels": levels, "samples": a.samples, "pair_samples": a.pair_samples}))
        .violated_if(!ok, format!("negative margin {min_margin}")))
}
