use breakcircle::circlemaps::rotation_number;
use breakcircle::orbitalg::{analyze_orbits, reduce_to_distinct_orbits, CertificateEntry};
use breakcircle::{Break, Real};
use serde::Serialize;
use serde_json::json;

use super::Ctx;
use crate::bundle::{display, float, full, Bundle, Table};
use crate::cli::{OrbitsArgs, ReduceArgs};
use crate::error::{CliError, Context};

/// Allowed gap between a final log jump and its orbit product.
const REDUCTION_TOL: f64 = 1e-10;

pub fn orbits(a: &OrbitsArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    let m = ctx.map(&a.map, "--map")?;
    let rep = analyze_orbits(m.map(), a.max_iter).during("analyze orbits")?;
    let mut tab = Table::new(&[
        ("connection", "index of the maximal connection"),
        ("offset", "orbit offset of the break relative to the representative"),
        ("x", "break location, full precision"),
        ("x_display", "break location rounded to 6 decimals"),
        ("jump", "left over right derivative at the break"),
        ("log_jump", "natural log of the jump"),
        ("log_product", "log of the jump product over the connection"),
        ("singular", "true when the connection product differs from 1"),
    ]);
    for (k, c) in rep.connections.iter().enumerate() {
        let singular = rep.singular.contains(&k);
        for (off, b) in &c.members {
            tab.push(vec![
                k.to_string(),
                off.to_string(),
                full(&b.x),
                display(b.x.to_f64()),
                full(&b.jump),
                float(b.log_jump()),
                float(c.log_product),
                singular.to_string(),
            ]);
        }
    }
    let breaks = m.map().breaks().len();
    let grouped: usize = rep.connections.iter().map(|c| c.members.len()).sum();
    Ok(Bundle::new("orbits", &rep)
        .with_table(tab)
        .with_inputs(json!({"map": m.input(), "max_iter": a.max_iter}))
        .violated_if(grouped != breaks, format!("{grouped} grouped breaks for {breaks} breaks")))
}

#[derive(Serialize)]
struct Adjuster {
    center: Real,
    delta: Real,
    sigma: Real,
    slope_left: Real,
    slope_right: Real,
}

#[derive(Serialize)]
struct ReduceOut {
    chain: Vec<Adjuster>,
    certificate: Vec<CertificateEntry>,
    breaks_after: Vec<Break>,
    max_residual: f64,
    prefix_depth: usize,
    prefix_before: Vec<u64>,
    prefix_after: Vec<u64>,
    prefix_preserved: bool,
}

pub fn reduce(a: &ReduceArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    let m = ctx.map(&a.map, "--map")?;
    let red = reduce_to_distinct_orbits(m.map(), a.max_iter).during("reduce to distinct orbits")?;
    let before = rotation_number(m.map(), a.prefix_depth).during("rotation number")?.quotients;
    let after = rotation_number(&red.map, a.prefix_depth).during("rotation number")?.quotients;
    let max_residual = red
        .certificate
        .iter()
        .map(|e| (e.final_log_jump - e.orbit_product).abs())
        .fold(0.0, f64::max);

    let mut tab = Table::new(&[
        ("representative", "first break of the connection, full precision"),
        ("representative_display", "representative rounded to 6 decimals"),
        ("orbit_product", "log of the jump product over the connection"),
        ("final_log_jump", "log jump at the representative after reduction"),
        ("residual", "absolute difference of the two logs"),
        ("steps", "backward transfers applied"),
    ]);
    for e in &red.certificate {
        tab.push(vec![
            full(&e.representative),
            display(e.representative.to_f64()),
            float(e.orbit_product),
            float(e.final_log_jump),
            float((e.final_log_jump - e.orbit_product).abs()),
            e.steps.to_string(),
        ]);
    }
    let preserved = before == after;
    let out = ReduceOut {
        chain: red
            .chain
            .iter()
            .map(|k| Adjuster {
                center: k.center.clone(),
                delta: k.delta.clone(),
                sigma: k.sigma.clone(),
                slope_left: k.slope_left.clone(),
                slope_right: k.slope_right.clone(),
            })
            .collect(),
        certificate: red.certificate.clone(),
        breaks_after: red.map.breaks(),
        max_residual,
        prefix_depth: a.prefix_depth,
        prefix_before: before,
        prefix_after: after,
        prefix_preserved: preserved,
    };
    Ok(Bundle::new("reduce", out)
        .with_table(tab)
        .with_inputs(json!({"map": m.input(), "max_iter": a.max_iter}))
        .violated_if(max_residual > REDUCTION_TOL, format!("jump residual {max_residual:e} above {REDUCTION_TOL:e}"))
        .violated_if(!preserved, "rotation number prefix changed"))
}
