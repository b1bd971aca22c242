use breakcircle::conjugacy::build_conjugacy;
use breakcircle::distortion::{trace_distortion, DistortionTrace, TraceSetup};
use breakcircle::orbitalg::PointMap;
use breakcircle::{CircleMap, Real};
use serde::Serialize;
use serde_json::json;

use super::conj::oracle_between;
use super::{break_arg, levels_arg, real_arg, Ctx};
use crate::bundle::{display, float, Bundle, Table};
use crate::cli::{ConjKind, DistortArgs};
use crate::error::{CliError, Context};

#[derive(Serialize)]
struct DistortOut {
    #[serde(flatten)]
    trace: DistortionTrace,
    /// `2 beta / (1 - gamma0)`.
    control_bound: f64,
    /// `max_n |D_n - Pi|` over the window.
    max_deviation: f64,
    conj: ConjKind,
    rotation: String,
}

pub fn distort(a: &DistortArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    let f = ctx.map(&a.map_f, "--map-f")?;
    let g = ctx.map(&a.map_g, "--map-g")?;
    let window = match (&a.window, ctx.cfg.window()) {
        (Some(w), _) => levels_arg(w, "--window", true)?,
        (None, Some(w)) => w,
        (None, None) => levels_arg("9:13:2", "--window", true)?,
    };
    let class_window = levels_arg(&a.class_window, "--class-window", true)?;
    if !(a.beta > 0.0 && a.beta < a.gamma && a.gamma < 1.0) {
        return Err(CliError::config("--beta", "need 0 < beta < gamma < 1"));
    }
    let deepest = window.last().copied().max(class_window.last().copied()).unwrap_or(0).max(a.conj_depth);
    let (table, rot) = ctx.rotation_table(&[&f, &g], deepest + 2)?;
    let c = break_arg(f.map(), &a.c, "--c")?;
    let c1 = a.c1.as_deref().map(|id| break_arg(f.map(), id, "--c1")).transpose()?;

    let computed;
    let closed: CircleMap;
    let h: &dyn PointMap = match a.conj {
        ConjKind::Identity => {
            closed = CircleMap::identity();
            &closed
        }
        ConjKind::Oracle => {
            closed = oracle_between(&f, &g)
                .ok_or_else(|| CliError::config("--conj", "both maps need a closed-form conjugacy to the rotation"))?;
            &closed
        }
        ConjKind::Computed => {
            let n = table.qn(a.conj_depth);
            computed = build_conjugacy(f.map(), g.map(), &Real::zero(), &Real::zero(), n).during("build conjugacy")?;
            &computed
        }
    };
    let setup = TraceSetup {
        x0: real_arg(&a.x0, "--x0")?,
        c,
        c1,
        delta: real_arg(&a.delta, "--delta")?,
        beta: a.beta,
        gamma: a.gamma,
        window: window.clone(),
        class_window: class_window.clone(),
        max_iter: a.max_iter,
        cfg: ctx.cfg.thresholds.cell(),
    };
    let trace = trace_distortion(f.map(), g.map(), h, &table, &setup).during("trace distortion")?;

    let mut tab = Table::new(&[
        ("n", "window level"),
        ("q_n", "return time at level n"),
        ("Dr_f", "ratio distortion of f^{q_n} on the secondary cell"),
        ("Dr_g", "ratio distortion of g^{q_n} on the image cell"),
        ("D_n", "Dr_g over Dr_f"),
        ("Pi_target", "jump-product target of D_n"),
        ("D_n_display", "D_n rounded to 6 decimals"),
        ("within_envelope", "both distortions inside the Denjoy envelope"),
        ("h1_unique", "every tagged break has a unique matching iterate"),
    ]);
    for r in &trace.records {
        tab.push(vec![
            r.n.to_string(),
            r.q_n.to_string(),
            float(r.dr_f),
            float(r.dr_g),
            float(r.d_n),
            float(r.pi_target),
            display(r.d_n),
            r.within_envelope.to_string(),
            r.h1_unique.to_string(),
        ]);
    }
    let outside = trace.records.iter().filter(|r| !r.within_envelope).map(|r| r.n).collect::<Vec<_>>();
    let out = DistortOut {
        control_bound: 2.0 * trace.beta / (1.0 - trace.gamma0),
        max_deviation: trace.records.iter().map(|r| (r.d_n - r.pi_target).abs()).fold(0.0, f64::max),
        trace,
        conj: a.conj,
        rotation: rot.clone(),
    };
    Ok(Bundle::new("distort", out)
        .with_table(tab)
        .with_inputs(json!({
            "map_f": f.input(),
            "map_g": g.input(),
            "rotation": rot,
            "window": window,
            "class_window": class_window,
        }))
        .violated_if(!outside.is_empty(), format!("distortion outside the envelope at levels {outside:?}")))
}
