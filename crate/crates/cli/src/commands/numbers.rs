use breakcircle::circlemaps::rotation_number;
use breakcircle::numberth::is_bounded_type;
use breakcircle::orbitalg::{exhaustive_rank, random_rank, JumpSystem};
use breakcircle::{ConvergentTable, RotationSpec};
use serde::Serialize;
use serde_json::json;

use super::Ctx;
use crate::bundle::{full, Bundle, Table};
use crate::cli::{RankArgs, RotnoArgs};
use crate::error::{CliError, Context};

#[derive(Serialize)]
struct Rotno {
    alpha_prefix: Vec<u64>,
    bounded_type: bool,
    bound: u64,
    max_quotient: u64,
    depth: usize,
    /// `exact` for a given number, `certified` when computed from a map.
    method: &'static str,
    /// The number itself when exact; the midpoint of the certified bracket otherwise.
    alpha: String,
    /// Prefix of the rotation number fixed by the map spec, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    spec_prefix: Option<Vec<u64>>,
}

fn convergent_table(t: &ConvergentTable) -> Table {
    let mut tab = Table::new(&[
        ("n", "quotient index, starting at 1"),
        ("a_n", "partial quotient"),
        ("p_n", "convergent numerator"),
        ("q_n", "convergent denominator"),
    ]);
    for n in 1..=t.depth() {
        tab.push(vec![n.to_string(), t.a(n).to_string(), t.p(n).to_string(), t.q(n).to_string()]);
    }
    tab
}

pub fn rotno(a: &RotnoArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    if a.depth == 0 {
        return Err(CliError::config("--depth", "must be positive"));
    }
    let bound = ctx.cfg.thresholds.bound;
    let (table, method, spec_prefix, inputs) = match (&a.alpha, &a.map) {
        (Some(s), _) => {
            let spec = RotationSpec::parse(s).map_err(|e| CliError::config("--alpha", e))?;
            let t = spec.expand(a.depth).during("expand rotation number")?;
            (t, "exact", None, json!({"alpha": s}))
        }
        (None, Some(m)) => {
            let m = ctx.map(m, "--map")?;
            let t = rotation_number(m.map(), a.depth).during("rotation number")?;
            let spec = match &m.built.rotation {
                Some(r) => Some(r.expand(a.depth).during("expand rotation number")?.quotients),
                None => None,
            };
            (t, "certified", spec, json!({"map": m.input()}))
        }
        (None, None) => return Err(CliError::config("--map", "give --map or --alpha")),
    };
    let b = is_bounded_type(&table, bound);
    let mismatch = spec_prefix.as_ref().is_some_and(|p| *p != table.quotients);
    let out = Rotno {
        alpha_prefix: table.quotients.clone(),
        bounded_type: b.bounded,
        bound,
        max_quotient: b.max_quotient,
        depth: a.depth,
        method,
        alpha: full(&table.alpha),
        spec_prefix,
    };
    Ok(Bundle::new("rotno", out)
        .with_table(convergent_table(&table))
        .with_inputs(inputs)
        .violated_if(mismatch, "certified prefix differs from the rotation number in the map spec"))
}

#[derive(Serialize)]
struct Rank {
    q: usize,
    fillings: u64,
    min_rank: usize,
    max_rank: usize,
    expected_rank: usize,
    exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

pub fn rank(a: &RankArgs, ctx: &Ctx) -> Result<Bundle, CliError> {
    if a.q == 0 {
        return Err(CliError::config("--q", "must be positive"));
    }
    let (sweep, seed) = match a.samples {
        Some(n) => (random_rank(a.q, n, ctx.seed), Some(ctx.seed)),
        None => {
            let free = JumpSystem::free_entries(a.q);
            if free >= 32 {
                return Err(CliError::config("--q", format!("{free} free entries; use --samples for q = {}", a.q)));
            }
            (exhaustive_rank(a.q), None)
        }
    };
    let expected = a.q + 1;
    let ok = sweep.min_rank == expected && sweep.max_rank == expected;
    let out = Rank {
        q: sweep.q,
        fillings: sweep.fillings,
        min_rank: sweep.min_rank,
        max_rank: sweep.max_rank,
        expected_rank: expected,
        exhaustive: a.samples.is_none(),
        seed,
    };
    Ok(Bundle::new("rank", out).violated_if(!ok, format!("rank outside {{{expected}}} on some filling")))
}
