//! Aggregation of earlier bundles and the measure and singularity predicates.
//!
//! Every map built from a spec is piecewise linear, so the predicates that
//! need `D^2 f` in some `L^p` or the PL class hold for all of them; the
//! remaining hypotheses (common rotation number, bounded type) are reported
//! as `hypotheses_met`, `null` when no `rotno` bundle covers the map.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::Ctx;
use crate::bundle::Bundle;
use crate::bundle::Table;
use crate::cli::ReportArgs;
use crate::error::CliError;

#[derive(Debug, Default, Clone, Serialize)]
struct MapFacts {
    /// Log products of the singular connections.
    #[serde(skip_serializing_if = "Option::is_none")]
    singular_products: Option<Vec<f64>>,
    /// Log jumps of every break.
    #[serde(skip_serializing_if = "Option::is_none")]
    log_jumps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distinct_orbits: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_property: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_prefix: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounded_type: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile_trend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify_margins_ok: Option<bool>,
}

#[derive(Debug, Serialize)]
struct BundleEntry {
    dir: PathBuf,
    command: String,
    map: Option<String>,
    invariant_violation: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct Verdict {
    predicate: &'static str,
    f: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<String>,
    /// Common rotation number of bounded type; `None` when not covered.
    hypotheses_met: Option<bool>,
    premise: bool,
    /// What the predicate concludes; `none` when the premise fails.
    conclusion: &'static str,
}

#[derive(Serialize)]
struct ReportOut {
    bundles: Vec<BundleEntry>,
    maps: BTreeMap<String, MapFacts>,
    verdicts: Vec<Verdict>,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(path.display().to_string(), e))
}

fn log_of(v: &Value) -> Option<f64> {
    v.as_str().and_then(|s| s.parse::<f64>().ok()).map(f64::ln)
}

fn absorb(facts: &mut MapFacts, command: &str, result: &Value) {
    match command {
        "orbits" => {
            let conns = result["connections"].as_array().cloned().unwrap_or_default();
            let singular: Vec<usize> =
                result["singular"].as_array().map(|a| a.iter().filter_map(|v| v.as_u64()).map(|v| v as usize).collect()).unwrap_or_default();
            facts.singular_products =
                Some(singular.iter().filter_map(|&k| conns.get(k)).filter_map(|c| c["log_product"].as_f64()).collect());
            facts.log_jumps = Some(
                conns
                    .iter()
                    .flat_map(|c| c["members"].as_array().cloned().unwrap_or_default())
                    .filter_map(|m| log_of(&m[1]["jump"]))
                    .collect(),
            );
            facts.distinct_orbits = Some(conns.iter().all(|c| c["members"].as_array().is_some_and(|m| m.len() == 1)));
            facts.d_property = result["d_property"].as_bool();
        }
        "rotno" => {
            facts.alpha_prefix = serde_json::from_value(result["alpha_prefix"].clone()).ok();
            facts.bounded_type = result["bounded_type"].as_bool();
        }
        "singularity" => facts.profile_trend = result["trend"].as_str().map(String::from),
        "verify" => facts.verify_margins_ok = result["all_nonnegative"].as_bool(),
        _ => {}
    }
}

fn contains(set: &[f64], v: f64, tol: f64) -> bool {
    set.iter().any(|s| (s - v).abs() <= tol)
}

fn hypotheses(f: &MapFacts, g: Option<&MapFacts>) -> Option<bool> {
    let bounded = f.bounded_type? && g.map_or(Some(true), |g| g.bounded_type)?;
    let same = match g {
        Some(g) => {
            let (a, b) = (f.alpha_prefix.as_ref()?, g.alpha_prefix.as_ref()?);
            let k = a.len().min(b.len());
            a[..k] == b[..k]
        }
        None => true,
    };
    Some(bounded && same)
}

fn pair_verdicts(fl: &str, f: &MapFacts, gl: &str, g: &MapFacts, tol: f64) -> Vec<Verdict> {
    let (Some(sf), Some(sg)) = (&f.singular_products, &g.singular_products) else {
        return Vec::new();
    };
    let hyp = hypotheses(f, Some(g));
    let v = |predicate, premise, conclusion| Verdict {
        predicate,
        f: fl.to_string(),
        g: Some(gl.to_string()),
        hypotheses_met: hyp,
        premise,
        conclusion: if premise { conclusion } else { "none" },
    };
    let card = sf.len() != sg.len();
    let foreign = sg.iter().any(|p| !contains(sf, *p, tol));
    let missing = sf.iter().any(|p| !contains(sg, *p, tol));
    let (jf, jg) = (f.log_jumps.clone().unwrap_or_default(), g.log_jumps.clone().unwrap_or_default());
    let two_break = jf.len() == 2
        && jg.len() == 2
        && f.distinct_orbits == Some(true)
        && g.distinct_orbits == Some(true)
        && jf.iter().any(|j| !contains(&jg, *j, tol))
        && ((jf[0] + jf[1]) - (jg[0] + jg[1])).abs() <= tol;
    let (df, dg) = (f.d_property.unwrap_or(false), g.d_property.unwrap_or(false));
    vec![
        v("singular_orbit_count", card, "singular"),
        v("jump_product_set", foreign, "singular"),
        v("two_break_jumps", two_break, "singular"),
        v("d_property_gained", df && !dg, "singular"),
        v("d_property_shared", df && dg, "absolutely_continuous"),
        v("not_break_equivalent", card || foreign || missing, "singular"),
    ]
}

pub fn report(a: &ReportArgs, _ctx: &Ctx) -> Result<Bundle, CliError> {
    let mut bundles = Vec::new();
    let mut maps: BTreeMap<String, MapFacts> = BTreeMap::new();
    // Labels in order of first appearance among orbits bundles.
    let mut order: Vec<String> = Vec::new();
    for dir in &a.inputs {
        let manifest = read_json(&dir.join("manifest.json"))?;
        let command = manifest["command"]
            .as_str()
            .ok_or_else(|| CliError::config(format!("{}/manifest.json", dir.display()), "no command"))?
            .to_string();
        let result = read_json(&dir.join(format!("{command}.json")))?;
        let label = manifest["inputs"]["map"]["label"].as_str().map(String::from);
        if let Some(l) = &label {
            absorb(maps.entry(l.clone()).or_default(), &command, &result);
            if command == "orbits" && !order.contains(l) {
                order.push(l.clone());
            }
        }
        bundles.push(BundleEntry {
            dir: dir.clone(),
            command,
            map: label,
            invariant_violation: manifest["invariant_violation"].as_str().map(String::from),
        });
    }

    let mut verdicts = Vec::new();
    for l in &order {
        let f = &maps[l];
        let Some(d) = f.d_property else { continue };
        verdicts.push(Verdict {
            predicate: "invariant_measure",
            f: l.clone(),
            g: None,
            hypotheses_met: hypotheses(f, None),
            premise: true,
            conclusion: if d { "equivalent" } else { "singular" },
        });
        // For PL maps the (D)-property and equivalence of the measure coincide;
        // the measured profile trend should side with the prediction.
        if let Some(trend) = f.profile_trend.as_deref() {
            let agrees = if d { trend == "stable" } else { trend == "concentrating" };
            verdicts.push(Verdict {
                predicate: "profile_matches_measure",
                f: l.clone(),
                g: None,
                hypotheses_met: hypotheses(f, None),
                premise: agrees,
                conclusion: if agrees { "consistent" } else { "none" },
            });
        }
    }
    for fl in &order {
        for gl in &order {
            if fl != gl {
                verdicts.extend(pair_verdicts(fl, &maps[fl], gl, &maps[gl], a.tol_log));
            }
        }
    }

    let mut tab = Table::new(&[
        ("predicate", "name of the predicate"),
        ("f", "first map label"),
        ("g", "second map label (empty for single-map predicates)"),
        ("hypotheses_met", "common bounded-type rotation number: true, false or unknown"),
        ("premise", "whether the predicate's premise holds"),
        ("conclusion", "conclusion drawn from the premise; none when it fails"),
    ]);
    for v in &verdicts {
        tab.push(vec![
            v.predicate.to_string(),
            v.f.clone(),
            v.g.clone().unwrap_or_default(),
            v.hypotheses_met.map_or("unknown".to_string(), |b| b.to_string()),
            v.premise.to_string(),
            v.conclusion.to_string(),
        ]);
    }
    let broken: Vec<String> =
        bundles.iter().filter(|b| b.invariant_violation.is_some()).map(|b| b.dir.display().to_string()).collect();
    let inputs = serde_json::json!({"bundles": a.inputs});
    Ok(Bundle::new("report", ReportOut { bundles, maps, verdicts })
        .with_table(tab)
        .with_inputs(inputs)
        .violated_if(!broken.is_empty(), format!("input bundles with violations: {}", broken.join(", "))))
}
