//! Subcommand implementations and the shared input resolution.

mod conj;
mod distort;
mod numbers;
mod orbits;
mod partition;
mod report;

use std::path::Path;

use breakcircle::circlemaps::{rotation_number, BuiltMap, MapSpec};
use breakcircle::{CircleMap, ConvergentTable, Real, RotationSpec};
use serde_json::{json, Value};

use crate::bundle::Bundle;
use crate::cli::Command;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Context};

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    /// `--rotation`, if given.
    pub rotation: Option<String>,
}

pub fn dispatch(cmd: &Command, ctx: &Ctx) -> Result<Bundle, CliError> {
    match cmd {
        Command::Rotno(a) => numbers::rotno(a, ctx),
        Command::Rank(a) => numbers::rank(a, ctx),
        Command::Partition(a) => partition::partition(a, ctx),
        Command::Verify(a) => partition::verify(a, ctx),
        Command::Orbits(a) => orbits::orbits(a, ctx),
        Command::Reduce(a) => orbits::reduce(a, ctx),
        Command::Conjugate(a) => conj::conjugate(a, ctx),
        Command::Singularity(a) => conj::singularity(a, ctx),
        Command::Distort(a) => distort::distort(a, ctx),
        Command::Report(a) => report::report(a, ctx),
    }
}

const TUNED_TWO_BREAK: &str = r#"{"type":"pl","breaks":[{"x":"0","slope_right":"1/2"},{"x":"1/2","slope_right":"3/2"}],
    "shift":{"tune":"surd(5,1,2)","depth":22}}"#;
const TUNED_TWO_BREAK_2: &str = r#"{"type":"pl","breaks":[{"x":"0","slope_right":"2/3"},{"x":"1/2","slope_right":"4/3"}],
    "shift":{"tune":"surd(5,1,2)","depth":22}}"#;
const ORACLE: &str = r#"{"type":"conjugated_rotation","alpha":"surd(5,1,2)",
    "h0":{"type":"pl","breaks":[{"x":"0","slope_right":"1/2"},{"x":"1/2","slope_right":"3/2"}]}}"#;

fn builtin(name: &str) -> Option<&'static str> {
    Some(match name {
        "golden" => r#"{"type":"rotation","alpha":"surd(5,1,2)"}"#,
        "two_break" => TUNED_TWO_BREAK,
        "two_break_2" => TUNED_TWO_BREAK_2,
        "oracle" => ORACLE,
        _ => return None,
    })
}

/// A map argument after resolution.
pub struct Resolved {
    pub label: String,
    pub spec: MapSpec,
    pub built: BuiltMap,
}

impl Resolved {
    pub fn map(&self) -> &CircleMap {
        &self.built.map
    }

    pub fn input(&self) -> Value {
        json!({"label": self.label, "spec": self.spec})
    }
}

impl Ctx {
    /// Inline JSON, a config map name, a built-in name, or a file path.
    pub fn map(&self, reference: &str, flag: &str) -> Result<Resolved, CliError> {
        let parse = |text: &str, path: String| -> Result<MapSpec, CliError> {
            let de = &mut serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let inner = e.path().to_string();
                let full = if inner == "." { path.clone() } else { format!("{path}.{inner}") };
                CliError::config(full, e.into_inner())
            })
        };
        let (label, spec, path) = if reference.trim_start().starts_with('{') {
            ("inline".to_string(), parse(reference, flag.to_string())?, flag.to_string())
        } else if let Some(spec) = self.cfg.maps.get(reference) {
            (reference.to_string(), spec.clone(), format!("maps.{reference}"))
        } else if let Some(text) = builtin(reference) {
            (reference.to_string(), parse(text, reference.to_string())?, reference.to_string())
        } else if Path::new(reference).is_file() {
            let p = Path::new(reference);
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (label, parse(&text, reference.to_string())?, reference.to_string())
        } else {
            return Err(CliError::config(flag, format!("`{reference}` is not a config map, built-in map or file")));
        };
        let built = spec.build().map_err(|e| match e {
            breakcircle::MapError::PrecisionExhausted => CliError::Precision { op: "build map", msg: e.to_string() },
            _ => CliError::config(path, e),
        })?;
        Ok(Resolved { label, spec, built })
    }

    /// Rotation number for maps that share it: `--rotation`, the config,
    /// the map spec, or a certified expansion of the first map.
    pub fn rotation_table(&self, maps: &[&Resolved], depth: usize) -> Result<(ConvergentTable, String), CliError> {
        let expand = |s: &str, path: &str| -> Result<ConvergentTable, CliError> {
            let spec = RotationSpec::parse(s).map_err(|e| CliError::config(path, e))?;
            spec.expand(depth).during("expand rotation number")
        };
        if let Some(r) = &self.rotation {
            return Ok((expand(r, "--rotation")?, r.clone()));
        }
        if let Some(r) = &self.cfg.rotation {
            return Ok((expand(r, "rotation")?, r.clone()));
        }
        for m in maps {
            if let Some(spec) = &m.built.rotation {
                return Ok((spec.expand(depth).during("expand rotation number")?, spec.to_string()));
            }
        }
        let first = maps.first().ok_or_else(|| CliError::config("--rotation", "no rotation number available"))?;
        let t = rotation_number(first.map(), depth).during("rotation number")?;
        let label = format!("certified({})", first.label);
        Ok((t, label))
    }
}

pub fn real_arg(s: &str, flag: &str) -> Result<Real, CliError> {
    Real::parse(s).ok_or_else(|| CliError::config(flag, format!("`{s}` is not a number")))
}

pub fn levels_arg(s: &str, flag: &str, odd: bool) -> Result<Vec<usize>, CliError> {
    let v = crate::config::parse_levels(s).map_err(|m| CliError::config(flag, m))?;
    crate::config::check_increasing(&v, odd).map_err(|m| CliError::config(flag, m))?;
    Ok(v)
}

/// A break of `f` named by index into its break list or as `@x`.
pub fn break_arg(f: &CircleMap, id: &str, flag: &str) -> Result<Real, CliError> {
    let breaks = f.breaks();
    if let Some(x) = id.strip_prefix('@') {
        let x = real_arg(x, flag)?.frac();
        let tol = breakcircle::orbitalg::default_match_tol();
        return breaks
            .iter()
            .find(|b| breakcircle::circle::dist(&b.x, &x) <= tol)
            .map(|b| b.x.clone())
            .ok_or_else(|| CliError::config(flag, format!("no break at {id}")));
    }
    let i: usize = id.parse().map_err(|_| CliError::config(flag, format!("`{id}` is neither an index nor @x")))?;
    breaks
        .get(i)
        .map(|b| b.x.clone())
        .ok_or_else(|| CliError::config(flag, format!("break index {i} out of range ({} breaks)", breaks.len())))
}
