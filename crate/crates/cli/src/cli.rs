use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Experiments on circle homeomorphisms with break points.
///
/// Map arguments accept a config map name, a built-in name (`golden`,
/// `two_break`, `two_break_2`, `oracle`), inline JSON, or a path to a JSON
/// map spec.
#[derive(Debug, Parser)]
#[command(name = "breakcircle", version, about)]
pub struct Cli {
    /// Experiment config (versioned JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write a report bundle into this directory instead of printing JSON.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Working precision in bits (at least 128).
    #[arg(long, global = true)]
    pub precision: Option<usize>,
    /// Seed for sampled checks; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Rotation number (`surd(d,b,c)`, `[a1,...]` or a decimal); overrides
    /// the config and the map spec.
    #[arg(long, global = true)]
    pub rotation: Option<String>,
    /// Print the CSV series to stdout instead of the JSON result.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Record wall time in the manifest (makes manifests run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Continued-fraction prefix of a rotation number.
    Rotno(RotnoArgs),
    /// Dynamical partition of a map at one depth.
    Partition(PartitionArgs),
    /// Denjoy, Finzi, comparability and decay margins over a window.
    Verify(VerifyArgs),
    /// Collapse each break connection onto one break.
    Reduce(ReduceArgs),
    /// Tabulate the conjugacy between two maps.
    Conjugate(ConjugateArgs),
    /// Concentration profile of a conjugacy.
    Singularity(SingularityArgs),
    /// Ratio distortion trace along a depth window.
    Distort(DistortArgs),
    /// Break orbits, connections and jump products.
    Orbits(OrbitsArgs),
    /// Rank of the jump system.
    Rank(RankArgs),
    /// Summarise earlier bundles and evaluate the measure and singularity predicates.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RotnoArgs {
    /// Map whose rotation number is expanded.
    #[arg(long, required_unless_present = "alpha")]
    pub map: Option<String>,
    /// Expand this rotation number directly.
    #[arg(long, conflicts_with = "map")]
    pub alpha: Option<String>,
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PartitionArgs {
    #[arg(long, default_value = "golden")]
    pub map: String,
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    #[arg(long, default_value = "0")]
    pub x0: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value = "two_break")]
    pub map: String,
    /// Levels as `start:end[:step]` or a comma list; defaults to the
    /// config window, then `5:11`.
    #[arg(long)]
    pub window: Option<String>,
    /// Sample points for the Denjoy check.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Sampled pairs for the Finzi and comparability checks.
    #[arg(long, default_value_t = 200)]
    pub pair_samples: usize,
    /// Base point of the partitions used for the decay fit.
    #[arg(long, default_value = "0")]
    pub x0: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReduceArgs {
    #[arg(long)]
    pub map: String,
    #[arg(long, default_value_t = 233)]
    pub max_iter: usize,
    /// Depth to which the rotation number prefix must be preserved.
    #[arg(long, default_value_t = 6)]
    pub prefix_depth: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConjugateArgs {
    #[arg(long)]
    pub map_f: String,
    #[arg(long, default_value = "golden")]
    pub map_g: String,
    /// Table length is `q_depth`.
    #[arg(long, default_value_t = 13)]
    pub depth: usize,
    #[arg(long, default_value = "0")]
    pub x0: String,
    #[arg(long, default_value = "0")]
    pub y0: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SingularityArgs {
    /// Map conjugated to its rotation.
    #[arg(long, required_unless_present = "table")]
    pub map: Option<String>,
    /// `conjugate.csv` from an earlier run.
    #[arg(long, conflicts_with = "map")]
    pub table: Option<PathBuf>,
    /// Grid cells; defaults to a tenth of the sample count.
    #[arg(long)]
    pub grid: Option<usize>,
    /// q-indices of the sample counts, e.g. `14,18,22`. With `--table`,
    /// prefixes of the table are used.
    #[arg(long)]
    pub depths: Option<String>,
    /// Resolution of the emitted `(p, s(p))` curve.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjKind {
    /// `h = id`; only meaningful when `f = g`.
    Identity,
    /// Composition of the closed-form conjugacies to the rotation.
    Oracle,
    /// Interpolated orbit table.
    Computed,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistortArgs {
    #[arg(long)]
    pub map_f: String,
    #[arg(long)]
    pub map_g: String,
    #[arg(long, value_enum, default_value = "computed")]
    pub conj: ConjKind,
    /// Break of `f`: index into its break list or `@x`.
    #[arg(long, default_value = "0")]
    pub c: String,
    /// Partner break of `f` off the orbit of `c`.
    #[arg(long)]
    pub c1: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.04)]
    pub gamma: f64,
    /// Trace levels; defaults to the config window, then `9:13:2`.
    #[arg(long)]
    pub window: Option<String>,
    /// Classification levels (at least five odd levels).
    #[arg(long, default_value = "5:17:2")]
    pub class_window: String,
    #[arg(long, default_value = "0.25")]
    pub x0: String,
    #[arg(long, default_value = "0.1")]
    pub delta: String,
    #[arg(long, default_value_t = 233)]
    pub max_iter: usize,
    /// q-index of the table behind `--conj computed`.
    #[arg(long, default_value_t = 18)]
    pub conj_depth: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OrbitsArgs {
    #[arg(long)]
    pub map: String,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankArgs {
    #[arg(long)]
    pub q: usize,
    /// Random fillings instead of the exhaustive sweep.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Bundle directories written by earlier runs.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Tolerance on log jump products when comparing maps.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_log: f64,
}
