//! Versioned experiment configuration.
//!
//! ```json
//! {
//!   "version": 1,
//!   "maps": {"f": {"type": "pl", "breaks": [...], "shift": {"tune": "surd(5,1,2)", "depth": 22}}},
//!   "rotation": "surd(5,1,2)",
//!   "precision": 256,
//!   "window": "9:13:2",
//!   "thresholds": {"theta_low": 0.05, "theta_mid": 0.15, "bound": 8},
//!   "output": "out",
//!   "seed": 7
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use breakcircle::circlemaps::MapSpec;
use breakcircle::distortion::CellConfig;
use breakcircle::real::{DEFAULT_PRECISION, MIN_PRECISION};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;
pub const PRECISION_ENV: &str = "BREAKCIRCLE_PRECISION";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub maps: BTreeMap<String, MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            maps: BTreeMap::new(),
            rotation: None,
            precision: None,
            window: None,
            thresholds: Thresholds::default(),
            output: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub theta_low: f64,
    pub theta_mid: f64,
    /// Bounded-type bound on the partial quotients.
    pub bound: u64,
    pub concentration_ratio: f64,
    pub stable_spread: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let cell = CellConfig::default();
        let verdict = breakcircle::conjugacy::VerdictConfig::default();
        Thresholds {
            theta_low: cell.theta_low,
            theta_mid: cell.theta_mid,
            bound: verdict.bound,
            concentration_ratio: verdict.concentration_ratio,
            stable_spread: verdict.stable_spread,
        }
    }
}

impl Thresholds {
    pub fn cell(&self) -> CellConfig {
        CellConfig { theta_low: self.theta_low, theta_mid: self.theta_mid, ..CellConfig::default() }
    }

    pub fn verdict(&self) -> breakcircle::conjugacy::VerdictConfig {
        breakcircle::conjugacy::VerdictConfig {
            bound: self.bound,
            concentration_ratio: self.concentration_ratio,
            stable_spread: self.stable_spread,
            ..Default::default()
        }
    }
}

/// Depth levels, as a list or as `start:end[:step]` (inclusive).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Window {
    Levels(Vec<usize>),
    Range(String),
}

impl Window {
    pub fn levels(&self) -> Result<Vec<usize>, String> {
        match self {
            Window::Levels(v) => Ok(v.clone()),
            Window::Range(s) => parse_levels(s),
        }
    }
}

/// Parses `a:b`, `a:b:s` or a comma list `a,b,c`.
pub fn parse_levels(s: &str) -> Result<Vec<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a level"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() > 3 {
            return Err(format!("`{s}`: expected start:end[:step]"));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let step = if parts.len() == 3 { num(parts[2])? } else { 1 };
        if step == 0 || b < a {
            return Err(format!("`{s}`: empty range"));
        }
        Ok((a..=b).step_by(step).collect())
    } else {
        s.split(',').map(num).collect()
    }
}

pub fn check_increasing(levels: &[usize], odd: bool) -> Result<(), String> {
    if levels.is_empty() {
        return Err("no levels".into());
    }
    if let Some(w) = levels.windows(2).find(|w| w[1] <= w[0]) {
        return Err(format!("levels must increase ({} then {})", w[0], w[1]));
    }
    if odd {
        if let Some(n) = levels.iter().find(|&&n| n % 2 == 0) {
            return Err(format!("level {n} is even"));
        }
    }
    if levels[0] == 0 {
        return Err("levels start at 1".into());
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::config("version", format!("unsupported version {} (expected {CONFIG_VERSION})", self.version)));
        }
        if let Some(p) = self.precision {
            check_precision(p).map_err(|m| CliError::config("precision", m))?;
        }
        if let Some(w) = &self.window {
            let levels = w.levels().map_err(|m| CliError::config("window", m))?;
            check_increasing(&levels, true).map_err(|m| CliError::config("window", m))?;
        }
        let t = &self.thresholds;
        if !(0.0 < t.theta_low && t.theta_low < t.theta_mid && t.theta_mid < 1.0) {
            return Err(CliError::config("thresholds", "need 0 < theta_low < theta_mid < 1"));
        }
        if t.bound == 0 {
            return Err(CliError::config("thresholds.bound", "must be positive"));
        }
        if let Some(r) = &self.rotation {
            breakcircle::RotationSpec::parse(r).map_err(|e| CliError::config("rotation", e))?;
        }
        Ok(())
    }

    pub fn window(&self) -> Option<Vec<usize>> {
        self.window.as_ref().and_then(|w| w.levels().ok())
    }
}

pub fn check_precision(bits: usize) -> Result<(), String> {
    if bits < MIN_PRECISION {
        Err(format!("{bits} bits is below the minimum of {MIN_PRECISION}"))
    } else {
        Ok(())
    }
}

/// Flag, then config, then environment, then the library default.
pub fn resolve_precision(flag: Option<usize>, cfg: &ExperimentConfig) -> Result<usize, CliError> {
    if let Some(p) = flag {
        check_precision(p).map_err(|m| CliError::config("--precision", m))?;
        return Ok(p);
    }
    if let Some(p) = cfg.precision {
        return Ok(p);
    }
    if let Ok(v) = std::env::var(PRECISION_ENV) {
        let p: usize = v.trim().parse().map_err(|_| CliError::config(PRECISION_ENV, format!("`{v}` is not a bit count")))?;
        check_precision(p).map_err(|m| CliError::config(PRECISION_ENV, m))?;
        return Ok(p);
    }
    Ok(DEFAULT_PRECISION)
}
