mod bundle;
mod cli;
mod commands;
mod config;
mod error;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::bundle::RunInfo;
use crate::cli::Cli;
use crate::commands::Ctx;
use crate::config::ExperimentConfig;
use crate::error::{CliError, EXIT_INVARIANT};

fn run(cli: Cli) -> Result<i32, CliError> {
    let start = Instant::now();
    let (cfg, config_given) = match &cli.config {
        Some(p) => (ExperimentConfig::load(p)?, true),
        None => (ExperimentConfig::default(), false),
    };
    let precision = config::resolve_precision(cli.precision, &cfg)?;
    breakcircle::real::set_precision(precision);
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let ctx = Ctx { cfg, seed, rotation: cli.rotation.clone() };

    let bundle = commands::dispatch(&cli.command, &ctx)?;

    let run = RunInfo {
        precision,
        seed,
        args: serde_json::to_value(&cli.command).expect("arguments serialize"),
        config: if config_given { serde_json::to_value(&ctx.cfg).expect("config serializes") } else { serde_json::Value::Null },
        wall_time_ms: cli.timing.then(|| start.elapsed().as_millis()),
    };
    if let Some(dir) = &out {
        for p in bundle::write(dir, &bundle, &run)? {
            eprintln!("wrote {}", p.display());
        }
    }
    if cli.csv {
        match &bundle.table {
            Some(t) => print!("{}", t.to_csv()?),
            None => return Err(CliError::config("--csv", format!("`{}` has no CSV series", bundle.command))),
        }
    } else if out.is_none() {
        print!("{}", bundle::json_text(&bundle.result));
    }
    if let Some(v) = &bundle.violation {
        eprintln!("error: {}: invariant violated: {v}", bundle.command);
        return Ok(EXIT_INVARIANT);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
