//! Command-line driver: argument resolution, run records, sweeps and replay.
//!
//! [`run`] is the whole program minus process exit, so it can be driven
//! in-process by tests.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod record;
pub mod sweep;

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};
use syncap_core::exact::EnumerationGuard;

use args::{Cli, Command, Common, ReplayArgs};
use commands::{execute, Params, DEFAULT_SEED};
use config::Config;
use error::CliError;
use record::RunRecord;

/// Default results directory for sweeps.
pub const DEFAULT_SWEEP_DIR: &str = "syncap-results";

/// Captured process result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: rendered,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: rendered,
                },
            };
        }
    };
    match dispatch(cli.command) {
        Ok(o) => o,
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn dispatch(command: Command) -> Result<Outcome, CliError> {
    let guard = EnumerationGuard::from_env();
    let (params, common, cfg) = match command {
        Command::Replay(a) => return replay(a, &guard),
        Command::Series(a) => {
            let c = a.common.clone();
            let cfg = Config::load(c.config.as_deref())?;
            (commands::resolve_series(a, &cfg)?, c, cfg)
        }
        Command::Law(a) => {
            let c = a.common.clone();
            let cfg = Config::load(c.config.as_deref())?;
            (commands::resolve_law(a, &cfg)?, c, cfg)
        }
        Command::Mi(a) => {
            let c = a.common.clone();
            let cfg = Config::load(c.config.as_deref())?;
            (commands::resolve_mi(a, &cfg)?, c, cfg)
        }
        Command::Ba(a) => {
            let c = a.common.clone();
            let cfg = Config::load(c.config.as_deref())?;
            (commands::resolve_ba(a, &cfg)?, c, cfg)
        }
        Command::Mc(a) => {
            let c = a.common.clone();
            let cfg = Config::load(c.config.as_deref())?;
            (commands::resolve_mc(a, c.seed, &cfg)?, c, cfg)
        }
        Command::Sweep(a) => {
            let c = a.common.clone();
            let cfg = Config::load(c.config.as_deref())?;
            (commands::resolve_sweep(a, c.seed, &cfg)?, c, cfg)
        }
    };
    let seed = seed_of(&params, &common, &cfg)?;
    let out: Option<PathBuf> = cfg.opt(common.out.clone(), "out")?;

    let report = execute(&params, &guard)?;
    let mut record = RunRecord::new(params.command(), params.to_value(), seed, report.results);
    let mut text = report.text;

    // sweeps always persist; other commands only when --out is set
    let persist = match report.sweep {
        Some(_) => Some(
            out.clone()
                .unwrap_or_else(|| PathBuf::from(DEFAULT_SWEEP_DIR)),
        ),
        None => out.clone(),
    };
    if let (Some(table), Some(dir)) = (&report.sweep, &persist) {
        let (csv, js) = table.write(dir)?;
        text.push_str(&format!("wrote {} and {}\n", csv.display(), js.display()));
    }
    if let (Params::Ba(p), Some(dir)) = (&params, &out) {
        let ctx = running_min(dir, p.alpha, &record)?;
        text.push_str(&format!(
            "running min over {} persisted runs at alpha={}: {:.9} (n={})\n",
            ctx["runs"],
            p.alpha,
            ctx["min_upper"].as_f64().unwrap_or(f64::NAN),
            ctx["min_n"]
        ));
        record.meta.context = Some(ctx);
    }
    if let Some(dir) = &persist {
        record::append(dir, &record)?;
    }

    let stdout = if common.json {
        serde_json::to_string_pretty(&record)? + "\n"
    } else {
        text
    };
    Ok(Outcome {
        code: report.code,
        stdout,
        stderr: String::new(),
    })
}

fn seed_of(params: &Params, common: &Common, cfg: &Config) -> Result<u64, CliError> {
    Ok(match params {
        Params::Mc(p) => p.seed,
        Params::Sweep(p) => p.seed,
        _ => cfg.get(common.seed, "seed", DEFAULT_SEED)?,
    })
}

/// Minimum certified upper bound over this run and every persisted `ba`
/// record at the same alpha.
fn running_min(dir: &Path, alpha: f64, current: &RunRecord) -> Result<Value, CliError> {
    let previous = record::load(&record::runs_path(dir))?;
    let candidates = previous
        .iter()
        .filter(|r| r.command == "ba" && r.params["alpha"].as_f64() == Some(alpha))
        .chain(std::iter::once(current));
    let mut best: Option<(f64, u64)> = None;
    let mut runs = 0;
    for r in candidates {
        runs += 1;
        if let (Some(u), Some(n)) = (r.results["upper_bound"].as_f64(), r.params["n"].as_u64()) {
            if best.is_none_or(|(b, _)| u < b) {
                best = Some((u, n));
            }
        }
    }
    let (min_upper, min_n) = best.map_or((Value::Null, Value::Null), |(u, n)| (json!(u), json!(n)));
    Ok(json!({ "runs": runs, "min_upper": min_upper, "min_n": min_n }))
}

fn replay(a: ReplayArgs, guard: &EnumerationGuard) -> Result<Outcome, CliError> {
    let records = record::load(&a.record)?;
    if records.is_empty() {
        return Err(CliError::Usage(format!(
            "{} holds no records",
            a.record.display()
        )));
    }
    let idx = match a.line {
        None => records.len() - 1,
        Some(k) if (1..=records.len()).contains(&k) => k - 1,
        Some(k) => {
            return Err(CliError::Usage(format!(
                "--line {k} outside 1..={}",
                records.len()
            )))
        }
    };
    let rec = &records[idx];
    let params = Params::from_record(&rec.command, &rec.params)?;
    let report = execute(&params, guard)?;
    let fresh = serde_json::to_string(&report.results)?;
    let stored = serde_json::to_string(&rec.results)?;
    if fresh != stored {
        return Err(CliError::ReplayMismatch(format!(
            "record {} ({}) produced different results",
            idx + 1,
            rec.command
        )));
    }
    let stdout = if a.common.json {
        serde_json::to_string_pretty(&json!({
            "replayed": idx + 1,
            "command": rec.command,
            "identical": true,
        }))? + "\n"
    } else {
        format!("record {} ({}): results identical\n", idx + 1, rec.command)
    };
    Ok(Outcome {
        code: report.code,
        stdout,
        stderr: String::new(),
    })
}
