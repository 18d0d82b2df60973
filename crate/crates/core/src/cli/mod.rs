//! Command-line surface: one subcommand per procedure, each writing a
//! versioned JSON report and signalling its outcome through the exit code.

pub mod args;
pub mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

pub use args::{Cli, Command, Format};
pub use commands::{execute, Outcome, Status};

use crate::error::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 2;
pub const EXIT_LINEALITY: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

/// `key=value` lines as flags. Blank lines and `#` comments are skipped;
/// `key=true` becomes a bare switch and `key=false` is dropped.
pub fn config_flags(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key=value", n + 1));
        };
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        match v {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Splices the config file's flags in right after the subcommand name, so
/// flags given on the command line override them.
fn with_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let flags = config_flags(&text)?;
    let Some(pos) = argv.iter().skip(1).position(|a| Command::NAMES.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let mut out = argv[..pos + 2].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[pos + 2..]);
    Ok(out)
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::SearchFailed { .. } => EXIT_VERIFICATION_FAILED,
        _ => EXIT_USAGE,
    }
}

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("OPSYS_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| format!("OPSYS_SEED is not an integer: {s}")),
        Err(_) => Ok(None),
    }
}

fn write_output(out_path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> std::io::Result<()> {
    match out_path {
        Some(p) => std::fs::write(p, text),
        None => stdout.write_all(text.as_bytes()),
    }
}

/// Runs one subcommand, writing the report to `--out` or `stdout` and
/// messages to `stderr`. Returns the process exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = argv.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(m) => {
            let _ = writeln!(stderr, "error: {m}");
            return EXIT_USAGE;
        }
    };
    let mut cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let seed = match cli.command.seed_mut() {
        Some(slot) => {
            let s = match slot {
                Some(s) => *s,
                None => match env_seed() {
                    Ok(s) => s.unwrap_or(0),
                    Err(m) => {
                        let _ = writeln!(stderr, "error: {m}");
                        return EXIT_USAGE;
                    }
                },
            };
            *slot = Some(s);
            Some(s)
        }
        None => None,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker threads: {e}");
            return EXIT_USAGE;
        }
    };

    let start = Instant::now();
    let outcome = match pool.install(|| execute(&cli.command, seed.unwrap_or(0))) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return error_code(&e);
        }
    };
    let wall_time = start.elapsed().as_secs_f64();

    let text = match cli.format {
        Format::Csv => match &outcome.csv {
            Some(csv) => csv.clone(),
            None => {
                let _ = writeln!(stderr, "error: {} has no CSV export", cli.command.name());
                return EXIT_USAGE;
            }
        },
        Format::Json => {
            let mut report = json!({
                "schema": SCHEMA_VERSION,
                "command": cli.command.name(),
                "version": env!("CARGO_PKG_VERSION"),
                "seed": seed,
                "config": cli.command,
                "wall_time": wall_time,
                "result": outcome.result,
            });
            if let Some(s) = &outcome.stage_seconds {
                report["stage_wall_time"] = json!(s);
            }
            match serde_json::to_string_pretty(&report) {
                Ok(t) => t + "\n",
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_USAGE;
                }
            }
        }
    };
    if let Err(e) = write_output(cli.out.as_deref(), &text, stdout) {
        let _ = writeln!(stderr, "error: cannot write report: {e}");
        return EXIT_USAGE;
    }
    match outcome.status {
        Status::Ok => EXIT_OK,
        Status::VerificationFailed => EXIT_VERIFICATION_FAILED,
        Status::Lineality => EXIT_LINEALITY,
    }
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
