//! Command-line front end for the `gauss-avatar` library.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod files;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command, Common};
use commands::Session;
use config::RunConfig;
use error::{status, CliError, CliResult};

pub const THREADS_ENV: &str = "GAUSS_AVATAR_THREADS";

const SUBCOMMANDS: [&str; 9] = [
    "lift-unproject",
    "lift-attend",
    "sample",
    "edit",
    "animate",
    "render",
    "metrics",
    "bench",
    "synth",
];

/// Runs one invocation; `argv` excludes the program name. Returns the exit
/// status.
pub fn run_command(argv: &[String]) -> i32 {
    if let Some(first) = argv.first() {
        if !first.starts_with('-') && first != "help" && !SUBCOMMANDS.contains(&first.as_str()) {
            eprintln!("error: unknown subcommand '{first}'");
            return status::USAGE;
        }
    }
    let cli = match Cli::try_parse_from(std::iter::once("gauss-avatar".to_string()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => status::OK,
                _ => status::USAGE,
            };
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return e.status();
        }
    };
    match pool {
        Some(pool) => pool.install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

fn thread_pool() -> CliResult<Option<rayon::ThreadPool>> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::LiftUnproject(_) => "lift-unproject",
        Command::LiftAttend(_) => "lift-attend",
        Command::Sample(_) => "sample",
        Command::Edit(_) => "edit",
        Command::Animate(_) => "animate",
        Command::Render(_) => "render",
        Command::Metrics(_) => "metrics",
        Command::Bench(_) => "bench",
        Command::Synth(_) => "synth",
    }
}

fn common(c: &Command) -> &Common {
    match c {
        Command::LiftUnproject(a) => &a.common,
        Command::LiftAttend(a) => &a.common,
        Command::Sample(a) => &a.common,
        Command::Edit(a) => &a.common,
        Command::Animate(a) => &a.common,
        Command::Render(a) => &a.common,
        Command::Metrics(a) => &a.common,
        Command::Bench(a) => &a.common,
        Command::Synth(a) => &a.common,
    }
}

fn dispatch(cmd: Command) -> i32 {
    let name = command_name(&cmd);
    let mut session = match Session::new(name, common(&cmd)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(p) = &common(&cmd).manifest {
                let run = RunConfig {
                    command: name.to_string(),
                    ..RunConfig::default()
                };
                emit_manifest(p, manifest_value(&run, None, &[], &[], &Default::default(), Some(&e)));
            }
            return e.status();
        }
    };
    let result = match cmd {
        Command::LiftUnproject(a) => commands::lift_unproject(&mut session, a),
        Command::LiftAttend(a) => commands::lift_attend(&mut session, a),
        Command::Sample(a) => commands::sample(&mut session, a),
        Command::Edit(a) => commands::edit(&mut session, a),
        Command::Animate(a) => commands::animate(&mut session, a),
        Command::Render(a) => commands::render(&mut session, a),
        Command::Metrics(a) => commands::metrics(&mut session, a),
        Command::Bench(a) => commands::bench(&mut session, a),
        Command::Synth(a) => commands::synth(&mut session, a),
    };
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    let manifest = manifest_value(
        &session.resolver.run,
        session.seed,
        &session.outputs,
        &session.frame_hashes,
        &session.report,
        result.as_ref().err(),
    );
    match &session.manifest_path {
        Some(p) => emit_manifest(p, manifest),
        None => echo(&serde_json::to_string_pretty(&manifest).unwrap_or_default()),
    }
    match result {
        Ok(()) => status::OK,
        Err(e) => e.status(),
    }
}

fn manifest_value(
    run: &RunConfig,
    seed: Option<u64>,
    outputs: &[PathBuf],
    frame_hashes: &[String],
    report: &serde_json::Map<String, Value>,
    error: Option<&CliError>,
) -> Value {
    json!({
        "command": run.command,
        "status": if error.is_none() { "ok" } else { "error" },
        "exit_code": error.map_or(status::OK, CliError::status),
        "error": error.map(|e| e.to_string()),
        "seed": seed,
        "versions": {
            "gauss_avatar": gauss_avatar::VERSION,
            "gauss_avatar_cli": env!("CARGO_PKG_VERSION"),
        },
        "surface_rng": gauss_avatar::gaussians::SURFACE_RNG,
        "threads": rayon::current_num_threads(),
        "config": run,
        "config_hash": run.hash(),
        "outputs": outputs,
        "frame_hashes": frame_hashes,
        "report": report,
    })
}

fn emit_manifest(path: &std::path::Path, manifest: Value) {
    let text = serde_json::to_string_pretty(&manifest).unwrap_or_default();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        let _ = std::fs::create_dir_all(dir);
    }
    if let Err(e) = std::fs::write(path, format!("{text}\n")) {
        eprintln!("warning: cannot write manifest {}: {e}", path.display());
    }
    echo(&text);
}

fn echo(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}
