//! `bip-lab`: command-line front end for the biplab library.core.

mod args;
mod commands;

use std::path::Path;
use std::process::ExitCode;

use biplab::io;
use biplab::report::Report;
use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Value};

use args::{Cli, Command, Format, Output, ReportArgs, SobolevMode};
use commands::{CliError, CliResult, Context, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match setup().and_then(|ctx| execute(&cli.command, ctx)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    ExitCode::from(code)
}

fn env_number<T: std::str::FromStr>(name: &str) -> CliResult<Option<T>> {
    match std::env::var(name) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::input(format!("{name}={v:?} is not a valid number"))),
        Err(_) => Ok(None),
    }
}

fn setup() -> CliResult<Context> {
    if let Some(threads) = env_number::<usize>("BIPLAB_THREADS")? {
        if threads == 0 {
            return Err(CliError::input("BIPLAB_THREADS must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::input(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(Context {
        seed: env_number("BIPLAB_SEED")?.unwrap_or(0),
    })
}

/// Runs one command, prints its summary and writes its report.
fn execute(command: &Command, ctx: Context) -> CliResult<u8> {
    if let Command::Report(a) = command {
        return report(a, ctx);
    }
    let outcome = dispatch(command, ctx)?;
    println!("{}", outcome.summary);
    if let Some(out) = output_of(command) {
        write_outcome(out, &outcome, ctx)?;
    }
    println!("{}", if outcome.pass { "PASS" } else { "FAIL" });
    Ok(if outcome.pass { 0 } else { 1 })
}

fn dispatch(command: &Command, ctx: Context) -> CliResult<Outcome> {
    match command {
        Command::Validate(a) => commands::validate(a),
        Command::Wasserstein(a) => commands::wasserstein_cmd(a),
        Command::Interpolate(a) => commands::interpolate(a),
        Command::BipVerify(a) => commands::bip_verify_cmd(a, ctx),
        Command::CurvatureCheck(a) => commands::curvature_check(a, ctx),
        Command::Sobolev(a) => match &a.mode {
            Some(SobolevMode::Compare(c)) => commands::sobolev_compare(c),
            None => commands::sobolev(a),
        },
        Command::Pmgh(a) => commands::pmgh(a),
        Command::Report(_) => Err(CliError::input("report cannot be nested in a batch")),
    }
}

fn output_of(command: &Command) -> Option<&Output> {
    match command {
        Command::Validate(a) => Some(&a.output),
        Command::Wasserstein(a) => Some(&a.output),
        Command::Interpolate(a) => Some(&a.output),
        Command::BipVerify(a) => Some(&a.output),
        Command::CurvatureCheck(a) => Some(&a.output),
        Command::Sobolev(a) => match &a.mode {
            Some(SobolevMode::Compare(c)) => Some(&c.common.output),
            None => Some(&a.output),
        },
        Command::Pmgh(a) => Some(&a.output),
        Command::Report(_) => None,
    }
}

fn rows_json(report: &Report) -> Value {
    serde_json::to_value(report)
        .map(|mut v| v["rows"].take())
        .unwrap_or(Value::Null)
}

fn render(format: Format, command: &str, pass: bool, report: &Report, detail: Value, ctx: Context) -> String {
    match format {
        Format::Csv => report.to_csv(),
        Format::Json => {
            let doc = json!({
                "command": command,
                "seed": ctx.seed,
                "pass": pass,
                "rows": rows_json(report),
                "detail": detail,
            });
            serde_json::to_string_pretty(&doc).expect("report serialises") + "\n"
        }
    }
}

fn write_to(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn write_outcome(out: &Output, outcome: &Outcome, ctx: Context) -> CliResult<()> {
    let Some(path) = &out.path else {
        return Ok(());
    };
    let report = Report::new(outcome.rows.clone());
    let text = render(
        out.format,
        outcome.command,
        outcome.pass,
        &report,
        outcome.detail.clone(),
        ctx,
    );
    write_to(path, &text)
}

/// Merges saved reports, or runs a batch of commands in parallel and merges
/// their rows in job order under a `jobNNN/` prefix.
fn report(a: &ReportArgs, ctx: Context) -> CliResult<u8> {
    let mut merged = Report::default();
    let mut jobs = Vec::new();
    let mut worst: u8 = 0;
    for path in &a.inputs {
        let r = io::load_report(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        merged.extend(r.rows);
    }
    if let Some(path) = &a.batch {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let argvs: Vec<Vec<String>> = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: expected a list of argument lists: {e}", path.display())))?;
        let results: Vec<CliResult<(Command, Outcome)>> = argvs
            .par_iter()
            .map(|argv| {
                let cli = Cli::try_parse_from(std::iter::once("bip-lab".to_string()).chain(argv.iter().cloned()))
                    .map_err(|e| CliError::input(e.to_string().trim_end().to_string()))?;
                let outcome = dispatch(&cli.command, ctx)?;
                Ok((cli.command, outcome))
            })
            .collect();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok((command, outcome)) => {
                    if let Some(out) = output_of(&command) {
                        write_outcome(out, &outcome, ctx)?;
                    }
                    let prefix = format!("job{i:03}/");
                    worst = worst.max(if outcome.pass { 0 } else { 1 });
                    println!(
                        "job {i} ({}): {}",
                        outcome.command,
                        if outcome.pass { "PASS" } else { "FAIL" }
                    );
                    jobs.push(json!({ "job": i, "command": outcome.command, "pass": outcome.pass, "summary": outcome.summary }));
                    merged.extend(outcome.rows.into_iter().map(|mut row| {
                        row.check_id = format!("{prefix}{}", row.check_id);
                        row
                    }));
                }
                Err(e) => {
                    println!("job {i}: ERROR {}", e.message);
                    worst = worst.max(e.code);
                    jobs.push(json!({ "job": i, "error": e.message, "code": e.code }));
                }
            }
        }
    }
    let pass = worst == 0 && merged.passed();
    let text = render(a.format, "report", pass, &merged, json!({ "jobs": jobs }), ctx);
    match &a.out {
        Some(path) => write_to(path, &text)?,
        None => print!("{text}"),
    }
    println!(
        "{} rows, {} failing",
        merged.rows.len(),
        merged.rows.iter().filter(|r| !r.pass).count()
    );
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(if worst == 2 {
        2
    } else if pass {
        0
    } else {
        1
    })
}
