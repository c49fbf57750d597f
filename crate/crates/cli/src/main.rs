mod args;
mod commands;
mod input;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use isodisplay::report::{Report, Verdict};

pub use args::Global;
use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] isodisplay::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 3,
        }
    }
}

fn parse_verdicts(names: &[String]) -> Result<Vec<Verdict>, CliError> {
    let mut out = Vec::new();
    for n in names {
        match n.trim().to_ascii_uppercase().as_str() {
            "NONE" => {}
            "FAIL" => out.push(Verdict::Fail),
            "UNVERIFIED" => out.push(Verdict::Unverified),
            "K-CLOSURE-GAP" => out.push(Verdict::KClosureGap),
            other => return Err(CliError::Usage(format!("unknown verdict {other:?} for --fail-on-verdict"))),
        }
    }
    Ok(out)
}

fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let g = &cli.global;
    if !(g.tolerance > 0.0 && g.tolerance.is_finite()) {
        return Err(CliError::Usage(format!("--tolerance must be positive, got {}", g.tolerance)));
    }
    let (checks, data) = match &cli.command {
        Command::GraphNorm(c) => commands::graph_norm(c)?,
        Command::Gadget(a) => commands::gadget(a)?,
        Command::Display(c) => commands::display(c, g)?,
        Command::FreeSpace(c) => commands::free_space(c, g)?,
        Command::Diag(c) => commands::diag(c, g)?,
        Command::Selftest(a) => commands::selftest(a, g)?,
        Command::Fixtures(a) => commands::fixtures(a.name.as_deref())?,
    };
    let echo: Vec<String> = std::env::args().skip(1).collect();
    Ok(Report::new(echo, checks, data))
}

fn emit(report: &Report, global: &Global) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Invalid(e.to_string()))? + "\n";
    match &global.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            print!("{}", report.summary());
        }
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            eprint!("{}", report.summary());
        }
    }
    Ok(())
}

fn run() -> Result<bool, CliError> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { Err(CliError::Usage(String::new())) } else { Ok(false) };
        }
    };
    let fail_on = parse_verdicts(&cli.global.fail_on_verdict)?;
    if cli.global.threads > 0 {
        isodisplay::par::configure_threads(cli.global.threads);
    }
    let start = Instant::now();
    let report = dispatch(&cli)?;
    emit(&report, &cli.global)?;
    eprintln!("elapsed {:.2} s", start.elapsed().as_secs_f64());
    Ok(report.checks.iter().any(|c| fail_on.contains(&c.verdict)))
}

fn main() -> ExitCode {
    match run() {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_lists() {
        let v = parse_verdicts(&["fail".into(), "K-CLOSURE-GAP".into()]).unwrap();
        assert_eq!(v, vec![Verdict::Fail, Verdict::KClosureGap]);
        assert!(parse_verdicts(&["none".into()]).unwrap().is_empty());
        assert!(matches!(parse_verdicts(&["maybe".into()]), Err(CliError::Usage(_))));
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Invalid("x".into()).exit_code(), 3);
        assert_eq!(CliError::Core(isodisplay::Error::Singular).exit_code(), 3);
    }
}
