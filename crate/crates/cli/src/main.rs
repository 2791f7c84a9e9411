//! `bcp`: simulate, compile, measure and check broadcast consensus
//! protocols and the machines that compile to them.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod check;
mod compile;
mod measure;
mod simulate;

/// Exit classes shared by all subcommands.
#[derive(Debug)]
pub enum Fail {
    Counterexample(String),
    Parse(String),
    Runtime(String),
    Timeout(String),
    Budget(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Counterexample(_) => 1,
            Fail::Parse(_) => 2,
            Fail::Runtime(_) => 3,
            Fail::Timeout(_) => 4,
            Fail::Budget(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Counterexample(m) | Fail::Parse(m) | Fail::Runtime(m) | Fail::Timeout(m) | Fail::Budget(m) => m,
        }
    }
}

pub type CmdResult = Result<(), Fail>;

#[derive(Parser)]
#[command(name = "bcp", version, about = "Broadcast consensus protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one execution of a protocol (.bcp) or machine (.cm, .rtm, .sm).
    Simulate(simulate::Args),
    /// Compile a formula, RTM or counter machine.
    Compile(compile::Args),
    /// Measure stabilisation times over a sweep of population sizes.
    Measure(measure::Args),
    /// Exhaustively verify a protocol, or the step BP.
    Check(check::Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Stop {
    Quiescence,
    Stable,
    LastChange,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Compile(a) => compile::run(a),
        Command::Measure(a) => measure::run(a),
        Command::Check(a) => check::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// The given seed, or a fresh one; printed either way.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    let s = seed.unwrap_or_else(rand::random);
    println!("seed={s}");
    s
}

pub fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::Runtime(format!("{}: {e}", path.display())))
}

pub fn write_out(path: Option<&PathBuf>, text: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `x=3,y=2` into symbol counts.
pub fn parse_counts(s: &str) -> Result<Vec<(String, u64)>, Fail> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Fail::Parse(format!("input `{kv}`: expected symbol=count")))?;
            let v = v
                .trim()
                .parse()
                .map_err(|_| Fail::Parse(format!("input `{kv}`: count is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// `5,3` into machine inputs.
pub fn parse_numbers(s: &str) -> Result<Vec<u64>, Fail> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Fail::Parse(format!("input `{v}` is not a number")))
        })
        .collect()
}

/// `# key=value` lines of a resolved configuration.
pub fn header(command: &str, fields: &[(&str, String)]) -> String {
    let mut out = format!("# bcp {command}\n");
    for (k, v) in fields {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out
}

/// The value of `# key=value` in a file header, if present.
pub fn header_field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.trim_start_matches('#').trim().strip_prefix(key)?.strip_prefix('='))
}
