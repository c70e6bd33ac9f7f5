//! Command-line driver for the structural analyzer.
//!
//! Every command reads one `.dae` file (or `-` for standard input) and writes
//! a report as text, JSON or Graphviz dot. Exit codes: 0 when an analysis
//! completed, whatever its verdict; 1 for usage, input and parse errors; 2
//! when an internal consistency check failed.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use daesa_core::{Error, Mode, PredecessorRule};

mod commands;
mod dot;
mod report;

pub use report::SCHEMA_VERSION;

#[derive(Debug, Parser)]
#[command(
    name = "daesa",
    version,
    about = "Structural analysis of multimode DAE/dAE models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a model and print its canonical form.
    Parse(Input),
    /// Dulmage-Mendelsohn decomposition of the incidence graph.
    Dm(Selected),
    /// Block triangular form of a structurally nonsingular system.
    Btf(Selected),
    /// Equation and variable offsets by the Σ-method.
    Offsets {
        #[command(flatten)]
        sel: Selected,
        /// Use the non-square variant (more variables than equations).
        #[arg(long)]
        nonsquare: bool,
    },
    /// Differentiation counts by Pantelides' algorithm.
    Pantelides(Selected),
    /// Check whether X is determined by the system with W eliminated.
    Existq {
        #[command(flatten)]
        sel: Selected,
        /// Role partition, e.g. `x=a,b;w=c;y=d`.
        #[arg(long)]
        roles: String,
        #[arg(long, value_enum, default_value_t = Rule::Immediate)]
        rule: Rule,
    },
    /// Smallest difference/differential array determining the leading variables.
    Array {
        #[command(flatten)]
        sel: Selected,
        /// Largest array order to try (defaults to |F| times one more than the
        /// highest degree).
        #[arg(long)]
        k: Option<u32>,
    },
    /// Conflict analysis and restart system at a mode change.
    Modechange {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_mode)]
        from: Mode,
        #[arg(long, value_parser = parse_mode)]
        to: Mode,
    },
    /// Structural analysis of every mode.
    Modes(Input),
}

#[derive(Debug, Args)]
struct Input {
    /// Model file, or `-` for standard input.
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct Selected {
    #[command(flatten)]
    input: Input,
    /// Guard assignment selecting one mode, e.g. `g=true,h=false`.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Rule {
    Immediate,
    Transitive,
}

impl From<Rule> for PredecessorRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Immediate => PredecessorRule::Immediate,
            Rule::Transitive => PredecessorRule::Transitive,
        }
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

/// Why a command did not produce a report.
#[derive(Debug)]
pub(crate) enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli.command) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Internal(msg)) => {
            let _ = writeln!(err, "internal error: {msg}");
            2
        }
    }
}

fn read_input(path: &PathBuf) -> Result<(String, String), Failure> {
    let display = path.display().to_string();
    let text = if display == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Usage(format!("<stdin>: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{display}: {e}")))?
    };
    Ok((display, text))
}

fn execute(command: Command) -> Result<String, Failure> {
    use commands::Request;
    let (input, mode, request) = match command {
        Command::Parse(input) => (input, None, Request::Parse),
        Command::Dm(sel) => (sel.input, sel.mode, Request::Dm),
        Command::Btf(sel) => (sel.input, sel.mode, Request::Btf),
        Command::Offsets { sel, nonsquare } => {
            (sel.input, sel.mode, Request::Offsets { nonsquare })
        }
        Command::Pantelides(sel) => (sel.input, sel.mode, Request::Pantelides),
        Command::Existq { sel, roles, rule } => (
            sel.input,
            sel.mode,
            Request::Existq {
                roles,
                rule: rule.into(),
            },
        ),
        Command::Array { sel, k } => (sel.input, sel.mode, Request::Array { k_max: k }),
        Command::Modechange { input, from, to } => (input, None, Request::Modechange { from, to }),
        Command::Modes(input) => (input, None, Request::Modes),
    };
    let (path, text) = read_input(&input.file)?;
    commands::run(&path, &text, mode.as_ref(), request, input.format)
}
