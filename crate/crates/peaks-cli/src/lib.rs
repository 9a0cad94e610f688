//! The `peaks` command line: solve, verify and convert problems read from TOML files,
//! and print the reference tables of the worked example.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod exprfn;
pub mod problem;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{Route, Settings};
pub use crate::error::CliError;
use crate::problem::{parse_problem, Problem};

#[derive(Parser, Debug)]
#[command(name = "peaks", version, about = "Certified stopping indices for peak computation along orbits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Problem file (TOML).
    #[arg(long, short)]
    input: PathBuf,
    /// Grid points per parameter direction in each static solve.
    #[arg(long)]
    grid: Option<usize>,
    /// Zoom rounds around the grid incumbent.
    #[arg(long)]
    refine: Option<usize>,
    /// Terms over which pairs and certificates are verified.
    #[arg(long)]
    horizon: Option<usize>,
    /// Relative tolerance for closed-form cross-checks.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the peaks problem along one of the certificate routes.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "direct", value_parser = ["direct", "klgen", "lyapunov", "classical"])]
        route: String,
    },
    /// Check one artifact of the problem file without solving.
    Verify {
        #[arg(value_parser = ["pair", "klgen", "lyapunov"])]
        what: String,
        #[command(flatten)]
        common: Common,
    },
    /// Turn one certificate into another.
    Convert {
        #[arg(value_parser = ["pair-to-klgen", "klgen-to-pair", "pair-to-lyapunov", "lyapunov-to-pair"])]
        what: String,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute a reference table of the worked example.
    Tables {
        which: u8,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print a problem file for the worked example.
    Example {
        #[arg(long, default_value = "30")]
        p: String,
        #[arg(long, default_value = "1/3")]
        mu: String,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Format {
    Text,
    Csv,
}

/// What a run produced; `main` prints it and exits with `code`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn load(common: &Common) -> Result<(Problem, Settings), CliError> {
    let text = std::fs::read_to_string(&common.input)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", common.input.display())))?;
    let pb = parse_problem(&text)?;
    let file = &pb.file.solver;
    let d = Settings::DEFAULT;
    let st = Settings {
        grid: common.grid.or(file.grid).unwrap_or(d.grid),
        refine: common.refine.or(file.refine_rounds).unwrap_or(d.refine),
        horizon: common.horizon.or(file.horizon).unwrap_or(d.horizon),
        tolerance: common.tolerance.or(file.tolerance).unwrap_or(d.tolerance),
        samples: file.samples.unwrap_or(d.samples),
    };
    if st.grid < 2 || st.horizon == 0 || !(st.tolerance > 0.0) {
        return Err(CliError::Input("need grid >= 2, horizon >= 1 and tolerance > 0".into()));
    }
    Ok((pb, st))
}

fn dispatch(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Solve { common, route } => {
            let (pb, st) = load(&common)?;
            commands::solve(&pb, Route::parse(&route)?, &st)
        }
        Command::Verify { what, common } => {
            let (pb, st) = load(&common)?;
            commands::verify(&pb, &what, &st)
        }
        Command::Convert { what, common } => {
            let (pb, st) = load(&common)?;
            commands::convert(&pb, &what, &st)
        }
        Command::Tables { which, format } => commands::tables(which, matches!(format, Format::Csv)),
        Command::Example { p, mu } => commands::example(&p, &mu),
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(stdout) => Outcome { code: 0, stdout, stderr: String::new() },
        Err(e) => Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}
