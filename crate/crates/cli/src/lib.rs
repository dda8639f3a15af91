//! The `solitons` command-line tool: argument and config-file handling, dispatch to
//! the solvers and studies, and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

use config::{parse_count, parse_list, parse_real, Format, Settings};

#[derive(Debug, Parser)]
#[command(
    name = "solitons",
    version,
    about = "Radial solitary waves of the nonlinear Maxwell-Klein-Gordon and Schrodinger-Poisson systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// NLS soliton w0 (requires p, m, mu)
    SolveNls(Flags),
    /// Schrodinger-Poisson ground state for 3 < p < 6, global minimiser for 2 < p < 3 (requires p, m, mu, q)
    SolveNsp(Flags),
    /// Maxwell-Klein-Gordon solution by continuation from c = infinity (requires p, m, mu, q, c)
    SolveNmkg(Flags),
    /// Energy and H1/H2 gaps to the c = infinity ground state along c_list (requires p, m, mu, q, c_list)
    LimitStudy(Flags),
    /// u and v branches for 2 < p < 3 over q_list x c_list (requires p, m, mu, q_list, c_list)
    TwoBranchStudy(Flags),
    /// Known sufficient existence and nonexistence conditions (requires p, m, mu, q, c)
    RegimeReport(Flags),
    /// Validation verdicts across p and descent flows at p = 5.99, 6.01 (requires m, mu, q)
    NonexistenceSweep(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveNls(_) => "solve-nls",
            Command::SolveNsp(_) => "solve-nsp",
            Command::SolveNmkg(_) => "solve-nmkg",
            Command::LimitStudy(_) => "limit-study",
            Command::TwoBranchStudy(_) => "two-branch-study",
            Command::RegimeReport(_) => "regime-report",
            Command::NonexistenceSweep(_) => "nonexistence-sweep",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::SolveNls(f)
            | Command::SolveNsp(f)
            | Command::SolveNmkg(f)
            | Command::LimitStudy(f)
            | Command::TwoBranchStudy(f)
            | Command::RegimeReport(f)
            | Command::NonexistenceSweep(f) => f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

fn list_arg(s: &str) -> Result<List, String> {
    parse_list(s).map(List)
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Flat `key = value` file; flags override its entries
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Speed of light; `inf` is the Schrodinger-Poisson limit
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Grid intervals [default: 2000]
    #[arg(long, value_parser = parse_count)]
    pub n: Option<usize>,
    /// Domain radius [default: ln(1e10)/sqrt(m mu)]
    #[arg(long = "r_max", visible_alias = "r-max", value_parser = parse_real)]
    pub r_max: Option<f64>,
    /// Gradient stopping threshold [default: 1e-9]
    #[arg(long = "tol_grad", visible_alias = "tol-grad", value_parser = parse_real)]
    pub tol_grad: Option<f64>,
    /// Iteration cap [default: 2000]
    #[arg(long = "max_iter", visible_alias = "max-iter", value_parser = parse_count)]
    pub max_iter: Option<usize>,
    /// Comma-separated values of c
    #[arg(long = "c_list", visible_alias = "c-list", value_parser = list_arg)]
    pub c_list: Option<List>,
    /// Comma-separated values of q
    #[arg(long = "q_list", visible_alias = "q-list", value_parser = list_arg)]
    pub q_list: Option<List>,
    /// Output file; relative paths resolve under SOLITON_OUT_DIR when it is set
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// csv or json [default: json for solves, csv for tables]
    #[arg(long)]
    pub format: Option<Format>,
    /// Worker threads for parameter sweeps
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Flags {
    pub fn settings(&self) -> Settings {
        Settings {
            m: self.m,
            mu: self.mu,
            q: self.q,
            c: self.c,
            p: self.p,
            n: self.n,
            r_max: self.r_max,
            tol_grad: self.tol_grad,
            max_iter: self.max_iter,
            c_list: self.c_list.clone().map(|l| l.0),
            q_list: self.q_list.clone().map(|l| l.0),
            out: self.out.clone(),
            format: self.format,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_TRUNCATED: i32 = 2;

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let name = cli.command.name();
    match commands::run(&cli.command) {
        Ok(commands::Status::Complete) => EXIT_OK,
        Ok(commands::Status::Truncated(msg)) => {
            eprintln!("solitons {name}: branch truncated: {msg}");
            EXIT_TRUNCATED
        }
        Err(e) => {
            eprintln!("solitons {name}: {e:#}");
            if let Some(commands::MissingValue(_)) = e.downcast_ref() {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                    eprintln!("For more information, try '--help'.");
                }
            }
            EXIT_ERROR
        }
    }
}
