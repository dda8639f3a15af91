//! Validation and dispatch of each subcommand.

use std::fmt;

use anyhow::{bail, Context, Result};
use solitons_core::ground_state::{
    continuation, minimize_nsp_global, minimize_nsp_ground, solve_nls_ground, BranchSpec,
    SolveReport, SolverConfig, SweepParameter,
};
use solitons_core::limits::{
    nonexistence_sweep, nonrelativistic_limit_study, two_branch_study, BranchTable, LimitRow,
};
use solitons_core::params::{admissible, regime_report};
use solitons_core::{Params, RadialGrid};

use crate::config::{Format, Settings};
use crate::output::{emit, real, resolve_target, SolutionDocument, Table};
use crate::Command;

pub enum Status {
    Complete,
    Truncated(String),
}

/// A value the command needs was given neither as a flag nor in the config file.
#[derive(Debug)]
pub struct MissingValue(pub &'static str);

impl fmt::Display for MissingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse_config: missing required value `--{}`", self.0)
    }
}

impl std::error::Error for MissingValue {}

/// Settings after merging and defaulting, ready for a command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    pub settings: Settings,
    pub grid: RadialGrid,
    pub solver: SolverConfig,
    pub format: Format,
}

impl RunConfig {
    pub fn from_command(command: &Command) -> Result<Self> {
        let flags = command.flags();
        let file = match &flags.config {
            Some(path) => Settings::parse_file(path)?,
            None => Settings::default(),
        };
        Self::new(command.name(), file.overlay(flags.settings()))
    }

    pub fn new(command: &'static str, settings: Settings) -> Result<Self> {
        let m = need(settings.m, "m")?;
        let mu = need(settings.mu, "mu")?;
        let r_max = settings
            .r_max
            .unwrap_or_else(|| (1e10f64).ln() / (m * mu).abs().sqrt());
        let grid = RadialGrid::new(settings.n.unwrap_or(2000), r_max)
            .context("parse_config: grid")?;
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            tol_grad: settings.tol_grad.unwrap_or(defaults.tol_grad),
            max_iter: settings.max_iter.unwrap_or(defaults.max_iter),
            ..defaults
        };
        solver.validate().context("parse_config")?;
        let solve = command.starts_with("solve");
        let format = settings
            .format
            .unwrap_or(if solve { Format::Json } else { Format::Csv });
        Ok(Self {
            command,
            settings,
            grid,
            solver,
            format,
        })
    }

    fn p(&self) -> Result<f64> {
        need(self.settings.p, "p")
    }

    fn q(&self) -> Result<f64> {
        need(self.settings.q, "q")
    }

    fn c(&self) -> Result<f64> {
        need(self.settings.c, "c")
    }

    fn m(&self) -> f64 {
        self.settings.m.expect("checked in RunConfig::new")
    }

    fn mu(&self) -> f64 {
        self.settings.mu.expect("checked in RunConfig::new")
    }

    fn write(&self, bytes: &[u8]) -> Result<()> {
        let ext = self.format.to_string();
        let target = resolve_target(self.settings.out.as_deref(), self.command, &ext);
        emit(target.as_deref(), bytes)
    }

    fn write_json<T: serde::Serialize>(&self, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(&bytes)
    }
}

fn need<T>(v: Option<T>, key: &'static str) -> Result<T> {
    v.ok_or_else(|| MissingValue(key).into())
}

fn check(params: &Params) -> Result<()> {
    let d = admissible(params);
    if !d.admissible {
        bail!("admissible: {}", d.violations.join("; "));
    }
    Ok(())
}

pub fn run(command: &Command) -> Result<Status> {
    let rc = RunConfig::from_command(command)?;
    if let Some(jobs) = command.flags().jobs {
        if jobs == 0 {
            bail!("parse_config: --jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("thread pool")?;
    }
    match command {
        Command::SolveNls(_) => solve_nls(&rc),
        Command::SolveNsp(_) => solve_nsp(&rc),
        Command::SolveNmkg(_) => solve_nmkg(&rc),
        Command::LimitStudy(_) => limit_study(&rc),
        Command::TwoBranchStudy(_) => two_branch(&rc),
        Command::RegimeReport(_) => regime(&rc),
        Command::NonexistenceSweep(_) => nonexistence(&rc),
    }
}

fn write_solution(rc: &RunConfig, report: &SolveReport) -> Result<Status> {
    let doc = SolutionDocument::new(rc.command, report);
    match rc.format {
        Format::Json => rc.write_json(&doc)?,
        Format::Csv => rc.write(&doc.to_csv()?)?,
    }
    Ok(Status::Complete)
}

fn solve_nls(rc: &RunConfig) -> Result<Status> {
    let p = rc.p()?;
    // only m, mu and p enter the NLS equation; q is a placeholder for the check
    check(&Params::nsp(rc.m(), rc.mu(), 1.0, p))?;
    let report = solve_nls_ground(&Params::nsp(rc.m(), rc.mu(), 0.0, p), &rc.grid, &rc.solver)?;
    write_solution(rc, &report)
}

fn nsp_solution(params: &Params, grid: &RadialGrid, config: &SolverConfig) -> Result<SolveReport> {
    if params.p > 3.0 {
        Ok(minimize_nsp_ground(params, grid, config)?)
    } else if params.p < 3.0 {
        Ok(minimize_nsp_global(params, grid, config)?)
    } else {
        bail!("solve: p = 3 is outside both the ground-state range 3 < p < 6 and the global-minimiser range 2 < p < 3")
    }
}

fn solve_nsp(rc: &RunConfig) -> Result<Status> {
    let params = Params::nsp(rc.m(), rc.mu(), rc.q()?, rc.p()?);
    check(&params)?;
    let report = nsp_solution(&params, &rc.grid, &rc.solver)?;
    write_solution(rc, &report)
}

fn solve_nmkg(rc: &RunConfig) -> Result<Status> {
    let c = rc.c()?;
    let params = Params::nsp(rc.m(), rc.mu(), rc.q()?, rc.p()?).with_c(c.is_finite().then_some(c));
    check(&params)?;
    let nsp = params.with_c(None);
    let seed = if params.p > 3.0 {
        minimize_nsp_ground(&nsp, &rc.grid, &rc.solver)?
    } else if params.p < 3.0 {
        // the branch through the NLS soliton
        let w0 = solve_nls_ground(&nsp, &rc.grid, &rc.solver)?;
        let spec = BranchSpec {
            parameter: SweepParameter::Q,
            values: vec![nsp.q],
        };
        let branch = continuation(&spec, &nsp.with_q(0.0), &w0, &rc.solver)?;
        if let Some(t) = branch.truncated {
            return Ok(Status::Truncated(format!("q = {}: {}", t.value, t.reason)));
        }
        branch.last().report.clone()
    } else {
        bail!("solve: p = 3 has no seed branch (use 2 < p < 3 or 3 < p < 6)")
    };
    let Some(c) = params.c else {
        return write_solution(rc, &seed);
    };
    let spec = BranchSpec {
        parameter: SweepParameter::C,
        values: vec![c],
    };
    let branch = continuation(&spec, &nsp, &seed, &rc.solver)?;
    if let Some(t) = branch.truncated {
        return Ok(Status::Truncated(format!("c = {}: {}", t.value, t.reason)));
    }
    write_solution(rc, &branch.last().report)
}

fn check_list(base: &Params, cs: &[f64]) -> Result<()> {
    for &c in cs {
        check(&base.with_c(Some(c)))?;
    }
    Ok(())
}

fn limit_row(r: &LimitRow) -> [String; 5] {
    [
        real(r.c),
        real(r.energy),
        real(r.energy_gap),
        real(r.h1_gap),
        real(r.h2_gap),
    ]
}

fn order_note(name: &str, v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{name} = {}", real(v)),
        None => format!("{name} = none"),
    }
}

fn limit_study(rc: &RunConfig) -> Result<Status> {
    let params = Params::nsp(rc.m(), rc.mu(), rc.q()?, rc.p()?);
    let cs = need(rc.settings.c_list.clone(), "c_list")?;
    check(&params)?;
    check_list(&params, &cs)?;
    let study = nonrelativistic_limit_study(&params, &rc.grid, &cs, &rc.solver)?;
    match rc.format {
        Format::Json => rc.write_json(&study)?,
        Format::Csv => {
            let mut t = Table::new(&["c", "energy", "energy_gap", "h1_gap", "h2_gap"])?;
            for r in &study.rows {
                t.row(limit_row(r))?;
            }
            t.note(format!("e_infty = {}", real(study.e_infty)));
            t.note(order_note("energy_order", study.energy_order));
            t.note(order_note("h1_order", study.h1_order));
            t.note(order_note("h2_order", study.h2_order));
            if let Some(tr) = &study.truncated {
                t.note(format!("truncated at c = {}: {}", tr.value, tr.reason));
            }
            rc.write(&t.into_bytes()?)?;
        }
    }
    Ok(match study.truncated {
        Some(t) => Status::Truncated(format!("c = {}: {}", t.value, t.reason)),
        None => Status::Complete,
    })
}

fn two_branch(rc: &RunConfig) -> Result<Status> {
    let p = rc.p()?;
    let qs = need(rc.settings.q_list.clone(), "q_list")?;
    let cs = need(rc.settings.c_list.clone(), "c_list")?;
    if qs.is_empty() {
        bail!("parse_config: q_list is empty");
    }
    let base = Params::nsp(rc.m(), rc.mu(), qs[0], p);
    for &q in &qs {
        check(&base.with_q(q))?;
        check_list(&base.with_q(q), &cs)?;
    }
    let study = two_branch_study(&base, &rc.grid, &qs, &cs, &rc.solver)?;
    let mut problems = Vec::new();
    for cell in &study.cells {
        for (name, b) in [("u", &cell.u_branch), ("v", &cell.v_branch)] {
            match b {
                Err(e) => problems.push(format!("q = {} {name} branch: {e}", cell.q)),
                Ok(BranchTable {
                    truncated: Some(t), ..
                }) => problems.push(format!("q = {} {name} branch at c = {}: {}", cell.q, t.value, t.reason)),
                Ok(_) => {}
            }
        }
    }
    match rc.format {
        Format::Json => rc.write_json(&study)?,
        Format::Csv => {
            let mut t = Table::new(&[
                "q", "branch", "c", "energy", "energy_gap", "h1_gap", "h2_gap", "margin",
            ])?;
            for cell in &study.cells {
                for (name, b) in [("u", &cell.u_branch), ("v", &cell.v_branch)] {
                    let Ok(b) = b else { continue };
                    for r in &b.rows {
                        let margin = cell
                            .margins
                            .iter()
                            .find(|(c, _)| *c == r.c)
                            .map(|(_, m)| real(*m))
                            .unwrap_or_default();
                        let [c, e, eg, h1, h2] = limit_row(r);
                        t.row([real(cell.q), name.into(), c, e, eg, h1, h2, margin])?;
                    }
                    t.note(format!(
                        "q = {} {name} branch: e_infty = {}, h1_infty = {}",
                        real(cell.q),
                        real(b.e_infty),
                        real(b.h1_infty)
                    ));
                }
                if let Some((_, m)) = cell.margins.iter().find(|(c, _)| c.is_infinite()) {
                    t.note(format!("q = {} margin at c = inf: {}", real(cell.q), real(*m)));
                }
            }
            for pr in &problems {
                t.note(pr.clone());
            }
            rc.write(&t.into_bytes()?)?;
        }
    }
    Ok(if problems.is_empty() {
        Status::Complete
    } else {
        Status::Truncated(problems.join("; "))
    })
}

fn regime(rc: &RunConfig) -> Result<Status> {
    let c = rc.c()?;
    if !c.is_finite() {
        bail!("regime_report: requires finite c");
    }
    let params = Params::nmkg(rc.m(), rc.mu(), rc.q()?, c, rc.p()?);
    // p outside (2, 6) is reported against the nonexistence condition, not rejected
    let violations: Vec<String> = admissible(&params)
        .violations
        .into_iter()
        .filter(|v| !v.starts_with("requires 2 < p < 6"))
        .collect();
    if !violations.is_empty() {
        bail!("admissible: {}", violations.join("; "));
    }
    let report = regime_report(&params)?;
    match rc.format {
        Format::Json => rc.write_json(&report)?,
        Format::Csv => {
            let mut t = Table::new(&["kind", "name", "condition", "holds"])?;
            for (kind, list) in [("existence", &report.existence), ("nonexistence", &report.nonexistence)] {
                for cond in list {
                    t.row([kind, &cond.name, &cond.statement, if cond.holds { "true" } else { "false" }])?;
                }
            }
            t.note(format!("m_bar = {}", real(report.m_bar)));
            t.note(format!("e = {}", real(report.e)));
            t.note(format!("omega = {}", real(report.omega)));
            t.note(format!("g = {}", real(report.g)));
            t.note(format!("h = {}", real(report.h)));
            rc.write(&t.into_bytes()?)?;
        }
    }
    Ok(Status::Complete)
}

fn nonexistence(rc: &RunConfig) -> Result<Status> {
    let base = Params::nsp(rc.m(), rc.mu(), rc.q()?, rc.settings.p.unwrap_or(4.0));
    let report = nonexistence_sweep(&base, &rc.grid, &rc.solver);
    match rc.format {
        Format::Json => rc.write_json(&report)?,
        Format::Csv => {
            let mut t = Table::new(&[
                "p",
                "check",
                "outcome",
                "iterations",
                "relative_gradient",
                "initial_max",
                "final_max",
                "detail",
            ])?;
            for v in &report.validation {
                let outcome = if v.accepted { "accepted" } else { "rejected" };
                t.row([real(v.p), "validation".into(), outcome.into(), String::new(), String::new(), String::new(), String::new(), v.message.clone()])?;
            }
            for f in &report.flows {
                t.row([
                    real(f.p),
                    "descent_flow".into(),
                    f.status.clone(),
                    f.iterations.to_string(),
                    real(f.relative_gradient),
                    real(f.initial_max),
                    real(f.final_max),
                    String::new(),
                ])?;
            }
            rc.write(&t.into_bytes()?)?;
        }
    }
    Ok(Status::Complete)
}

