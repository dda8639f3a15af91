//! Studies of the nonrelativistic limit `c -> infinity`, the two-branch structure for
//! `2 < p < 3`, the nonexistence range and exponential decay.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::{
    continuation, minimize_nsp_global, minimize_nsp_ground, nehari_flow, solve_nls_ground,
    Branch, BranchSpec, SolveReport, SolverConfig, SweepParameter, Truncation,
};
use crate::params::{admissible, Params};
use crate::radial::{h1_norm, integrate_r3, laplacian_radial, RadialField, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub c: f64,
    pub energy: f64,
    /// `E_c - E_inf` (signed).
    pub energy_gap: f64,
    pub h1_gap: f64,
    /// `|d|_{L2} + |Delta d|_{L2}` with `d = u_c - u_inf`.
    pub h2_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitStudyResult {
    pub params: Params,
    pub e_infty: f64,
    /// Sorted by increasing `c`.
    pub rows: Vec<LimitRow>,
    /// Least-squares slope of `log |E_c - E_inf|` against `log(1/c^2)`.
    pub energy_order: Option<f64>,
    /// Same for the H1 distance.
    pub h1_order: Option<f64>,
    /// Same for the H2 proxy.
    pub h2_order: Option<f64>,
    pub truncated: Option<Truncation>,
}

/// `|d|_{L2} + |Delta d|_{L2}`.
pub fn h2_proxy(d: &RadialField) -> f64 {
    let l2 = integrate_r3(&d.map(|v| v * v)).sqrt();
    let mut vals = laplacian_radial(d).into_values();
    // the last node carries the Dirichlet closure, not a Laplacian
    vals[d.grid().n()] = 0.0;
    let lap = RadialField::from_values_unchecked(*d.grid(), vals);
    l2 + integrate_r3(&lap.map(|v| v * v)).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    slope.is_finite().then_some(slope)
}

fn order_in_inv_c2(rows: &[LimitRow], gap: impl Fn(&LimitRow) -> f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| gap(r).abs() > 0.0)
        .map(|r| ((1.0 / (r.c * r.c)).ln(), gap(r).abs().ln()))
        .unzip();
    fit_slope(&x, &y)
}

/// Descending list of distinct finite `c` values, as continuation needs them.
fn descending(c_list: &[f64]) -> Result<Vec<f64>> {
    let mut cs: Vec<f64> = c_list.to_vec();
    if cs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::Config(format!(
            "c_list must hold positive finite values, got {c_list:?}"
        )));
    }
    cs.sort_by(|a, b| b.total_cmp(a));
    cs.dedup();
    Ok(cs)
}

/// Tabulates `u_c` against `u_inf` along a c-branch started at the ground state
/// of the Schrodinger-Poisson limit.
pub fn nonrelativistic_limit_study(
    params_base: &Params,
    grid: &RadialGrid,
    c_list: &[f64],
    config: &SolverConfig,
) -> Result<LimitStudyResult> {
    let nsp = params_base.with_c(None);
    if !(nsp.p > 3.0 && nsp.p < 6.0) {
        return Err(Error::Config(format!(
            "limit study requires 3 < p < 6 (p = {})",
            nsp.p
        )));
    }
    let cs = descending(c_list)?;
    let ground = minimize_nsp_ground(&nsp, grid, config)?;
    let branch = continuation(
        &BranchSpec {
            parameter: SweepParameter::C,
            values: cs,
        },
        &nsp,
        &ground,
        config,
    )?;
    Ok(tabulate(&nsp, &ground, &branch))
}

fn tabulate(nsp: &Params, ground: &SolveReport, branch: &Branch) -> LimitStudyResult {
    let e_infty = ground.energy.action;
    let mut rows: Vec<LimitRow> = branch
        .points
        .iter()
        .skip(1)
        .map(|pt| {
            let d = pt.report.u.sub(&ground.u);
            LimitRow {
                c: pt.value,
                energy: pt.report.energy.action,
                energy_gap: pt.report.energy.action - e_infty,
                h1_gap: h1_norm(&d),
                h2_gap: h2_proxy(&d),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.c.total_cmp(&b.c));
    LimitStudyResult {
        params: *nsp,
        e_infty,
        energy_order: order_in_inv_c2(&rows, |r| r.energy_gap),
        h1_order: order_in_inv_c2(&rows, |r| r.h1_gap),
        h2_order: order_in_inv_c2(&rows, |r| r.h2_gap),
        rows,
        truncated: branch.truncated.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchTable {
    /// H1 norm of the `c = infinity` solution.
    pub h1_infty: f64,
    pub e_infty: f64,
    pub rows: Vec<LimitRow>,
    pub truncated: Option<Truncation>,
    #[serde(skip)]
    pub solutions: Vec<(f64, RadialField)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QCell {
    pub q: f64,
    /// Branch continued in `q` from the NLS soliton.
    pub u_branch: std::result::Result<BranchTable, String>,
    /// Branch started at the global minimiser.
    pub v_branch: std::result::Result<BranchTable, String>,
    /// `(c, |u_c - v_c|_{H1})` wherever both branches reached `c`; `c = inf` included.
    pub margins: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoBranchStudy {
    pub params: Params,
    /// Sorted by decreasing `q`.
    pub cells: Vec<QCell>,
}

fn branch_table(start: &SolveReport, nsp: &Params, cs: &[f64], config: &SolverConfig) -> Result<BranchTable> {
    let branch = continuation(
        &BranchSpec {
            parameter: SweepParameter::C,
            values: cs.to_vec(),
        },
        nsp,
        start,
        config,
    )?;
    let tab = tabulate(nsp, start, &branch);
    let mut solutions: Vec<(f64, RadialField)> = branch
        .points
        .iter()
        .map(|pt| (pt.value, pt.report.u.clone()))
        .collect();
    solutions.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(BranchTable {
        h1_infty: h1_norm(&start.u),
        e_infty: start.energy.action,
        rows: tab.rows,
        truncated: tab.truncated,
        solutions,
    })
}

fn u_branch(nsp: &Params, grid: &RadialGrid, cs: &[f64], config: &SolverConfig) -> Result<BranchTable> {
    let w0 = solve_nls_ground(nsp, grid, config)?;
    let q_branch = continuation(
        &BranchSpec {
            parameter: SweepParameter::Q,
            values: vec![nsp.q],
        },
        &nsp.with_q(0.0),
        &w0,
        config,
    )?;
    if let Some(t) = q_branch.truncated {
        return Err(Error::Invalid {
            op: "continuation",
            msg: format!(
                "q-branch from the NLS soliton truncated before q = {}: {}",
                t.value, t.reason
            ),
        });
    }
    branch_table(&q_branch.last().report, nsp, cs, config)
}

fn v_branch(nsp: &Params, grid: &RadialGrid, cs: &[f64], config: &SolverConfig) -> Result<BranchTable> {
    let v = minimize_nsp_global(nsp, grid, config)?;
    branch_table(&v, nsp, cs, config)
}

/// For each `q`: the perturbative branch `u` (q-continuation from the NLS soliton)
/// and the minimiser branch `v`, both continued in `c`. Cells run in parallel.
pub fn two_branch_study(
    params_base: &Params,
    grid: &RadialGrid,
    q_list: &[f64],
    c_list: &[f64],
    config: &SolverConfig,
) -> Result<TwoBranchStudy> {
    let nsp = params_base.with_c(None);
    if !(nsp.p > 2.0 && nsp.p < 3.0) {
        return Err(Error::Config(format!(
            "two-branch study requires 2 < p < 3 (p = {})",
            nsp.p
        )));
    }
    let cs = descending(c_list)?;
    let mut qs = q_list.to_vec();
    if qs.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
        return Err(Error::Config(format!("q_list must hold positive values, got {q_list:?}")));
    }
    qs.sort_by(|a, b| b.total_cmp(a));
    qs.dedup();
    let cells = qs
        .par_iter()
        .map(|&q| {
            let params = nsp.with_q(q);
            let (u, v) = rayon::join(
                || u_branch(&params, grid, &cs, config).map_err(|e| e.to_string()),
                || v_branch(&params, grid, &cs, config).map_err(|e| e.to_string()),
            );
            let margins = match (&u, &v) {
                (Ok(u), Ok(v)) => u
                    .solutions
                    .iter()
                    .filter_map(|(c, a)| {
                        v.solutions
                            .iter()
                            .find(|(c2, _)| c2 == c)
                            .map(|(_, b)| (*c, h1_norm(&a.sub(b))))
                    })
                    .collect(),
                _ => Vec::new(),
            };
            QCell {
                q,
                u_branch: u,
                v_branch: v,
                margins,
            }
        })
        .collect();
    Ok(TwoBranchStudy {
        params: nsp,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub p: f64,
    pub accepted: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonexistenceReport {
    pub validation: Vec<ValidationOutcome>,
    /// Nehari-rescaled flows on either side of `p = 6`.
    pub flows: Vec<crate::ground_state::FlowTrace>,
}

/// Validation verdicts for `p` in `{1.5, 2, 4, 6, 7}` and diagnostic flows at
/// `p = 5.99` and `p = 6.01`.
pub fn nonexistence_sweep(
    params_base: &Params,
    grid: &RadialGrid,
    config: &SolverConfig,
) -> NonexistenceReport {
    let validation = [1.5, 2.0, 4.0, 6.0, 7.0]
        .iter()
        .map(|&p| {
            let d = admissible(&Params { p, ..*params_base });
            ValidationOutcome {
                p,
                accepted: d.admissible,
                message: d.violations.join("; "),
            }
        })
        .collect();
    let lambda = 2.0 * params_base.m * params_base.mu;
    let flows = [5.99, 6.01]
        .par_iter()
        .map(|&p| {
            nehari_flow(p, lambda, grid, config).unwrap_or_else(|e| crate::ground_state::FlowTrace {
                p,
                iterations: 0,
                converged: false,
                relative_gradient: f64::NAN,
                initial_max: f64::NAN,
                final_max: f64::NAN,
                status: e.to_string(),
                u: None,
            })
        })
        .collect();
    NonexistenceReport { validation, flows }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `log u` over the fit window (negative for decay).
    pub rate: f64,
    pub r_squared: f64,
    /// `-sqrt(2 m mu - mu^2/c^2)`.
    pub linear_rate: f64,
    pub ratio: f64,
}

/// Least-squares line through `log u` on `[0.5, 0.8] r_max`.
pub fn decay_fit(report: &SolveReport) -> Result<DecayFit> {
    let u = &report.u;
    let grid = u.grid();
    let (lo, hi) = (0.5 * grid.r_max(), 0.8 * grid.r_max());
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (j, r) in grid.nodes().enumerate() {
        if r < lo || r > hi {
            continue;
        }
        let v = u.values()[j];
        if !(v >= 1e-300) {
            return Err(Error::WindowUnderflow { r });
        }
        x.push(r);
        y.push(v.ln());
    }
    let rate = fit_slope(&x, &y).ok_or(Error::WindowUnderflow { r: lo })?;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - (my + rate * (a - mx))).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    let linear_rate = -report.params.mass_coeff().sqrt();
    Ok(DecayFit {
        rate,
        r_squared,
        linear_rate,
        ratio: rate / linear_rate,
    })
}
