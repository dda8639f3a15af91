//! Natural-parameter continuation in `1/c^2` or `q` with Newton correction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::radial::RadialField;

use super::newton::newton_solve;
use super::{SolveReport, SolverConfig};

const MIN_STEP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    C,
    Q,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::C => "c",
            SweepParameter::Q => "q",
        })
    }
}

impl SweepParameter {
    /// Continuation coordinate: `1/c^2` or `q`.
    fn coordinate(self, value: f64) -> f64 {
        match self {
            SweepParameter::C => {
                if value.is_infinite() {
                    0.0
                } else {
                    1.0 / (value * value)
                }
            }
            SweepParameter::Q => value,
        }
    }

    fn params_at(self, base: &Params, s: f64) -> Params {
        match self {
            SweepParameter::C => base.with_c(if s == 0.0 { None } else { Some(1.0 / s.sqrt()) }),
            SweepParameter::Q => base.with_q(s),
        }
    }

    fn value_of(self, params: &Params) -> f64 {
        match self {
            SweepParameter::C => params.c.unwrap_or(f64::INFINITY),
            SweepParameter::Q => params.q,
        }
    }
}

/// Swept parameter and the values to visit, in order. `c = infinity` is written
/// `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub value: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truncation {
    /// Target value that could not be reached.
    pub value: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub parameter_name: SweepParameter,
    /// Starts with the seed.
    pub points: Vec<BranchPoint>,
    pub truncated: Option<Truncation>,
}

impl Branch {
    pub fn is_truncated(&self) -> bool {
        self.truncated.is_some()
    }

    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("a branch always holds its seed")
    }
}

/// Steps from the seed through `spec.values`, warm-starting each Newton solve from
/// a secant predictor. Failed steps are halved down to `1e-8` in the continuation
/// coordinate; after that the branch is truncated and the converged prefix
/// returned.
pub fn continuation(
    spec: &BranchSpec,
    params0: &Params,
    seed: &SolveReport,
    config: &SolverConfig,
) -> Result<Branch> {
    config.validate()?;
    let param = spec.parameter;
    if !seed.converged {
        return Err(Error::Invalid {
            op: "continuation",
            msg: "seed is not converged".into(),
        });
    }
    let s0 = param.coordinate(param.value_of(params0));
    let mut prev = s0;
    let dir = spec
        .values
        .first()
        .map(|&v| (param.coordinate(v) - s0).signum());
    for &v in &spec.values {
        let s = param.coordinate(v);
        if !s.is_finite() || s < 0.0 || (s - prev).signum() != dir.unwrap_or(0.0) || s == prev {
            return Err(Error::Invalid {
                op: "continuation",
                msg: format!(
                    "{param} values must be strictly monotone away from the seed value; got {v}"
                ),
            });
        }
        let target = param.params_at(params0, s);
        if !target.is_nsp() {
            target.validate()?;
        }
        prev = s;
    }

    let mut branch = Branch {
        parameter_name: param,
        points: vec![BranchPoint {
            value: param.value_of(params0),
            report: seed.clone(),
        }],
        truncated: None,
    };
    let mut s_cur = s0;
    let mut u_cur = seed.u.clone();
    let mut history: Option<(f64, RadialField)> = None;
    let steps = config.continuation_steps.max(1) as f64;

    for &v in &spec.values {
        let target = param.coordinate(v);
        let mut step = (target - s_cur) / steps;
        let mut last_err = String::new();
        while s_cur != target {
            let s_try = if (target - s_cur).abs() <= step.abs() * (1.0 + 1e-12) {
                target
            } else {
                s_cur + step
            };
            let predictor = match &history {
                Some((s_old, u_old)) if *s_old != s_cur => {
                    let k = (s_try - s_cur) / (s_cur - s_old);
                    u_cur.add(&u_cur.sub(u_old).scale(k))
                }
                _ => u_cur.clone(),
            };
            let params = param.params_at(params0, s_try);
            match newton_solve(&predictor, &params, config).or_else(|_| {
                // the predictor may overshoot near folds; retry from the last point
                newton_solve(&u_cur, &params, config)
            }) {
                Ok((u, _, _)) if u.max_abs() > 1e-6 * u_cur.max_abs() => {
                    history = Some((s_cur, std::mem::replace(&mut u_cur, u)));
                    s_cur = s_try;
                    step *= 1.5;
                }
                outcome => {
                    last_err = match outcome {
                        Err(e) => e.to_string(),
                        _ => "newton_coupled: iterate collapsed to zero".into(),
                    };
                    step *= 0.5;
                    if step.abs() < MIN_STEP {
                        branch.truncated = Some(Truncation {
                            value: v,
                            reason: last_err,
                        });
                        return Ok(branch);
                    }
                }
            }
        }
        let params = param.params_at(params0, target);
        let report = SolveReport::assemble(u_cur.clone(), &params, 0, config)?;
        if !report.converged {
            branch.truncated = Some(Truncation {
                value: v,
                reason: format!(
                    "gradient norm {:.3e} above tolerance {}{}",
                    report.energy.gradient_norm, config.tol_grad, last_err
                ),
            });
            return Ok(branch);
        }
        branch.points.push(BranchPoint { value: v, report });
    }
    Ok(branch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::{minimize_nsp_ground, solve_nls_ground};
    use crate::radial::RadialGrid;

    #[test]
    fn empty_range_returns_the_seed() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let grid = RadialGrid::new(400, 20.0).unwrap();
        let config = SolverConfig::default();
        let seed = minimize_nsp_ground(&params, &grid, &config).unwrap();
        let spec = BranchSpec {
            parameter: SweepParameter::C,
            values: vec![],
        };
        let b = continuation(&spec, &params, &seed, &config).unwrap();
        assert_eq!(b.points.len(), 1);
        assert!(b.points[0].value.is_infinite());
        assert!(!b.is_truncated());
    }

    #[test]
    fn c_branch_down_to_twice_threshold() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let grid = RadialGrid::new(600, 20.0).unwrap();
        let config = SolverConfig::default();
        let seed = minimize_nsp_ground(&params, &grid, &config).unwrap();
        let spec = BranchSpec {
            parameter: SweepParameter::C,
            values: vec![32.0, 16.0, 8.0, 4.0, 2.0],
        };
        let b = continuation(&spec, &params, &seed, &config).unwrap();
        assert!(!b.is_truncated(), "{:?}", b.truncated);
        assert_eq!(b.points.len(), 6);
        for w in b.points.windows(2) {
            assert!(w[1].value < w[0].value);
            assert!(w[1].report.converged && w[1].report.positivity);
            // energy decreases as c decreases
            assert!(w[1].report.energy.action < w[0].report.energy.action);
        }
    }

    #[test]
    fn q_branch_from_the_nls_soliton() {
        let base = Params::nsp(1.0, 1.0, 0.0, 2.5);
        let grid = RadialGrid::new(800, 30.0).unwrap();
        let config = SolverConfig::default();
        let w0 = solve_nls_ground(&base, &grid, &config).unwrap();
        let spec = BranchSpec {
            parameter: SweepParameter::Q,
            values: vec![0.01, 0.02],
        };
        let b = continuation(&spec, &base, &w0, &config).unwrap();
        assert!(!b.is_truncated(), "{:?}", b.truncated);
        let end = &b.last().report;
        assert_eq!(end.params.q, 0.02);
        assert!(end.converged && end.positivity);
        // close to w0 in shape: perturbative branch
        let rel = crate::radial::h1_norm(&end.u.sub(&w0.u)) / crate::radial::h1_norm(&w0.u);
        assert!(rel < 0.5, "{rel}");
    }

    #[test]
    fn rejects_non_monotone_targets() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let grid = RadialGrid::new(300, 20.0).unwrap();
        let config = SolverConfig::default();
        let seed = minimize_nsp_ground(&params, &grid, &config).unwrap();
        let spec = BranchSpec {
            parameter: SweepParameter::C,
            values: vec![8.0, 16.0],
        };
        assert!(continuation(&spec, &params, &seed, &config).is_err());
    }
}
