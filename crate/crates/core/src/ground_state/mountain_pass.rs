//! The path level `e_hat_c = max_{0 <= t <= t0} I~_c(t^2 U0(t .))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{scaling_path_energy, ScalingPolynomial};
use crate::params::Params;

use super::SolveReport;

const SAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MountainPass {
    /// First doubling point with `I~_inf(gamma(t0)) < 0`.
    pub t0: f64,
    pub e_hat: f64,
    /// Maximiser of the path energy.
    pub t_max: f64,
}

/// `U0` is a converged Schrodinger-Poisson ground state; `params` selects the
/// functional evaluated along its scaling path (`c = None` gives the limit level).
pub fn mountain_pass_level(u0: &SolveReport, params: &Params) -> Result<MountainPass> {
    if !(params.p > 3.0 && params.p < 6.0) {
        return Err(Error::Invalid {
            op: "mountain_pass_level",
            msg: format!("requires 3 < p < 6 (p = {})", params.p),
        });
    }
    if !params.is_nsp() {
        params.validate()?;
    }
    if !u0.converged || u0.is_trivial() {
        return Err(Error::Invalid {
            op: "mountain_pass_level",
            msg: "requires a converged nontrivial ground state".into(),
        });
    }
    let poly = ScalingPolynomial::new(&u0.u, &params.with_c(None));
    let mut t0 = 2.0;
    while poly.energy(t0) >= 0.0 {
        t0 *= 2.0;
        if t0 > 1e6 {
            return Err(Error::PathSearch { t_max: 1e6 });
        }
    }
    let f = |t: f64| scaling_path_energy(&u0.u, t, params);
    let dt = t0 / SAMPLES as f64;
    let mut best = (0.0, 0.0);
    for k in 1..=SAMPLES {
        let t = k as f64 * dt;
        let e = f(t)?;
        if e > best.1 {
            best = (t, e);
        }
    }
    // golden-section refinement on the neighbouring sample interval
    let (mut a, mut b) = ((best.0 - dt).max(0.0), (best.0 + dt).min(t0));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > 1e-9 * t0 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        }
    }
    let (t_max, e_hat) = [(x1, f1), (x2, f2), best]
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(MountainPass { t0, e_hat, t_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::{minimize_nsp_ground, SolverConfig};
    use crate::radial::RadialGrid;

    #[test]
    fn limit_level_is_attained_at_the_ground_state() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let grid = RadialGrid::new(1000, 24.0).unwrap();
        let ground = minimize_nsp_ground(&params, &grid, &SolverConfig::default()).unwrap();
        let mp = mountain_pass_level(&ground, &params).unwrap();
        let e = ground.energy.action;
        assert!(mp.t0 > 1.0);
        assert!((mp.e_hat - e).abs() <= 1e-5 * e.abs(), "{} vs {e}", mp.e_hat);
        assert!((mp.t_max - 1.0).abs() <= 1e-3, "{}", mp.t_max);

        let mp = mountain_pass_level(&ground, &params.with_c(Some(1e3))).unwrap();
        assert!((mp.e_hat - e).abs() <= 1e-3 * e.abs());
    }
}
