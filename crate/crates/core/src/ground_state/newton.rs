//! Newton iteration on the coupled system
//!
//! ```text
//! F_u   = -Delta u + (a - e^2 Phi^2 - 2 kappa Phi) u - u_+^{p-1} = 0
//! F_Phi = -Delta Phi + e^2 u^2 Phi + kappa u^2                  = 0
//! ```
//!
//! with `a = 2 m mu - mu^2/c^2`, `kappa = q (m - mu/c^2)` and `e^2 = (q/c)^2`.
//! At `c = infinity` the same code solves the Schrodinger-Poisson system.
//! Unknowns are interleaved per node, so the Jacobian is block tridiagonal with
//! 2x2 blocks.

use crate::em_coupling::PotentialStencil;
use crate::error::{Error, Result};
use crate::linalg::{solve_block_tridiagonal, Block, Pair, ZERO_BLOCK};
use crate::params::Params;
use crate::radial::{RadialField, RadialGrid};

use super::{SolveReport, SolverConfig};

const MAX_NEWTON: usize = 50;

struct System<'a> {
    grid: RadialGrid,
    stencil: PotentialStencil,
    weights: Vec<f64>,
    params: &'a Params,
}

impl<'a> System<'a> {
    fn new(grid: RadialGrid, params: &'a Params) -> Self {
        Self {
            stencil: PotentialStencil::new(&grid),
            weights: grid.weights(),
            grid,
            params,
        }
    }

    fn n(&self) -> usize {
        self.grid.n()
    }

    fn residual(&self, u: &[f64], phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let (a, kappa, e2, p) = (
            self.params.mass_coeff(),
            self.params.coupling(),
            self.params.screening(),
            self.params.p,
        );
        let lu = self.stencil.apply(u);
        let lphi = self.stencil.apply(phi);
        let mut ru = vec![0.0; n + 1];
        let mut rphi = vec![0.0; n + 1];
        for j in 0..=n {
            let (v, f) = (u[j], phi[j]);
            ru[j] = lu[j] + (a - e2 * f * f - 2.0 * kappa * f) * v - v.max(0.0).powf(p - 1.0);
            rphi[j] = lphi[j] + e2 * v * v * f + kappa * v * v;
        }
        // the stencil's row n is the potential closure; u is pinned there instead
        ru[n] = u[n];
        (ru, rphi)
    }

    fn norm(&self, r: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(r)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    fn residual_norm(&self, u: &[f64], phi: &[f64]) -> f64 {
        let (ru, rphi) = self.residual(u, phi);
        self.norm(&ru) + self.norm(&rphi)
    }

    /// Sum of the norms of the terms of the residual, so that the tolerance sits
    /// above the roundoff floor of the largest one (the Laplacian of a narrow peak).
    fn scale(&self, u: &[f64]) -> f64 {
        let a = self.params.mass_coeff();
        let kappa = self.params.coupling();
        let p = self.params.p;
        let mut lu = self.stencil.apply(u);
        lu[self.n()] = 0.0;
        let au: Vec<f64> = u.iter().map(|v| a * v).collect();
        let src: Vec<f64> = u.iter().map(|v| kappa * v * v).collect();
        let pow: Vec<f64> = u.iter().map(|v| v.max(0.0).powf(p - 1.0)).collect();
        1.0 + self.norm(&lu) + self.norm(&au) + self.norm(&src) + self.norm(&pow)
    }

    fn step(&self, u: &[f64], phi: &[f64]) -> Result<Vec<Pair>> {
        let n = self.n();
        let (a, kappa, e2, p) = (
            self.params.mass_coeff(),
            self.params.coupling(),
            self.params.screening(),
            self.params.p,
        );
        let (ru, rphi) = self.residual(u, phi);
        let s = &self.stencil;
        let mut lower = vec![ZERO_BLOCK; n + 1];
        let mut diag = vec![ZERO_BLOCK; n + 1];
        let mut upper = vec![ZERO_BLOCK; n + 1];
        let mut rhs = vec![[0.0; 2]; n + 1];
        for j in 0..=n {
            let (v, f) = (u[j], phi[j]);
            let cross = 2.0 * e2 * f * v + 2.0 * kappa * v;
            let d_uu = if j < n {
                s.diag[j] + a - e2 * f * f - 2.0 * kappa * f
                    - (p - 1.0) * v.max(0.0).powf(p - 2.0)
            } else {
                1.0
            };
            let d_up = if j < n { -cross } else { 0.0 };
            diag[j] = [[d_uu, d_up], [cross, s.diag[j] + e2 * v * v]];
            let off = |x: f64, y: f64| -> Block { [[x, 0.0], [0.0, y]] };
            if j < n {
                lower[j] = off(s.lower[j], s.lower[j]);
                upper[j] = off(s.upper[j], s.upper[j]);
            } else {
                lower[j] = off(0.0, s.lower[j]);
            }
            rhs[j] = [-ru[j], -rphi[j]];
        }
        solve_block_tridiagonal("newton_coupled", &lower, &diag, &upper, &rhs)
    }
}

/// Newton on the coupled system from `seed`. Returns the converged `(u, Phi)` and the
/// number of Newton steps. The potential is initialised by a field solve.
pub(crate) fn newton_solve(
    seed: &RadialField,
    params: &Params,
    config: &SolverConfig,
) -> Result<(RadialField, RadialField, usize)> {
    let grid = *seed.grid();
    let sys = System::new(grid, params);
    let mut u = seed.values().to_vec();
    u[grid.n()] = 0.0;
    let mut phi = initial_potential(&grid, &u, params)?;
    let mut res = sys.residual_norm(&u, &phi);
    let mut growth = 0;
    let max_iter = config.max_iter.clamp(1, MAX_NEWTON);
    for it in 1..=max_iter {
        let delta = sys.step(&u, &phi)?;
        let mut lambda = 1.0;
        let (mut next_u, mut next_phi, mut next_res);
        loop {
            next_u = u.iter().zip(&delta).map(|(x, d)| x + lambda * d[0]).collect::<Vec<_>>();
            next_phi = phi.iter().zip(&delta).map(|(x, d)| x + lambda * d[1]).collect::<Vec<_>>();
            next_res = sys.residual_norm(&next_u, &next_phi);
            if next_res.is_finite() && (next_res < res || lambda < 0.05) {
                break;
            }
            lambda *= 0.5;
        }
        if !next_res.is_finite() {
            return Err(Error::Divergence {
                op: "newton_coupled",
                steps: growth + 1,
                residual: next_res,
            });
        }
        growth = if next_res > res { growth + 1 } else { 0 };
        if growth >= 5 {
            return Err(Error::Divergence {
                op: "newton_coupled",
                steps: growth,
                residual: next_res,
            });
        }
        u = next_u;
        phi = next_phi;
        res = next_res;
        if res <= config.newton_tol * sys.scale(&u) {
            // quadratic convergence: a few more steps reach the roundoff floor
            let mut extra = it;
            for _ in 0..3 {
                let Ok(delta) = sys.step(&u, &phi) else { break };
                let cand_u: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + d[0]).collect();
                let cand_phi: Vec<f64> = phi.iter().zip(&delta).map(|(x, d)| x + d[1]).collect();
                let cand_res = sys.residual_norm(&cand_u, &cand_phi);
                if !(cand_res < 0.5 * res) {
                    break;
                }
                u = cand_u;
                phi = cand_phi;
                res = cand_res;
                extra += 1;
            }
            let it = extra;
            return Ok((
                RadialField::new(grid, u).map_err(|_| nan_error(it, res))?,
                RadialField::new(grid, phi).map_err(|_| nan_error(it, res))?,
                it,
            ));
        }
    }
    Err(Error::NonConvergence {
        op: "newton_coupled",
        iterations: max_iter,
        residual: res,
    })
}

fn nan_error(iterations: usize, residual: f64) -> Error {
    Error::NonConvergence {
        op: "newton_coupled",
        iterations,
        residual,
    }
}

fn initial_potential(grid: &RadialGrid, u: &[f64], params: &Params) -> Result<Vec<f64>> {
    let field = RadialField::new(*grid, u.to_vec())?;
    let tmp = if params.is_nsp() {
        // the tridiagonal solve also fills node 0 with the stencil value
        params.with_c(Some(f64::INFINITY))
    } else {
        *params
    };
    Ok(crate::em_coupling::solve_phi_c(&field, &tmp)?.phi.into_values())
}

/// Newton polish of an approximate solution of the finite-`c` system.
pub fn newton_coupled(
    seed_u: &RadialField,
    params: &Params,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    if params.is_nsp() {
        return Err(Error::Invalid {
            op: "newton_coupled",
            msg: "requires a finite speed of light c".into(),
        });
    }
    params.validate()?;
    let (u, _, it) = newton_solve(seed_u, params, config)?;
    SolveReport::assemble(u, params, it, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{gradient_nmkg, gradient_nsp};
    use crate::radial::{integrate_r3, RadialGrid};

    fn seed(n: usize) -> RadialField {
        let g = RadialGrid::new(n, 24.0).unwrap();
        RadialField::from_fn(g, |r| 2.0 / (r.cosh()))
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let params = Params::nmkg(1.0, 1.0, 0.7, 3.0, 3.5);
        let g = RadialGrid::new(40, 8.0).unwrap();
        let sys = System::new(g, &params);
        let u: Vec<f64> = g.nodes().map(|r| 1.5 * (-r).exp()).collect();
        let phi: Vec<f64> = g.nodes().map(|r| -0.3 / (1.0 + r)).collect();
        let delta = sys.step(&u, &phi).unwrap();
        // F(x + eps d) ~ F(x) + eps J d = (1 - eps) F(x)
        let eps = 1e-6;
        let (ru0, rp0) = sys.residual(&u, &phi);
        let u1: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + eps * d[0]).collect();
        let p1: Vec<f64> = phi.iter().zip(&delta).map(|(x, d)| x + eps * d[1]).collect();
        let (ru1, rp1) = sys.residual(&u1, &p1);
        for j in 0..=40 {
            let exp_u = (1.0 - eps) * ru0[j];
            let exp_p = (1.0 - eps) * rp0[j];
            assert!((ru1[j] - exp_u).abs() <= 1e-9 * (1.0 + ru0[j].abs()), "u row {j}");
            assert!((rp1[j] - exp_p).abs() <= 1e-9 * (1.0 + rp0[j].abs()), "phi row {j}");
        }
    }

    #[test]
    fn converges_and_fixed_point_is_stable() {
        let params = Params::nmkg(1.0, 1.0, 0.5, 20.0, 4.0);
        let config = SolverConfig::default();
        let ground =
            crate::ground_state::minimize_nsp_ground(&params.with_c(None), seed(800).grid(), &config)
                .unwrap();
        let first = newton_coupled(&ground.u, &params, &config).unwrap();
        assert!(first.converged, "{}", first.energy.gradient_norm);
        assert!(first.positivity);
        let again = newton_coupled(&first.u, &params, &config).unwrap();
        assert_eq!(again.iterations, 1);
        let diff = again.u.sub(&first.u).max_abs();
        assert!(diff <= 1e-12, "{diff}");
        let g = gradient_nmkg(&again.u, &params, true).unwrap();
        assert!(integrate_r3(&g.map(|v| v * v)).sqrt() < 1e-8);
    }

    #[test]
    fn schrodinger_poisson_limit_solves_the_nonlocal_equation() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let (u, _, _) = newton_solve(&seed(800), &params, &SolverConfig::default()).unwrap();
        let g = gradient_nsp(&u, &params, true).unwrap();
        let w = g.grid().weights();
        let l2: f64 = g.values().iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
        assert!(l2 < 1e-8, "{l2}");
    }

    #[test]
    fn rejects_infinite_c() {
        let err = newton_coupled(&seed(100), &Params::nsp(1.0, 1.0, 0.5, 4.0), &SolverConfig::default());
        assert!(matches!(err, Err(Error::Invalid { .. })));
    }
}
