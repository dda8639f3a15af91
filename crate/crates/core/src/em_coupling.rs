//! Reduced electrostatic potentials.
//!
//! * `phi_u`: Newtonian potential of `-qm u^2`, the Schrodinger-Poisson field,
//!   evaluated from cumulative shell integrals.
//! * `Phi_u`: solution of the screened equation
//!   `-Delta Phi + (q/c)^2 u^2 Phi = -q (m - mu/c^2) u^2`, by a direct tridiagonal solve.
//!
//! Both use the same discrete operator: the 3-point radial stencil inside, the
//! symmetry stencil at the origin, and at `r_max` the monopole closure
//! `Phi'(r_max) = -Phi(r_max) / r_max`, which is exact once the density has
//! decayed. With that closure the tridiagonal solve at `(q/c)^2 = 0` reproduces
//! the cumulative-integral potential at every node `r > 0`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::solve_tridiagonal;
use crate::params::Params;
use crate::radial::{integrate_r3, RadialField, RadialGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSolveResult {
    pub phi: RadialField,
    /// Weighted L2 norm of the discrete field-equation residual.
    pub residual: f64,
    /// Total source strength `coupling * integral u^2`.
    pub charge: f64,
}

/// Rows of the discrete `-Delta` acting on the potential (nodes `0..=n`).
pub(crate) struct PotentialStencil {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl PotentialStencil {
    pub fn new(grid: &RadialGrid) -> Self {
        let n = grid.n();
        let h2 = grid.h() * grid.h();
        let mut lower = vec![0.0; n + 1];
        let mut diag = vec![2.0 / h2; n + 1];
        let mut upper = vec![0.0; n + 1];
        diag[0] = 6.0 / h2;
        upper[0] = -6.0 / h2;
        for j in 1..n {
            let r = grid.r(j);
            lower[j] = -grid.r(j - 1) / (h2 * r);
            upper[j] = -grid.r(j + 1) / (h2 * r);
        }
        lower[n] = -2.0 * grid.r(n - 1) / (h2 * grid.r(n));
        Self { lower, diag, upper }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() - 1;
        (0..=n)
            .map(|j| {
                let mut s = self.diag[j] * x[j];
                if j > 0 {
                    s += self.lower[j] * x[j - 1];
                }
                if j < n {
                    s += self.upper[j] * x[j + 1];
                }
                s
            })
            .collect()
    }
}

fn weighted_l2(grid: &RadialGrid, r: &[f64]) -> f64 {
    grid.weights()
        .iter()
        .zip(r)
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Residual of `-Delta phi + screening u^2 phi + coupling u^2 = 0`.
fn field_residual(u: &RadialField, phi: &[f64], screening: f64, coupling: f64) -> f64 {
    let stencil = PotentialStencil::new(u.grid());
    let lap = stencil.apply(phi);
    let res: Vec<f64> = lap
        .iter()
        .zip(u.values())
        .zip(phi)
        .map(|((l, &uj), &pj)| l + screening * uj * uj * pj + coupling * uj * uj)
        .collect();
    weighted_l2(u.grid(), &res)
}

/// Schrodinger-Poisson potential `phi_u = -(qm / 4 pi |x|) * u^2`.
pub fn solve_phi_infty(u: &RadialField, params: &Params) -> FieldSolveResult {
    let grid = *u.grid();
    let n = grid.n();
    let h = grid.h();
    let qm = params.q * params.m;
    let rho: Vec<f64> = u.values().iter().map(|v| v * v).collect();

    // inner[j] ~ int_0^{r_j} s^2 rho ds, outer[j] ~ int_{r_j}^{r_max} s rho ds
    let mut inner = vec![0.0; n + 1];
    for j in 1..=n {
        let (a, b) = (grid.r(j - 1), grid.r(j));
        inner[j] = inner[j - 1] + 0.5 * h * (a * a * rho[j - 1] + b * b * rho[j]);
    }
    let mut outer = vec![0.0; n + 1];
    for j in (0..n).rev() {
        let (a, b) = (grid.r(j), grid.r(j + 1));
        outer[j] = outer[j + 1] + 0.5 * h * (a * rho[j] + b * rho[j + 1]);
    }
    let mut phi = vec![0.0; n + 1];
    phi[0] = -qm * outer[0];
    for j in 1..=n {
        phi[j] = -qm * (inner[j] / grid.r(j) + outer[j]);
    }
    let charge = qm * integrate_r3(&u.map(|v| v * v));
    let residual = field_residual(u, &phi, 0.0, qm);
    FieldSolveResult {
        phi: RadialField::from_values_unchecked(grid, phi),
        residual,
        charge,
    }
}

/// Screened potential `Phi_u` of the Maxwell-Klein-Gordon system at finite `c`.
/// For `c = None` the screening vanishes and the same solve yields `phi_u`.
pub fn solve_phi_c(u: &RadialField, params: &Params) -> Result<FieldSolveResult> {
    let grid = *u.grid();
    let screening = params.screening();
    let coupling = params.coupling();
    let PotentialStencil {
        lower,
        mut diag,
        upper,
    } = PotentialStencil::new(&grid);
    let rhs: Vec<f64> = u.values().iter().map(|v| -coupling * v * v).collect();
    for (d, v) in diag.iter_mut().zip(u.values()) {
        *d += screening * v * v;
    }
    let mut phi = solve_tridiagonal("solve_phi_c", &lower, &diag, &upper, &rhs)?;
    if let Some(floor) = params.potential_floor() {
        snap_to_bracket(&mut phi, floor);
    }
    let residual = field_residual(u, &phi, screening, coupling);
    let charge = coupling * integrate_r3(&u.map(|v| v * v));
    Ok(FieldSolveResult {
        phi: RadialField::from_values_unchecked(grid, phi),
        residual,
        charge,
    })
}

/// The discrete operator is an M-matrix, so the exact solution lies in
/// `[floor, 0]`. Elimination over `n` rows can overshoot a bound by up to about
/// `n` ulps of rounding; those values are set to the bound. Larger excursions are
/// left alone.
fn snap_to_bracket(phi: &mut [f64], floor: f64) {
    let ulps = 4.0 * phi.len() as f64 * f64::EPSILON;
    let below = ulps * floor.abs();
    let above = ulps * phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in phi.iter_mut() {
        if *v < floor && *v >= floor - below {
            *v = floor;
        } else if *v > 0.0 && *v <= above {
            *v = 0.0;
        }
    }
}

/// Dispatches on the model: `phi_u` for c = infinity, `Phi_u` otherwise.
pub fn solve_potential(u: &RadialField, params: &Params) -> Result<FieldSolveResult> {
    if params.is_nsp() {
        Ok(solve_phi_infty(u, params))
    } else {
        solve_phi_c(u, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{norms, RadialGrid};

    fn exp_field(n: usize, r_max: f64) -> RadialField {
        RadialField::from_fn(RadialGrid::new(n, r_max).unwrap(), |r| (-r).exp())
    }

    #[test]
    fn zero_source_gives_zero_potential() {
        let g = RadialGrid::new(64, 4.0).unwrap();
        let u = RadialField::zeros(g);
        let p = Params::nmkg(1.0, 1.0, 1.0, 2.0, 4.0);
        let a = solve_phi_infty(&u, &p);
        assert!(a.phi.values().iter().all(|&v| v == 0.0));
        assert_eq!(a.charge, 0.0);
        let b = solve_phi_c(&u, &p).unwrap();
        assert!(b.phi.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn newtonian_potential_closed_forms() {
        let u = exp_field(3000, 30.0);
        let p = Params::nsp(1.0, 1.0, 1.0, 4.0);
        let res = solve_phi_infty(&u, &p);
        // phi(0) = -int_0^inf s e^{-2s} ds = -1/4
        assert!((res.phi.values()[0] + 0.25).abs() < 1e-4);
        // r phi(r) -> -int s^2 e^{-2s} ds = -1/4
        let j = 2000;
        let r = u.grid().r(j);
        assert!((r * res.phi.values()[j] + 0.25).abs() < 1e-3);
        // charge = qm * pi
        assert!((res.charge - std::f64::consts::PI).abs() < 1e-5);
        assert!(res.residual < 1e-9, "{}", res.residual);
        // -qm |u|_2^2 / (4 pi r) <= phi <= 0
        for (j, &v) in res.phi.values().iter().enumerate().skip(1) {
            let r = u.grid().r(j);
            assert!(v <= 0.0);
            assert!(v >= -res.charge / (4.0 * std::f64::consts::PI * r) - 1e-12);
        }
    }

    #[test]
    fn unscreened_solve_matches_cumulative_integrals() {
        let u = exp_field(400, 12.0);
        let p = Params::nsp(1.0, 1.0, 0.7, 4.0);
        let a = solve_phi_infty(&u, &p);
        let b = solve_phi_c(&u, &p).unwrap();
        for j in 1..=400 {
            let (x, y) = (a.phi.values()[j], b.phi.values()[j]);
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300), "node {j}: {x} {y}");
        }
    }

    #[test]
    fn screened_potential_large_c_matches_newtonian() {
        let u = exp_field(3000, 30.0);
        let nsp = Params::nsp(1.0, 1.0, 1.0, 4.0);
        let nmkg = Params::nmkg(1.0, 1.0, 1.0, 1.0e3, 4.0);
        let a = solve_phi_infty(&u, &nsp);
        let b = solve_phi_c(&u, &nmkg).unwrap();
        let scale = a.phi.max_abs();
        for (x, y) in a.phi.values().iter().zip(b.phi.values()) {
            assert!((x - y).abs() <= 1e-3 * scale);
        }
        assert!(b.residual < 1e-9);
    }

    #[test]
    fn maximum_principle_bracket() {
        let u = exp_field(2000, 30.0);
        let p = Params::nmkg(1.0, 1.0, 1.0, 2.0, 4.0);
        let floor = p.potential_floor().unwrap();
        assert_eq!(floor, -3.0);
        let res = solve_phi_c(&u, &p).unwrap();
        assert!(res.phi.values().iter().all(|&v| floor <= v && v <= 0.0));

        // strong source pushes the potential towards the floor but not past it
        let big = u.scale(40.0);
        let res = solve_phi_c(&big, &p).unwrap();
        assert!(res.phi.values().iter().all(|&v| floor <= v && v <= 0.0));
        assert!(res.phi.values()[0] < 0.5 * floor);
    }

    #[test]
    fn screening_gap_is_second_order_in_inverse_c() {
        let u = exp_field(2000, 30.0);
        let nsp = Params::nsp(1.0, 1.0, 1.0, 4.0);
        let phi = solve_phi_infty(&u, &nsp).phi;
        let gap = |c: f64| {
            let big = solve_phi_c(&u, &Params::nmkg(1.0, 1.0, 1.0, c, 4.0)).unwrap().phi;
            norms(&big.sub(&phi), 2.0).unwrap().d12
        };
        for c in [4.0, 8.0, 16.0] {
            let ratio = gap(c) / gap(2.0 * c);
            assert!((3.0..=5.0).contains(&ratio), "c = {c}: ratio {ratio}");
        }
    }

    #[test]
    fn rounding_excursions_snap_to_the_bracket() {
        let floor = -0.625;
        let mut phi = vec![floor - 1e-15, floor - 1e-6, -0.3, 1e-18, 1e-3];
        snap_to_bracket(&mut phi, floor);
        assert_eq!(phi, vec![floor, floor - 1e-6, -0.3, 0.0, 1e-3]);
    }
}
