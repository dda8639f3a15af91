//! Action, Nehari and Pohozaev functionals of both models, their gradients and the
//! scaling path `t -> t^2 u(t .)`.
//!
//! All integrals use the trapezoid weights of [`integrate_r3`]. The Dirichlet term
//! `int |grad u|^2` is discretised as `sum 4 pi r_j r_{j+1} (u_{j+1} - u_j)^2 / h`,
//! whose derivative is exactly the 3-point radial Laplacian against those weights.
//! With that choice the strong-form residuals returned by [`gradient_nsp`] and
//! [`gradient_nmkg`] pair with a direction `v` (via `integrate_r3(g v)`) to give the
//! directional derivative of the discrete action, nonlocal term included.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::em_coupling::{solve_phi_c, solve_phi_infty, solve_potential};
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::params::Params;
use crate::radial::{integrate_r3, laplacian_radial, RadialField, RadialGrid};

/// The integrals every functional is assembled from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    /// `int |grad u|^2`
    pub gradient: f64,
    /// `int u^2`
    pub mass: f64,
    /// `int u^2 phi` (non-positive)
    pub coulomb: f64,
    /// `int u^2 phi^2`
    pub screened: f64,
    /// `int |u|^p`, or `int u_+^p` for the modified functionals
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub action: f64,
    pub nehari: f64,
    pub pohozaev: f64,
    /// `G = 2J - P`; only defined for the Schrodinger-Poisson model.
    pub scaling_derivative: Option<f64>,
    /// Dual (H^{-1}) norm of the gradient.
    pub gradient_norm: f64,
    pub terms: EnergyTerms,
}

impl EnergyReport {
    /// Natural magnitude for relative tolerances: `|grad term| + |mass term|`.
    pub fn scale(&self, params: &Params) -> f64 {
        self.terms.gradient.abs() + (params.mass_coeff() * self.terms.mass).abs()
    }

    /// Left and right sides of
    /// `(5p-12)/2 I - J + (4-p)/2 P = int (p-3)|grad u|^2 + (p-2)/2 a u^2 + (p-2)/2 e^2 u^2 Phi^2`.
    /// Holds for every field; at a critical point `J = P = 0` turns it into an energy formula.
    pub fn energy_identity(&self, params: &Params) -> (f64, f64) {
        let p = params.p;
        let lhs = 0.5 * (5.0 * p - 12.0) * self.action - self.nehari
            + 0.5 * (4.0 - p) * self.pohozaev;
        (lhs, critical_energy_rhs(&self.terms, params))
    }

    /// `(5p-12)/2 I` against the right side above, i.e. the identity with `J = P = 0`.
    pub fn critical_energy_identity(&self, params: &Params) -> (f64, f64) {
        (
            0.5 * (5.0 * params.p - 12.0) * self.action,
            critical_energy_rhs(&self.terms, params),
        )
    }

    /// Schrodinger-Poisson level formula at a critical point:
    /// `I = int 2(p-3)/(5p-12) |grad U|^2 + 2(p-2)/(5p-12) m mu U^2`.
    pub fn nsp_level_identity(&self, params: &Params) -> (f64, f64) {
        let p = params.p;
        let k = 5.0 * p - 12.0;
        let rhs = 2.0 * (p - 3.0) / k * self.terms.gradient
            + 2.0 * (p - 2.0) / k * params.m * params.mu * self.terms.mass;
        (self.action, rhs)
    }
}

fn critical_energy_rhs(t: &EnergyTerms, params: &Params) -> f64 {
    let p = params.p;
    (p - 3.0) * t.gradient
        + 0.5 * (p - 2.0) * params.mass_coeff() * t.mass
        + 0.5 * (p - 2.0) * params.screening() * t.screened
}

/// Discrete `int |grad u|^2 dx`.
pub fn dirichlet_energy(u: &RadialField) -> f64 {
    let g = u.grid();
    let h = g.h();
    let v = u.values();
    let mut acc = 0.0;
    for j in 1..g.n() {
        let d = v[j + 1] - v[j];
        acc += g.r(j) * g.r(j + 1) * d * d;
    }
    4.0 * PI * acc / h
}

fn power_values(u: &RadialField, p: f64, positive_part: bool) -> RadialField {
    if positive_part {
        u.map(|v| v.max(0.0).powf(p))
    } else {
        u.map(|v| v.abs().powf(p))
    }
}

pub(crate) fn nonlinearity(v: f64, p: f64, positive_part: bool) -> f64 {
    if positive_part {
        v.max(0.0).powf(p - 1.0)
    } else {
        v.abs().powf(p - 1.0).copysign(v)
    }
}

pub fn energy_terms(u: &RadialField, phi: &RadialField, p: f64, positive_part: bool) -> EnergyTerms {
    let u2 = u.map(|v| v * v);
    EnergyTerms {
        gradient: dirichlet_energy(u),
        mass: integrate_r3(&u2),
        coulomb: integrate_r3(&u2.zip_map(phi, |a, b| a * b)),
        screened: integrate_r3(&u2.zip_map(phi, |a, b| a * b * b)),
        power: integrate_r3(&power_values(u, p, positive_part)),
    }
}

/// Assembles `I, J, P` (and `G` when `c = infinity`) from the integrals.
pub fn report_from_terms(t: EnergyTerms, params: &Params, gradient_norm: f64) -> EnergyReport {
    let p = params.p;
    let a = params.mass_coeff();
    let kappa = params.coupling();
    let e2 = params.screening();
    let action = 0.5 * (t.gradient + a * t.mass - kappa * t.coulomb) - t.power / p;
    let nehari = t.gradient + a * t.mass - e2 * t.screened - 2.0 * kappa * t.coulomb - t.power;
    let pohozaev = 0.5 * t.gradient + 1.5 * a * t.mass - e2 * t.screened - 2.5 * kappa * t.coulomb
        - 3.0 / p * t.power;
    let scaling_derivative = params.is_nsp().then_some(2.0 * nehari - pohozaev);
    EnergyReport {
        action,
        nehari,
        pohozaev,
        scaling_derivative,
        gradient_norm,
        terms: t,
    }
}

fn require_nsp(params: &Params, op: &'static str) -> Result<()> {
    if params.is_nsp() {
        Ok(())
    } else {
        Err(Error::Invalid {
            op,
            msg: "requires c = infinity".into(),
        })
    }
}

fn require_nmkg(params: &Params, op: &'static str) -> Result<()> {
    if params.is_nsp() {
        Err(Error::Invalid {
            op,
            msg: "requires finite c".into(),
        })
    } else {
        params.validate()
    }
}

/// `I_inf`, `J_inf`, `P_inf`, `G_inf` (or the positive-part versions) at `u`.
pub fn action_nsp(u: &RadialField, params: &Params, positive_part: bool) -> Result<EnergyReport> {
    require_nsp(params, "action_nsp")?;
    let phi = solve_phi_infty(u, params).phi;
    Ok(report_with_phi(u, &phi, params, positive_part))
}

/// `I_c`, `J_c`, `P_c` (or the positive-part versions) at `u`.
pub fn action_nmkg(u: &RadialField, params: &Params, positive_part: bool) -> Result<EnergyReport> {
    require_nmkg(params, "action_nmkg")?;
    let phi = solve_phi_c(u, params)?.phi;
    Ok(report_with_phi(u, &phi, params, positive_part))
}

/// Either model, chosen by `params.c`.
pub fn evaluate(u: &RadialField, params: &Params, positive_part: bool) -> Result<EnergyReport> {
    let phi = solve_potential(u, params)?.phi;
    Ok(report_with_phi(u, &phi, params, positive_part))
}

pub(crate) fn report_with_phi(
    u: &RadialField,
    phi: &RadialField,
    params: &Params,
    positive_part: bool,
) -> EnergyReport {
    let terms = energy_terms(u, phi, params.p, positive_part);
    let g = residual_with_phi(u, phi, params, positive_part);
    report_from_terms(terms, params, dual_norm(&g, params.mass_coeff()))
}

/// Sum of the dual norms of the separate terms of the residual (`-Delta u`, `a u`,
/// the potential term and the power term). Rounding in the residual is relative to
/// this, not to the residual itself.
pub(crate) fn residual_term_scale(u: &RadialField, phi: &RadialField, params: &Params) -> f64 {
    let a = params.mass_coeff();
    let kappa = params.coupling();
    let e2 = params.screening();
    let p = params.p;
    let n = u.grid().n();
    let lap = laplacian_radial(u);
    let term = |f: &dyn Fn(usize) -> f64| {
        let mut vals: Vec<f64> = (0..=n).map(f).collect();
        vals[n] = 0.0;
        dual_norm(&RadialField::from_values_unchecked(*u.grid(), vals), a)
    };
    let (v, f) = (u.values(), phi.values());
    term(&|j| lap.values()[j])
        + term(&|j| a * v[j])
        + term(&|j| (e2 * f[j] * f[j] + 2.0 * kappa * f[j]) * v[j])
        + term(&|j| nonlinearity(v[j], p, true))
}

/// Strong-form residual of the Euler-Lagrange equation with a given potential.
pub(crate) fn residual_with_phi(
    u: &RadialField,
    phi: &RadialField,
    params: &Params,
    positive_part: bool,
) -> RadialField {
    let lap = laplacian_radial(u);
    let a = params.mass_coeff();
    let kappa = params.coupling();
    let e2 = params.screening();
    let p = params.p;
    let n = u.grid().n();
    let mut out: Vec<f64> = (0..=n)
        .map(|j| {
            let (v, f) = (u.values()[j], phi.values()[j]);
            -lap.values()[j] + (a - e2 * f * f - 2.0 * kappa * f) * v
                - nonlinearity(v, p, positive_part)
        })
        .collect();
    // Dirichlet node
    out[n] = 0.0;
    RadialField::from_values_unchecked(*u.grid(), out)
}

/// `-Delta u + 2 m mu u - 2 q m u phi_u - |u|^{p-2} u`.
pub fn gradient_nsp(u: &RadialField, params: &Params, positive_part: bool) -> Result<RadialField> {
    require_nsp(params, "gradient_nsp")?;
    let phi = solve_phi_infty(u, params).phi;
    Ok(residual_with_phi(u, &phi, params, positive_part))
}

/// `-Delta u + (2 m mu - mu^2/c^2) u - (q/c)^2 u Phi_u^2 - 2 q (m - mu/c^2) u Phi_u - |u|^{p-2} u`.
pub fn gradient_nmkg(u: &RadialField, params: &Params, positive_part: bool) -> Result<RadialField> {
    require_nmkg(params, "gradient_nmkg")?;
    let phi = solve_phi_c(u, params)?.phi;
    Ok(residual_with_phi(u, &phi, params, positive_part))
}

/// Rows of `-Delta + shift` on the Dirichlet unknowns `0..n` (the last node is held at 0).
pub(crate) fn field_operator(grid: &RadialGrid, shift: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let mut lower = vec![0.0; n];
    let mut diag = vec![2.0 / h2 + shift; n];
    let mut upper = vec![0.0; n];
    diag[0] = 6.0 / h2 + shift;
    upper[0] = -6.0 / h2;
    for j in 1..n {
        let r = grid.r(j);
        lower[j] = -grid.r(j - 1) / (h2 * r);
        upper[j] = -grid.r(j + 1) / (h2 * r);
    }
    (lower, diag, upper)
}

/// Applies `(-Delta + shift)^{-1}` to a residual (Dirichlet at `r_max`).
pub fn precondition(g: &RadialField, shift: f64) -> Result<RadialField> {
    let grid = *g.grid();
    let n = grid.n();
    let (lower, diag, upper) = field_operator(&grid, shift);
    let mut z = solve_tridiagonal("precondition", &lower, &diag, &upper, &g.values()[..n])?;
    z.push(0.0);
    Ok(RadialField::from_values_unchecked(grid, z))
}

/// `sqrt(<g, (-Delta + shift)^{-1} g>)`, the H^{-1}-type norm of a residual.
pub fn dual_norm(g: &RadialField, shift: f64) -> f64 {
    match precondition(g, shift) {
        Ok(z) => integrate_r3(&g.zip_map(&z, |a, b| a * b)).max(0.0).sqrt(),
        Err(_) => f64::NAN,
    }
}

/// `t^2 u(t r)` resampled onto the grid of `u`.
pub fn scaling_path(u: &RadialField, t: f64) -> RadialField {
    let grid = *u.grid();
    if t == 1.0 {
        return u.clone();
    }
    let t2 = t * t;
    RadialField::from_values_unchecked(
        grid,
        grid.nodes().map(|r| t2 * u.sample_at(t * r)).collect(),
    )
}

/// Closed form of `I~_inf(t^2 U(t .))` from the four integrals of `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPolynomial {
    pub gradient: f64,
    pub mass: f64,
    pub coulomb: f64,
    pub power: f64,
    pub m_mu: f64,
    pub qm: f64,
    pub p: f64,
}

impl ScalingPolynomial {
    pub fn new(u: &RadialField, params: &Params) -> Self {
        let nsp = params.with_c(None);
        let phi = solve_phi_infty(u, &nsp).phi;
        let t = energy_terms(u, &phi, params.p, true);
        Self {
            gradient: t.gradient,
            mass: t.mass,
            coulomb: t.coulomb,
            power: t.power,
            m_mu: params.m * params.mu,
            qm: params.q * params.m,
            p: params.p,
        }
    }

    pub fn energy(&self, t: f64) -> f64 {
        let t3 = t * t * t;
        0.5 * t3 * self.gradient + self.m_mu * t * self.mass - 0.5 * self.qm * t3 * self.coulomb
            - t.powf(2.0 * self.p - 3.0) / self.p * self.power
    }

    /// `d/dt` of [`Self::energy`]; equals `G_inf(gamma(t)) / t`.
    pub fn derivative(&self, t: f64) -> f64 {
        let t2 = t * t;
        1.5 * t2 * self.gradient + self.m_mu * self.mass - 1.5 * self.qm * t2 * self.coulomb
            - (2.0 * self.p - 3.0) / self.p * t.powf(2.0 * self.p - 4.0) * self.power
    }
}

/// `I~(gamma(t))` for `gamma(t) = t^2 U0(t .)`: closed form at c = infinity, resampled
/// evaluation of the modified relativistic action otherwise.
pub fn scaling_path_energy(u0: &RadialField, t: f64, params: &Params) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Invalid {
            op: "scaling_path_energy",
            msg: format!("t = {t} must be non-negative"),
        });
    }
    if params.is_nsp() {
        Ok(ScalingPolynomial::new(u0, params).energy(t))
    } else if t == 0.0 {
        Ok(0.0)
    } else {
        let path = scaling_path(u0, t);
        let phi = solve_phi_c(&path, params)?.phi;
        let terms = energy_terms(&path, &phi, params.p, true);
        Ok(report_from_terms(terms, params, 0.0).action)
    }
}
