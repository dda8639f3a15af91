//! Solitary-wave solvers.
//!
//! * [`nls`]: the NLS soliton `w0` by shooting, cross-checked by Nehari-rescaled descent.
//! * [`nsp`]: Schrodinger-Poisson ground states (descent on the Nehari-Pohozaev
//!   manifold) and global radial minimisers for `2 < p < 3`.
//! * [`newton`]: block Newton on the coupled `(u, Phi)` system.
//! * [`continuation`]: parameter sweeps in `1/c^2` or `q`.
//! * [`mountain_pass`]: the one-path level `e_hat_c` along `t^2 U0(t .)`.

pub mod continuation;
pub mod mountain_pass;
pub mod newton;
pub mod nls;
pub mod nsp;

use serde::{Deserialize, Serialize};

use crate::em_coupling::solve_potential;
use crate::error::Result;
use crate::functionals::{report_with_phi, residual_term_scale, EnergyReport};
use crate::params::Params;
use crate::radial::RadialField;

pub use continuation::{continuation, Branch, BranchPoint, BranchSpec, SweepParameter, Truncation};
pub use mountain_pass::{mountain_pass_level, MountainPass};
pub use newton::newton_coupled;
pub use nls::{nehari_flow, nls_descent, shoot_nls, solve_nls_ground, FlowTrace, ShootingProfile};
pub use nsp::{
    minimize_nsp_global, minimize_nsp_global_from, minimize_nsp_ground,
    minimize_nsp_ground_from, project_nehari_pohozaev,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stopping threshold on the dual norm of the gradient, relative to the summed
    /// dual norms of its terms once that exceeds 1.
    pub tol_grad: f64,
    pub max_iter: usize,
    /// Initial step of the preconditioned descent.
    pub damping: f64,
    /// Newton stopping threshold on the relative residual.
    pub newton_tol: f64,
    /// Geometric sub-steps used when a sweep starts from `q = 0`.
    pub continuation_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_grad: 1e-9,
            max_iter: 2000,
            damping: 1.0,
            newton_tol: 1e-10,
            continuation_steps: 6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_grad > 0.0 && self.newton_tol > 0.0 && self.damping > 0.0) {
            return Err(crate::Error::Config(
                "solver config: tol_grad, newton_tol and damping must be positive".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(crate::Error::Config(
                "solver config: max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub params: Params,
    pub u: RadialField,
    /// The matching `phi_u` (c = infinity) or `Phi_u`.
    pub phi: RadialField,
    pub energy: EnergyReport,
    pub iterations: usize,
    /// Summed dual norms of the terms of the gradient.
    pub gradient_scale: f64,
    pub converged: bool,
    /// `u >= -1e-10 |u|_inf` at every node.
    pub positivity: bool,
}

impl SolveReport {
    /// Evaluates potential, functionals and flags at `u`.
    pub fn assemble(
        u: RadialField,
        params: &Params,
        iterations: usize,
        config: &SolverConfig,
    ) -> Result<Self> {
        let phi = solve_potential(&u, params)?.phi;
        let energy = report_with_phi(&u, &phi, params, true);
        let gradient_scale = residual_term_scale(&u, &phi, params);
        let floor = -1e-10 * u.max_abs();
        let positivity = u.values().iter().all(|&v| v >= floor);
        Ok(Self {
            params: *params,
            converged: energy.gradient_norm <= config.tol_grad * gradient_scale.max(1.0),
            gradient_scale,
            u,
            phi,
            energy,
            iterations,
            positivity,
        })
    }

    /// `tol_grad` scaled by [`Self::gradient_scale`], the threshold behind `converged`.
    pub fn gradient_threshold(&self, config: &SolverConfig) -> f64 {
        config.tol_grad * self.gradient_scale.max(1.0)
    }

    pub fn is_trivial(&self) -> bool {
        self.u.max_abs() == 0.0
    }

    /// `max(|J|, |P|) / scale`, the relative violation of the critical-point identities.
    pub fn identity_residual(&self) -> f64 {
        let scale = self.energy.scale(&self.params);
        self.energy.nehari.abs().max(self.energy.pohozaev.abs()) / scale
    }
}
