//! Schrodinger-Poisson solitary waves.
//!
//! Ground states (`3 < p < 6`) minimise `I~_inf` on the manifold `G_inf = 0`; the
//! descent below works on `u -> max_t I~_inf(t^2 u(t .))`, whose gradient on the
//! manifold is the gradient of the action. Global minimisers (`2 < p < 3`) come from
//! an unconstrained flow. Both finish with a Newton polish.

use crate::error::{Error, Result};
use crate::functionals::{evaluate, gradient_nsp, precondition, scaling_path, ScalingPolynomial};
use crate::params::Params;
use crate::radial::{h1_norm, integrate_r3, RadialField, RadialGrid};

use super::newton::newton_solve;
use super::nls::solve_nls_ground;
use super::{SolveReport, SolverConfig};

const ARMIJO: f64 = 1e-4;

fn require_nsp(params: &Params, op: &'static str, lo: f64, hi: f64) -> Result<()> {
    if !params.is_nsp() {
        return Err(Error::Invalid {
            op,
            msg: "requires c = infinity".into(),
        });
    }
    if !(params.p > lo && params.p < hi) {
        return Err(Error::Invalid {
            op,
            msg: format!("requires {lo} < p < {hi} (p = {})", params.p),
        });
    }
    if !(params.m > 0.0 && params.mu > 0.0 && params.q > 0.0) {
        return Err(Error::Config(format!(
            "{op}: requires m, mu, q > 0 (m = {}, mu = {}, q = {})",
            params.m, params.mu, params.q
        )));
    }
    Ok(())
}

/// Positive root of `d/dt I~_inf(t^2 u(t .))`.
fn path_root(poly: &ScalingPolynomial) -> Result<f64> {
    let g = |t: f64| poly.derivative(t);
    let (mut lo, mut hi) = (1.0, 1.0);
    if g(1.0) > 0.0 {
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Projection(
                    "no sign change of the path derivative in [1e-6, 1e6]".into(),
                ));
            }
        }
    } else {
        while g(lo) <= 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-6 {
                return Err(Error::Projection(
                    "no sign change of the path derivative in [1e-6, 1e6]".into(),
                ));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Moves `u` along its scaling path onto `G_inf = 0`. Returns the total dilation
/// `t*` and `t*^2 u(t* .)` resampled on the grid of `u`.
pub fn project_nehari_pohozaev(u: &RadialField, params: &Params) -> Result<(f64, RadialField)> {
    require_nsp(params, "project_nehari_pohozaev", 3.0, 6.0)?;
    let poly = ScalingPolynomial::new(u, params);
    if !(poly.power > 0.0) {
        return Err(Error::Projection(
            "the positive part of u vanishes, nothing balances the quadratic terms".into(),
        ));
    }
    let mut t = path_root(&poly)?;
    let mut projected = scaling_path(u, t);
    // resampling moves the integrals slightly, so repeat on the resampled field
    for _ in 0..30 {
        let poly = ScalingPolynomial::new(&projected, params);
        if !(poly.power > 0.0) {
            return Err(Error::Projection("projected field vanished".into()));
        }
        let s = path_root(&poly)?;
        if (s - 1.0).abs() < 1e-13 {
            break;
        }
        t *= s;
        projected = scaling_path(u, t);
    }
    Ok((t, projected))
}

fn energy_of(u: &RadialField, params: &Params) -> Result<f64> {
    Ok(evaluate(u, params, true)?.action)
}

fn check_collapse(u: &RadialField, op: &'static str) -> Result<()> {
    let norm = h1_norm(u);
    if !(norm >= 1e-8) {
        return Err(Error::Collapse { op, norm });
    }
    Ok(())
}

struct Descent {
    u: RadialField,
    iterations: usize,
}

/// Preconditioned descent with Armijo backtracking. `map` is applied to every trial
/// point (projection or identity); stops once the dual gradient norm falls below
/// `switch_tol`.
fn descend(
    mut u: RadialField,
    params: &Params,
    config: &SolverConfig,
    op: &'static str,
    map: &dyn Fn(&RadialField) -> Result<RadialField>,
) -> Result<Descent> {
    let shift = params.mass_coeff();
    let mut energy = energy_of(&u, params)?;
    let mut tau = config.damping;
    for it in 0..config.max_iter {
        check_collapse(&u, op)?;
        let g = gradient_nsp(&u, params, true)?;
        let z = precondition(&g, shift)?;
        let gn2 = integrate_r3(&g.zip_map(&z, |a, b| a * b)).max(0.0);
        let size = (crate::functionals::dirichlet_energy(&u)
            + shift * integrate_r3(&u.map(|v| v * v)))
        .sqrt();
        if gn2.sqrt() <= 1e-7 * size.max(1e-300) || gn2.sqrt() <= config.tol_grad {
            return Ok(Descent { u, iterations: it });
        }
        loop {
            let trial = map(&u.sub(&z.scale(tau)))?;
            let e = energy_of(&trial, params)?;
            if e <= energy - ARMIJO * tau * gn2 {
                u = trial;
                energy = e;
                tau = (2.0 * tau).min(config.damping);
                break;
            }
            tau *= 0.5;
            if tau < 1e-10 {
                // the line search has stalled; hand over to Newton
                return Ok(Descent { u, iterations: it });
            }
        }
    }
    Ok(Descent {
        u,
        iterations: config.max_iter,
    })
}

fn polish(
    descent: Descent,
    params: &Params,
    config: &SolverConfig,
    op: &'static str,
) -> Result<SolveReport> {
    let (u, _, it) = newton_solve(&descent.u, params, config)?;
    check_collapse(&u, op)?;
    let report = SolveReport::assemble(u, params, descent.iterations + it, config)?;
    if !report.converged {
        return Err(Error::NonConvergence {
            op,
            iterations: report.iterations,
            residual: report.energy.gradient_norm,
        });
    }
    Ok(report)
}

/// Ground state from a caller-supplied seed.
pub fn minimize_nsp_ground_from(
    seed: &RadialField,
    params: &Params,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    require_nsp(params, "minimize_nsp_ground", 3.0, 6.0)?;
    let op = "minimize_nsp_ground";
    let (_, start) = project_nehari_pohozaev(seed, params)?;
    let project = |v: &RadialField| project_nehari_pohozaev(v, params).map(|(_, w)| w);
    let descent = descend(start, params, config, op, &project)?;
    polish(descent, params, config, op)
}

/// Ground state on `M_inf`, seeded from the NLS soliton with the same `m, mu, p`.
pub fn minimize_nsp_ground(
    params: &Params,
    grid: &RadialGrid,
    config: &SolverConfig,
) -> Result<SolveReport> {
    require_nsp(params, "minimize_nsp_ground", 3.0, 6.0)?;
    let w0 = solve_nls_ground(params, grid, config)?;
    minimize_nsp_ground_from(&w0.u, params, config)
}

/// Global radial minimiser of `I~_inf` from a caller-supplied seed.
pub fn minimize_nsp_global_from(
    seed: &RadialField,
    params: &Params,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    require_nsp(params, "minimize_nsp_global", 2.0, 3.0)?;
    let op = "minimize_nsp_global";
    let identity = |v: &RadialField| Ok(v.clone());
    let descent = descend(seed.clone(), params, config, op, &identity)?;
    check_collapse(&descent.u, op)?;
    polish(descent, params, config, op)
}

/// Large-amplitude seed: the Gaussian `A exp(-(r/R)^2)` of lowest action over a
/// logarithmic scan of amplitudes and widths.
pub fn broad_seed(params: &Params, grid: &RadialGrid) -> RadialField {
    let base = (2.0 * params.m * params.mu).powf(1.0 / (params.p - 2.0));
    let widths = (0..24).map(|k| 4.0 * grid.h() * (0.125 * grid.r_max() / (4.0 * grid.h())).powf(k as f64 / 23.0));
    let mut best: Option<(f64, RadialField)> = None;
    for width in widths {
        for k in 0..24 {
            let amp = base * 0.5 * 2000f64.powf(k as f64 / 23.0);
            let mut v: Vec<f64> = grid.nodes().map(|r| amp * (-(r / width).powi(2)).exp()).collect();
            v[grid.n()] = 0.0;
            let u = RadialField::new(*grid, v).expect("finite seed");
            let Ok(e) = energy_of(&u, params) else { continue };
            if best.as_ref().is_none_or(|(b, _)| e < *b) {
                best = Some((e, u));
            }
        }
    }
    best.map(|(_, u)| u).unwrap_or_else(|| RadialField::zeros(*grid))
}

/// Global minimiser of `I~_inf` for `2 < p < 3` from [`broad_seed`].
pub fn minimize_nsp_global(
    params: &Params,
    grid: &RadialGrid,
    config: &SolverConfig,
) -> Result<SolveReport> {
    require_nsp(params, "minimize_nsp_global", 2.0, 3.0)?;
    minimize_nsp_global_from(&broad_seed(params, grid), params, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::action_nsp;
    use crate::radial::h1_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> RadialGrid {
        RadialGrid::new(1200, 24.0).unwrap()
    }

    #[test]
    fn projection_fixed_point_and_rescaling() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let ground = minimize_nsp_ground(&params, &grid(), &SolverConfig::default()).unwrap();
        let (_, on_manifold) = project_nehari_pohozaev(&ground.u, &params).unwrap();
        let (t, _) = project_nehari_pohozaev(&on_manifold, &params).unwrap();
        assert!((t - 1.0).abs() < 1e-8, "{t}");

        let (t, projected) = project_nehari_pohozaev(&ground.u.scale(2.0), &params).unwrap();
        assert!(t < 1.0);
        let poly = ScalingPolynomial::new(&projected, &params);
        let g = poly.derivative(1.0);
        let scale = poly.gradient + poly.m_mu * poly.mass;
        assert!(g.abs() <= 1e-10 * scale, "{g}");
    }

    #[test]
    fn projection_fails_without_positive_part() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let u = RadialField::from_fn(grid(), |r| -(-r).exp());
        assert!(matches!(
            project_nehari_pohozaev(&u, &params),
            Err(Error::Projection(_))
        ));
    }

    #[test]
    fn ground_state_identities() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let fine = RadialGrid::new(6000, 24.0).unwrap();
        let r = minimize_nsp_ground(&params, &fine, &SolverConfig::default()).unwrap();
        assert!(r.converged && r.positivity);
        let scale = r.energy.scale(&params);
        assert!(r.energy.nehari.abs() <= 1e-6 * scale);
        assert!(r.energy.pohozaev.abs() <= 1e-4 * scale, "{}", r.energy.pohozaev / scale);
        let (lhs, rhs) = r.energy.nsp_level_identity(&params);
        assert!((lhs - rhs).abs() <= 1e-4 * lhs.abs());
    }

    #[test]
    fn weak_coupling_matches_nls() {
        let params = Params::nsp(1.0, 1.0, 1e-4, 4.0);
        let config = SolverConfig::default();
        let w0 = solve_nls_ground(&params, &grid(), &config).unwrap();
        let r = minimize_nsp_ground(&params, &grid(), &config).unwrap();
        assert!(h1_norm(&r.u.sub(&w0.u)) <= 1e-3 * h1_norm(&w0.u));
        assert!((r.energy.action - w0.energy.action).abs() <= 1e-3 * w0.energy.action.abs());
    }

    #[test]
    fn random_seeds_reach_the_same_level() {
        let params = Params::nsp(1.0, 1.0, 0.5, 4.0);
        let config = SolverConfig::default();
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut levels = Vec::new();
        for _ in 0..4 {
            let amp = rng.gen_range(0.5..3.0);
            let width = rng.gen_range(0.7..3.0);
            let wobble = rng.gen_range(0.0..0.3);
            let seed = RadialField::from_fn(g, |r| {
                amp * (-(r / width).powi(2)).exp() * (1.0 + wobble * (3.0 * r).cos())
            });
            let r = minimize_nsp_ground_from(&seed, &params, &config).unwrap();
            levels.push(r.energy.action);
        }
        for e in &levels {
            assert!((e - levels[0]).abs() <= 1e-5 * levels[0].abs(), "{levels:?}");
        }
    }

    #[test]
    fn global_minimizer_has_negative_energy() {
        let params = Params::nsp(1.0, 1.0, 0.02, 2.5);
        let g = RadialGrid::new(3000, 30.0).unwrap();
        let r = minimize_nsp_global(&params, &g, &SolverConfig::default()).unwrap();
        assert!(r.converged && r.positivity);
        let e = action_nsp(&r.u, &params, true).unwrap();
        assert!(e.action < 0.0, "{}", e.action);
    }

    #[test]
    fn large_charge_collapses() {
        let params = Params::nsp(1.0, 1.0, 10.0, 2.5);
        let g = RadialGrid::new(600, 24.0).unwrap();
        let r = minimize_nsp_global(&params, &g, &SolverConfig::default());
        assert!(matches!(r, Err(Error::Collapse { .. })), "{r:?}");
    }
}
