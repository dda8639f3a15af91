//! The NLS soliton `-Delta w + lambda w = w^{p-1}`, `lambda = 2 m mu`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{dirichlet_energy, dual_norm, precondition};
use crate::params::Params;
use crate::radial::{integrate_r3, RadialField, RadialGrid};

use super::newton::newton_solve;
use super::{SolveReport, SolverConfig};

/// Continuous profile from shooting: RK4 samples on `[0, r_match]` with cubic
/// Hermite interpolation, then the exact decaying solution `A e^{-k r} / r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingProfile {
    pub lambda: f64,
    pub p: f64,
    pub u0: f64,
    pub ds: f64,
    pub r_match: f64,
    pub tail_amplitude: f64,
    u: Vec<f64>,
    du: Vec<f64>,
}

/// Continuum integrals of a shooting profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileIntegrals {
    pub gradient: f64,
    pub mass: f64,
    pub power: f64,
    /// `A + lambda B - D`
    pub nehari: f64,
    /// `A/2 + 3/2 lambda B - 3/p D`
    pub pohozaev: f64,
}

impl ShootingProfile {
    pub fn decay_rate(&self) -> f64 {
        self.lambda.sqrt()
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_match {
            let k = self.decay_rate();
            return self.tail_amplitude * (-k * r).exp() / r;
        }
        let x = r / self.ds;
        let i = (x.floor() as usize).min(self.u.len() - 2);
        let s = x - i as f64;
        let (y0, y1) = (self.u[i], self.u[i + 1]);
        let (m0, m1) = (self.du[i] * self.ds, self.du[i + 1] * self.ds);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }

    pub fn sample(&self, grid: &RadialGrid) -> RadialField {
        let mut v: Vec<f64> = grid.nodes().map(|r| self.eval(r)).collect();
        v[grid.n()] = 0.0;
        RadialField::from_values_unchecked(*grid, v)
    }

    /// Simpson quadrature over the RK4 samples plus the analytic tail.
    pub fn integrals(&self) -> ProfileIntegrals {
        let m = self.u.len() - 1;
        let m_even = m - m % 2;
        let p = self.p;
        let simpson = |f: &dyn Fn(usize) -> f64| -> f64 {
            let mut acc = f(0) + f(m_even);
            for i in 1..m_even {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
            }
            acc * self.ds / 3.0
        };
        let r = |i: usize| i as f64 * self.ds;
        let mut a = 4.0 * PI * simpson(&|i| (r(i) * self.du[i]).powi(2));
        let mut b = 4.0 * PI * simpson(&|i| (r(i) * self.u[i]).powi(2));
        let d = 4.0 * PI * simpson(&|i| r(i) * r(i) * self.u[i].max(0.0).powf(p));
        // tail beyond the last even sample, where u ~ A e^{-kr}/r
        let k = self.decay_rate();
        let r0 = r(m_even);
        let amp2 = self.tail_amplitude.powi(2) * (-2.0 * k * r0).exp();
        let tail_b = 4.0 * PI * amp2 / (2.0 * k);
        b += tail_b;
        a += tail_b * (k + 1.0 / r0).powi(2);
        let lambda = self.lambda;
        ProfileIntegrals {
            gradient: a,
            mass: b,
            power: d,
            nehari: a + lambda * b - d,
            pohozaev: 0.5 * a + 1.5 * lambda * b - 3.0 / p * d,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Shot {
    Over,
    Under,
}

struct Trajectory {
    u: Vec<f64>,
    du: Vec<f64>,
}

fn shoot(u0: f64, lambda: f64, p: f64, ds: f64, r_end: f64, record: bool) -> (Shot, Trajectory) {
    let rhs = |r: f64, u: f64, v: f64| -> (f64, f64) {
        (v, lambda * u - u.max(0.0).powf(p - 1.0) - 2.0 * v / r)
    };
    let c = (lambda * u0 - u0.powf(p - 1.0)) / 3.0;
    let mut traj = Trajectory {
        u: vec![u0],
        du: vec![0.0],
    };
    let mut r = ds;
    let mut u = u0 + 0.5 * c * ds * ds;
    let mut v = c * ds;
    if record {
        traj.u.push(u);
        traj.du.push(v);
    }
    let steps = (r_end / ds) as usize;
    for _ in 1..steps {
        let (k1u, k1v) = rhs(r, u, v);
        let (k2u, k2v) = rhs(r + 0.5 * ds, u + 0.5 * ds * k1u, v + 0.5 * ds * k1v);
        let (k3u, k3v) = rhs(r + 0.5 * ds, u + 0.5 * ds * k2u, v + 0.5 * ds * k2v);
        let (k4u, k4v) = rhs(r + ds, u + ds * k3u, v + ds * k3v);
        u += ds / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += ds / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        r += ds;
        if record {
            traj.u.push(u);
            traj.du.push(v);
        }
        if u < 0.0 {
            return (Shot::Over, traj);
        }
        if v > 0.0 {
            return (Shot::Under, traj);
        }
    }
    (Shot::Under, traj)
}

/// Shooting on `u'' + (2/r) u' = lambda u - u^{p-1}` with bisection on `u(0)`.
pub fn shoot_nls(p: f64, lambda: f64, max_iter: usize) -> Result<ShootingProfile> {
    if !(p > 2.0 && p < 6.0) || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Invalid {
            op: "solve_nls_ground",
            msg: format!("requires 2 < p < 6 and lambda > 0 (p = {p}, lambda = {lambda})"),
        });
    }
    let k = lambda.sqrt();
    let ds = 5e-4 / k;
    let r_end = 80.0 / k;
    let equilibrium = lambda.powf(1.0 / (p - 2.0));
    let mut lo = 1.01 * equilibrium;
    if shoot(lo, lambda, p, ds, r_end, false).0 != Shot::Under {
        return Err(Error::NonConvergence {
            op: "solve_nls_ground",
            iterations: 0,
            residual: lo,
        });
    }
    let mut hi = 2.0 * equilibrium;
    let mut it = 0;
    while shoot(hi, lambda, p, ds, r_end, false).0 == Shot::Under {
        lo = hi;
        hi *= 2.0;
        it += 1;
        if it >= max_iter {
            return Err(Error::NonConvergence {
                op: "solve_nls_ground",
                iterations: it,
                residual: hi,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, lambda, p, ds, r_end, false).0 {
            Shot::Under => lo = mid,
            Shot::Over => hi = mid,
        }
    }
    let (_, lower) = shoot(lo, lambda, p, ds, r_end, true);
    let (_, upper) = shoot(hi, lambda, p, ds, r_end, true);
    // match where the bracketing trajectories still agree and u has decayed
    let threshold = 1e-6 * lo;
    let len = lower.u.len().min(upper.u.len());
    let mut idx = None;
    for i in 1..len {
        let spread = (lower.u[i] - upper.u[i]).abs();
        if spread > 1e-3 * lower.u[i].abs() {
            break;
        }
        if lower.u[i] < threshold {
            idx = Some(i);
            break;
        }
    }
    let idx = idx.ok_or(Error::NonConvergence {
        op: "solve_nls_ground",
        iterations: 200,
        residual: lower.u[len - 1],
    })?;
    let r_match = idx as f64 * ds;
    let tail_amplitude = lower.u[idx] * r_match * (k * r_match).exp();
    Ok(ShootingProfile {
        lambda,
        p,
        u0: lo,
        ds,
        r_match,
        tail_amplitude,
        u: lower.u[..=idx].to_vec(),
        du: lower.du[..=idx].to_vec(),
    })
}

fn nls_params(params: &Params) -> Result<Params> {
    if !(params.m > 0.0 && params.mu > 0.0) {
        return Err(Error::Config(format!(
            "solve_nls_ground: requires m > 0 and mu > 0 (m = {}, mu = {})",
            params.m, params.mu
        )));
    }
    if !(params.p > 2.0 && params.p < 6.0) {
        return Err(Error::Config(format!(
            "solve_nls_ground: requires 2 < p < 6 (p = {})",
            params.p
        )));
    }
    Ok(Params::nsp(params.m, params.mu, 0.0, params.p))
}

/// Ground state of the NLS equation with `lambda = 2 m mu` on `grid`: shooting
/// provides the profile, which is then polished into the exact discrete solution.
/// The returned report carries `q = 0`.
pub fn solve_nls_ground(
    params: &Params,
    grid: &RadialGrid,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let nls = nls_params(params)?;
    let profile = shoot_nls(nls.p, nls.mass_coeff(), config.max_iter)?;
    let (u, _, it) = newton_solve(&profile.sample(grid), &nls, config)?;
    SolveReport::assemble(u, &nls, it, config)
}

/// Outcome of the Nehari-rescaled flow, including runs outside the admissible range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub p: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final dual gradient norm relative to the energy norm.
    pub relative_gradient: f64,
    pub initial_max: f64,
    pub final_max: f64,
    /// `converged`, `collapsed`, `blow-up`, `non-finite` or `stalled`.
    pub status: String,
    #[serde(skip)]
    pub u: Option<RadialField>,
}

/// `u <- (1 - tau) u + tau (-Delta + lambda)^{-1} u_+^{p-1}`, followed by the
/// rescaling that puts `u` on the Nehari manifold, from a Gaussian seed of height
/// `2 lambda^{1/(p-2)}`. No range check on `p`.
pub fn nehari_flow(p: f64, lambda: f64, grid: &RadialGrid, config: &SolverConfig) -> Result<FlowTrace> {
    let nls = Params::nsp(0.5 * lambda, 1.0, 0.0, p);
    let tau = config.damping.min(1.0);
    let width = 2.0 / lambda.sqrt();
    let height = 2.0 * lambda.powf(1.0 / (p - 2.0));
    let mut u = RadialField::from_fn(*grid, |r| {
        if r < grid.r_max() {
            height * (-(r / width).powi(2)).exp()
        } else {
            0.0
        }
    });
    let mut trace = FlowTrace {
        p,
        iterations: 0,
        converged: false,
        relative_gradient: f64::INFINITY,
        initial_max: u.max_abs(),
        final_max: u.max_abs(),
        status: "stalled".into(),
        u: None,
    };
    let power = |u: &RadialField| u.map(|v| v.max(0.0).powf(p - 1.0));
    for it in 1..=config.max_iter {
        trace.iterations = it;
        let z = precondition(&power(&u), lambda)?;
        let next = u.scale(1.0 - tau).add(&z.scale(tau));
        let quad = dirichlet_energy(&next) + lambda * integrate_r3(&next.map(|v| v * v));
        let d = integrate_r3(&next.map(|v| v.max(0.0).powf(p)));
        if !(quad.is_finite() && d.is_finite()) {
            trace.status = "non-finite".into();
            break;
        }
        if !(d > 0.0 && quad > 1e-300) {
            trace.status = "collapsed".into();
            trace.final_max = 0.0;
            break;
        }
        let mut scaled = next.scale((quad / d).powf(1.0 / (p - 2.0)));
        if scaled.values().iter().any(|v| !v.is_finite()) {
            trace.status = "non-finite".into();
            break;
        }
        // node 0 carries no weight in the energy, so the rescaling cannot hold it;
        // it is set from its own row of the discrete equation instead
        match origin_value(scaled.values()[1], lambda, p, grid.h()) {
            Some(v0) => scaled.values_mut()[0] = v0,
            None => {
                trace.status = "blow-up".into();
                trace.final_max = scaled.max_abs();
                break;
            }
        }
        u = scaled;
        trace.final_max = u.max_abs();
        let g = crate::functionals::residual_with_phi(&u, &RadialField::zeros(*grid), &nls, true);
        let size = (dirichlet_energy(&u) + lambda * integrate_r3(&u.map(|v| v * v))).sqrt();
        trace.relative_gradient = dual_norm(&g, lambda) / size.max(1.0);
        if !trace.relative_gradient.is_finite() {
            trace.status = "non-finite".into();
            break;
        }
        if trace.relative_gradient <= config.tol_grad {
            trace.converged = true;
            trace.status = "converged".into();
            break;
        }
    }
    trace.u = Some(u);
    Ok(trace)
}

/// Smaller root of `6 (x - u1)/h^2 + lambda x - x^{p-1} = 0`, the discrete equation at
/// the origin, or `None` when the concave left side stays negative.
fn origin_value(u1: f64, lambda: f64, p: f64, h: f64) -> Option<f64> {
    let k = 6.0 / (h * h);
    let f = |x: f64| (k + lambda) * x - k * u1 - x.max(0.0).powf(p - 1.0);
    let df = |x: f64| k + lambda - (p - 1.0) * x.max(0.0).powf(p - 2.0);
    let mut x = u1.max(0.0);
    for _ in 0..100 {
        let slope = df(x);
        if !(slope > 0.0) {
            return None;
        }
        let next = x - f(x) / slope;
        if (next - x).abs() <= 1e-15 * next.abs() {
            return Some(next);
        }
        x = next;
    }
    (f(x).abs() <= 1e-10 * k * u1.abs().max(1.0)).then_some(x)
}

/// Ground state of the NLS equation by [`nehari_flow`] on `grid`.
pub fn nls_descent(
    params: &Params,
    grid: &RadialGrid,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let nls = nls_params(params)?;
    let trace = nehari_flow(nls.p, nls.mass_coeff(), grid, config)?;
    let u = trace.u.clone().unwrap_or_else(|| RadialField::zeros(*grid));
    if trace.status == "collapsed" {
        return Err(Error::Collapse {
            op: "nls_descent",
            norm: 0.0,
        });
    }
    if !trace.converged {
        return Err(Error::NonConvergence {
            op: "nls_descent",
            iterations: trace.iterations,
            residual: trace.relative_gradient,
        });
    }
    SolveReport::assemble(u, &nls, trace.iterations, config)
}
