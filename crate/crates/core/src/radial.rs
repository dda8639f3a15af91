//! Uniform radial meshes on `[0, r_max]` and the quadrature, differential
//! operators and norms used for radially symmetric functions on R^3.
//!
//! Fields are nodal samples `u(r_j)`, `r_j = j h`. Outside `[0, r_max]` a field
//! is taken to vanish (Dirichlet closure).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of intervals.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    n: usize,
    r_max: f64,
    h: f64,
}

impl RadialGrid {
    /// Uniform grid with `n` intervals (`n + 1` nodes) on `[0, r_max]`.
    pub fn new(n: usize, r_max: f64) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::Config(format!(
                "make_grid: n = {n} is below the minimum of {MIN_NODES}"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Config(format!(
                "make_grid: r_max = {r_max} must be positive and finite"
            )));
        }
        Ok(Self {
            n,
            r_max,
            h: r_max / n as f64,
        })
    }

    /// Number of intervals. The grid has `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        if j == self.n {
            self.r_max
        } else {
            j as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |j| self.r(j))
    }

    /// Trapezoid weights of `4 pi r^2 dr`; `w_0 = 0`, the last node carries half a cell.
    pub fn weights(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self
            .nodes()
            .map(|r| 4.0 * PI * r * r * self.h)
            .collect();
        w[self.n] *= 0.5;
        w
    }
}

/// Nodal samples of a radial function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid {
                op: "RadialField::new",
                msg: format!("{} values for a grid of {} nodes", values.len(), grid.len()),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid {
                op: "RadialField::new",
                msg: format!("non-finite value at node {j}"),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub(crate) fn from_values_unchecked(grid: RadialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_values_unchecked(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Value at an arbitrary radius by 4-point Lagrange interpolation. The field is
    /// extended evenly to `r < 0` and by zero beyond `r_max`.
    pub fn sample_at(&self, r: f64) -> f64 {
        let r = r.abs();
        let n = self.grid.n;
        if r >= self.grid.r_max + self.grid.h {
            return 0.0;
        }
        let x = r / self.grid.h;
        let j = (x.floor() as isize).min(n as isize);
        let node = |k: isize| -> f64 {
            let k = k.unsigned_abs() as isize;
            if k > n as isize {
                0.0
            } else {
                self.values[k as usize]
            }
        };
        let s = x - j as f64;
        let (f0, f1, f2, f3) = (node(j - 1), node(j), node(j + 1), node(j + 2));
        // cubic through s = -1, 0, 1, 2
        -s * (s - 1.0) * (s - 2.0) / 6.0 * f0 + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * f1
            - (s + 1.0) * s * (s - 2.0) / 2.0 * f2
            + (s + 1.0) * s * (s - 1.0) / 6.0 * f3
    }

    /// Value at `r` by linear interpolation between nodes (zero beyond `r_max`).
    pub fn sample_linear(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.grid.r_max {
            return if r == self.grid.r_max {
                self.values[self.grid.n]
            } else {
                0.0
            };
        }
        let x = r / self.grid.h;
        let j = (x.floor() as usize).min(self.grid.n - 1);
        let s = x - j as f64;
        (1.0 - s) * self.values[j] + s * self.values[j + 1]
    }
}

/// `4 pi * integral_0^{r_max} f(r) r^2 dr` by the composite trapezoid rule.
pub fn integrate_r3(f: &RadialField) -> f64 {
    integrate_values(&f.grid, &f.values)
}

pub(crate) fn integrate_values(grid: &RadialGrid, values: &[f64]) -> f64 {
    let h = grid.h;
    let n = grid.n;
    let mut acc = 0.0;
    for (j, &v) in values.iter().enumerate().take(n).skip(1) {
        let r = j as f64 * h;
        acc += v * r * r;
    }
    acc += 0.5 * values[n] * grid.r_max * grid.r_max;
    4.0 * PI * h * acc
}

/// Radial Laplacian `u'' + (2/r) u'`.
///
/// Interior nodes use the centred 3-point stencil, the origin uses the symmetry
/// limit `6 (u_1 - u_0) / h^2` and the last node sees a Dirichlet ghost value 0.
pub fn laplacian_radial(u: &RadialField) -> RadialField {
    let grid = u.grid;
    let n = grid.n;
    let h = grid.h;
    let v = &u.values;
    let mut out = vec![0.0; n + 1];
    out[0] = 6.0 * (v[1] - v[0]) / (h * h);
    for j in 1..=n {
        let right = if j < n { v[j + 1] } else { 0.0 };
        let r = grid.r(j);
        out[j] = (right - 2.0 * v[j] + v[j - 1]) / (h * h) + (right - v[j - 1]) / (h * r);
    }
    RadialField::from_values_unchecked(grid, out)
}

/// Radial derivative: 5-point centred differences inside, 3-point next to the
/// ends, one-sided at both ends.
pub fn derivative(u: &RadialField) -> RadialField {
    let n = u.grid.n;
    let h = u.grid.h;
    let v = &u.values;
    let mut d = vec![0.0; n + 1];
    d[0] = (v[1] - v[0]) / h;
    for j in 1..n {
        d[j] = if j >= 2 && j + 2 <= n {
            (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) / (12.0 * h)
        } else {
            (v[j + 1] - v[j - 1]) / (2.0 * h)
        };
    }
    d[n] = (v[n] - v[n - 1]) / h;
    RadialField::from_values_unchecked(u.grid, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub lp: f64,
    pub h1: f64,
    pub d12: f64,
    pub linf: f64,
}

/// L2, L^p, H1, D^{1,2} and sup norms of a radial field on R^3.
pub fn norms(u: &RadialField, p: f64) -> Result<Norms> {
    if !(2.0..=6.0).contains(&p) {
        return Err(Error::Config(format!(
            "norms: exponent p = {p} must lie in [2, 6]"
        )));
    }
    let l2sq = integrate_r3(&u.map(|v| v * v));
    let lp = integrate_r3(&u.map(|v| v.abs().powf(p))).powf(1.0 / p);
    let du = derivative(u);
    let d12sq = integrate_r3(&du.map(|v| v * v));
    Ok(Norms {
        l2: l2sq.sqrt(),
        lp,
        h1: (l2sq + d12sq).sqrt(),
        d12: d12sq.sqrt(),
        linf: u.max_abs(),
    })
}

/// H1 norm of a field (p-independent part of [`norms`]).
pub fn h1_norm(u: &RadialField) -> f64 {
    norms(u, 2.0).map(|n| n.h1).unwrap_or(f64::NAN)
}
