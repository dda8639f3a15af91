//! Banded direct solvers: scalar tridiagonal (Thomas) and 2x2 block tridiagonal.

use crate::error::{Error, Result};

/// Tridiagonal system `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
/// `lower[0]` and `upper[last]` are ignored.
pub(crate) fn solve_tridiagonal(
    op: &'static str,
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut b = diag[0];
    if b == 0.0 || !b.is_finite() {
        return Err(Error::SingularSystem { op, row: 0 });
    }
    c[0] = upper[0] / b;
    d[0] = rhs[0] / b;
    for i in 1..n {
        b = diag[i] - lower[i] * c[i - 1];
        if b == 0.0 || !b.is_finite() {
            return Err(Error::SingularSystem { op, row: i });
        }
        c[i] = upper[i] / b;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / b;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

pub(crate) type Block = [[f64; 2]; 2];
pub(crate) type Pair = [f64; 2];

pub(crate) const ZERO_BLOCK: Block = [[0.0; 2]; 2];

fn mat_mul(a: &Block, b: &Block) -> Block {
    let mut m = ZERO_BLOCK;
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

fn mat_vec(a: &Block, x: &Pair) -> Pair {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

fn inverse(a: &Block) -> Option<Block> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs()).max(a[1][0].abs());
    if !det.is_finite() || scale == 0.0 || det.abs() <= 1e-14 * scale * scale {
        return None;
    }
    Some([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

/// Block tridiagonal system with 2x2 blocks solved by block elimination.
pub(crate) fn solve_block_tridiagonal(
    op: &'static str,
    lower: &[Block],
    diag: &[Block],
    upper: &[Block],
    rhs: &[Pair],
) -> Result<Vec<Pair>> {
    let n = diag.len();
    let mut c = vec![ZERO_BLOCK; n];
    let mut d = vec![[0.0; 2]; n];
    let mut inv = inverse(&diag[0]).ok_or(Error::SingularSystem { op, row: 0 })?;
    c[0] = mat_mul(&inv, &upper[0]);
    d[0] = mat_vec(&inv, &rhs[0]);
    for i in 1..n {
        let lc = mat_mul(&lower[i], &c[i - 1]);
        let mut b = diag[i];
        for r in 0..2 {
            for s in 0..2 {
                b[r][s] -= lc[r][s];
            }
        }
        inv = inverse(&b).ok_or(Error::SingularSystem { op, row: i })?;
        c[i] = mat_mul(&inv, &upper[i]);
        let ld = mat_vec(&lower[i], &d[i - 1]);
        d[i] = mat_vec(&inv, &[rhs[i][0] - ld[0], rhs[i][1] - ld[1]]);
    }
    for i in (0..n - 1).rev() {
        let cx = mat_vec(&c[i], &d[i + 1]);
        d[i][0] -= cx[0];
        d[i][1] -= cx[1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense_product() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| -1.0 - 0.1 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.5 + 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 4.0 + i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        let sol = solve_tridiagonal("test", &lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in sol.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_tridiagonal_is_reported() {
        let r = solve_tridiagonal("test", &[0.0, 1.0], &[1.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]);
        assert_eq!(r, Err(Error::SingularSystem { op: "test", row: 1 }));
    }

    #[test]
    fn block_tridiagonal_matches_dense_product() {
        let n = 6;
        let blk = |i: usize, k: f64| -> Block {
            let t = i as f64;
            [[k + t, 0.3 * t - 0.1], [0.2 - 0.05 * t, k + 0.5 * t]]
        };
        let lower: Vec<Block> = (0..n).map(|i| blk(i, -1.0)).collect();
        let upper: Vec<Block> = (0..n).map(|i| blk(i, -0.7)).collect();
        let diag: Vec<Block> = (0..n).map(|i| blk(i, 6.0)).collect();
        let x: Vec<Pair> = (0..n).map(|i| [(i as f64).cos(), 1.0 - 0.2 * i as f64]).collect();
        let rhs: Vec<Pair> = (0..n)
            .map(|i| {
                let mut s = mat_vec(&diag[i], &x[i]);
                if i > 0 {
                    let l = mat_vec(&lower[i], &x[i - 1]);
                    s = [s[0] + l[0], s[1] + l[1]];
                }
                if i + 1 < n {
                    let u = mat_vec(&upper[i], &x[i + 1]);
                    s = [s[0] + u[0], s[1] + u[1]];
                }
                s
            })
            .collect();
        let sol = solve_block_tridiagonal("test", &lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in sol.iter().zip(&x) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }
}
