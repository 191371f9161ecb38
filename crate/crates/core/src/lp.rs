//! Dense primal simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is feasible because `b >= 0`, so no phase one is needed.
//! Pivoting follows Bland's rule, which cannot cycle on degenerate problems.

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
}

/// Solves the LP. `a` is row-major with one row per constraint.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::Input("inconsistent LP dimensions".into()));
    }
    if b.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::Input("right-hand side must be nonnegative".into()));
    }
    let width = n + m + 1;
    // Rows 0..m are constraints, row m is the reduced-cost row (-c).
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        t[i * width..i * width + n].copy_from_slice(&a[i]);
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = b[i];
    }
    for j in 0..n {
        t[m * width + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_pivots = 50 * (n + m) + 1000;
    let mut pivots = 0;
    loop {
        // Bland: smallest-index improving column.
        let Some(col) = (0..n + m).find(|&j| t[m * width + j] < -EPS) else {
            break;
        };
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = t[i * width + col];
            if aij > EPS {
                let ratio = t[i * width + width - 1] / aij;
                let better = ratio < best - EPS
                    || (ratio <= best + EPS && row.is_some_and(|r: usize| basis[i] < basis[r]));
                if better {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let Some(row) = row else {
            return Err(Error::Numerical(format!(
                "LP unbounded along column {col} after {pivots} pivots"
            )));
        };
        pivot(&mut t, width, m, row, col);
        basis[row] = col;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Numerical(format!(
                "simplex did not terminate within {max_pivots} pivots"
            )));
        }
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i * width + width - 1].max(0.0);
        }
    }
    let objective = t[m * width + width - 1];
    Ok(LpSolution { objective, x, pivots })
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for v in &mut t[row * width..(row + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = t[row * width..(row + 1) * width].to_vec();
    for i in 0..=m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for (v, pr) in t[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
        }
    }
}
