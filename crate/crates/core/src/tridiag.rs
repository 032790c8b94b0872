//! Thomas algorithm for tridiagonal systems.

use crate::error::{FinError, Result};

/// Solves `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];

    let pivot = checked_pivot(diag[0], 0)?;
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        let pivot = checked_pivot(diag[i] - lower[i] * c[i - 1], i)?;
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }

    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Solves the conductance chain `κ_{i-1}(x_i − x_{i-1}) + κ_i(x_i − x_{i+1}) + s_i x_i = f_i`
/// on nodes `1..=n` with `x_0 = inlet` and an extra `tip` sink on node `n`.
///
/// Pivots are carried as their surplus over the right conductance,
/// `e_i = s_i + κ_{i-1} e_{i-1} / (κ_{i-1} + e_{i-1})`, so sinks many orders of
/// magnitude below the conductances are not rounded away.
pub fn solve_chain(conductance: &[f64], sink: &[f64], tip: f64, inlet: f64, load: &[f64]) -> Result<Vec<f64>> {
    let n = conductance.len();
    debug_assert!(sink.len() == n + 1 && load.len() == n + 1);
    let mut pivot = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    let mut surplus = 0.0;
    for i in 1..=n {
        let left = conductance[i - 1];
        surplus = if i == 1 {
            left + sink[1]
        } else {
            sink[i] + left * surplus / (left + surplus)
        };
        let right = if i < n { conductance[i] } else { tip };
        pivot[i] = checked_pivot(right + surplus, i - 1)?;
        rhs[i] = load[i] + left * if i == 1 { inlet } else { rhs[i - 1] / pivot[i - 1] };
    }
    let mut x = vec![0.0; n + 1];
    x[0] = inlet;
    if n == 0 {
        return Ok(x);
    }
    x[n] = rhs[n] / pivot[n];
    for i in (1..n).rev() {
        x[i] = (rhs[i] + conductance[i] * x[i + 1]) / pivot[i];
    }
    Ok(x)
}

fn checked_pivot(p: f64, row: usize) -> Result<f64> {
    if p.is_finite() && p.abs() > f64::MIN_POSITIVE {
        Ok(p)
    } else {
        Err(FinError::Singular { row })
    }
}
