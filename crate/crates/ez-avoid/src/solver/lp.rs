//! Dense two-phase simplex for the small linear programs arising as
//! trust-region subproblems.
//!
//! Solves `min c.x` subject to `a_i.x >= b_i` and finite box bounds
//! `lo <= x <= hi`. Bland's rule is used throughout, so the method is
//! deterministic and cannot cycle.

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpError {
    Infeasible,
    Unbounded,
    Numerical(String),
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;

/// Minimize `c.x` over `rows_ge` (each `a.x >= b`) within `[lo, hi]`.
pub(crate) fn solve_lp(
    c: &[f64],
    rows_ge: &[(Vec<f64>, f64)],
    lo: &[f64],
    hi: &[f64],
) -> Result<Vec<f64>, LpError> {
    let n = c.len();
    assert_eq!(lo.len(), n);
    assert_eq!(hi.len(), n);
    for j in 0..n {
        if hi[j] < lo[j] {
            return Err(LpError::Infeasible);
        }
    }

    // shift to y = x - lo, y in [0, u]; every constraint becomes `<=` form
    let u: Vec<f64> = (0..n).map(|j| hi[j] - lo[j]).collect();
    let m_general = rows_ge.len();
    let n_rows = m_general + n;

    // rows: coefficients over structural variables, rhs
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n_rows);
    for (a, b) in rows_ge {
        assert_eq!(a.len(), n);
        let shift: f64 = a.iter().zip(lo).map(|(ai, li)| ai * li).sum();
        // a.y >= b - a.lo  ->  (-a).y <= -(b - a.lo)
        rows.push((a.iter().map(|v| -v).collect(), -(b - shift)));
    }
    for (j, &uj) in u.iter().enumerate() {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        rows.push((a, uj));
    }

    // negative right-hand sides get their row negated and an artificial
    let needs_artificial: Vec<bool> = rows.iter().map(|(_, rhs)| *rhs < 0.0).collect();
    let n_art = needs_artificial.iter().filter(|&&x| x).count();
    let n_cols = n + n_rows + n_art + 1; // structural, slacks, artificials, rhs
    let rhs_col = n_cols - 1;

    let mut t = vec![vec![0.0f64; n_cols]; n_rows];
    let mut basis = vec![0usize; n_rows];
    let mut art_cursor = n + n_rows;
    let art_start = n + n_rows;
    for (i, (a, rhs)) in rows.iter().enumerate() {
        let sign = if needs_artificial[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[j];
        }
        t[i][n + i] = sign; // slack
        t[i][rhs_col] = sign * rhs;
        if needs_artificial[i] {
            t[i][art_cursor] = 1.0;
            basis[i] = art_cursor;
            art_cursor += 1;
        } else {
            basis[i] = n + i;
        }
    }

    // phase 1: minimize the sum of artificials
    if n_art > 0 {
        let mut cost = vec![0.0f64; n_cols];
        for j in art_start..n_cols - 1 {
            cost[j] = 1.0;
        }
        for i in 0..n_rows {
            if basis[i] >= art_start {
                for j in 0..n_cols {
                    cost[j] -= t[i][j];
                }
            }
        }
        run_simplex(&mut t, &mut basis, &mut cost, rhs_col, usize::MAX)?;
        let z1 = -cost[rhs_col];
        if z1 > 1e-9 {
            return Err(LpError::Infeasible);
        }
        // pivot remaining artificials out of the basis where possible
        for i in 0..n_rows {
            if basis[i] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                    pivot(&mut t, &mut basis, None, i, j);
                }
                // otherwise the row is redundant; the artificial stays
                // basic at zero and can never re-enter
            }
        }
    }

    // phase 2: minimize the true objective; artificial columns are frozen
    let mut cost = vec![0.0f64; n_cols];
    cost[..n].copy_from_slice(c);
    for i in 0..n_rows {
        let cb = if basis[i] < n { c[basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..n_cols {
                cost[j] -= cb * t[i][j];
            }
        }
    }
    run_simplex(&mut t, &mut basis, &mut cost, rhs_col, art_start)?;

    let mut y = vec![0.0f64; n];
    for i in 0..n_rows {
        if basis[i] < n {
            y[basis[i]] = t[i][rhs_col];
        }
    }
    Ok((0..n).map(|j| y[j] + lo[j]).collect())
}

/// Bland-rule simplex on the tableau; columns at or beyond `col_limit`
/// never enter the basis.
fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &mut Vec<f64>,
    rhs_col: usize,
    col_limit: usize,
) -> Result<(), LpError> {
    let n_rows = t.len();
    let max_pivots = 200 * (n_rows + rhs_col);
    for _ in 0..max_pivots {
        let limit = col_limit.min(rhs_col);
        let Some(enter) = (0..limit).find(|&j| cost[j] < -COST_TOL) else {
            return Ok(());
        };
        // ratio test with Bland tie-breaking on the basic column index
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..n_rows {
            if t[i][enter] > PIVOT_TOL {
                let ratio = t[i][rhs_col] / t[i][enter];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12
                            || ((ratio - lr).abs() <= 1e-12 && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(LpError::Unbounded);
        };
        pivot(t, basis, Some(cost), row, enter);
    }
    Err(LpError::Numerical("simplex pivot limit exceeded".into()))
}

fn pivot(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: Option<&mut Vec<f64>>,
    row: usize,
    col: usize,
) {
    let n_cols = t[row].len();
    let inv = 1.0 / t[row][col];
    for j in 0..n_cols {
        t[row][j] *= inv;
    }
    t[row][col] = 1.0;
    for i in 0..t.len() {
        if i != row {
            let factor = t[i][col];
            if factor != 0.0 {
                for j in 0..n_cols {
                    t[i][j] -= factor * t[row][j];
                }
                t[i][col] = 0.0;
            }
        }
    }
    if let Some(cost) = cost {
        let factor = cost[col];
        if factor != 0.0 {
            for j in 0..n_cols {
                cost[j] -= factor * t[row][j];
            }
            cost[col] = 0.0;
        }
    }
    basis[row] = col;
}
