//! Minimal dense two-phase simplex for the linear feasibility questions that
//! arise in the hypothesis checks: minimize `c'x` subject to `Ax <= b`, `x >= 0`.
//! Bland's rule throughout, so the iteration cannot cycle.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { x: DVector<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;

/// Solve `min c'x  s.t.  A x <= b, x >= 0`.
pub fn solve(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpResult {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);

    // columns: n structural, m slacks, up to m artificials, then rhs
    let mut artificial_of_row: Vec<Option<usize>> = vec![None; m];
    let mut n_art = 0;
    for i in 0..m {
        if b[i] < 0.0 {
            artificial_of_row[i] = Some(n_art);
            n_art += 1;
        }
    }
    let total = n + m + n_art;
    let mut t = DMatrix::<f64>::zeros(m + 1, total + 1);
    let mut basis = vec![0usize; m];

    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = flip * a[(i, j)];
        }
        t[(i, n + i)] = flip; // slack
        t[(i, total)] = flip * b[i];
        if let Some(k) = artificial_of_row[i] {
            t[(i, n + m + k)] = 1.0;
            basis[i] = n + m + k;
        } else {
            basis[i] = n + i;
        }
    }

    if n_art > 0 {
        // phase 1: minimize the sum of artificials
        for j in 0..=total {
            let mut s = 0.0;
            for i in 0..m {
                if basis[i] >= n + m {
                    s += t[(i, j)];
                }
            }
            t[(m, j)] = -s;
        }
        for k in 0..n_art {
            t[(m, n + m + k)] = 0.0;
        }
        if !pivot_loop(&mut t, &mut basis, total) {
            return LpResult::Infeasible; // phase 1 cannot be unbounded
        }
        if -t[(m, total)] > 1e-7 {
            return LpResult::Infeasible;
        }
        // drive leftover zero-valued artificials out of the basis
        for i in 0..m {
            if basis[i] >= n + m {
                let mut pivoted = false;
                for j in 0..(n + m) {
                    if t[(i, j)].abs() > EPS {
                        pivot(&mut t, &mut basis, i, j, total);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    // redundant row; harmless to leave, its rhs is zero
                }
            }
        }
        // erase artificial columns so phase 2 cannot re-enter them
        for k in 0..n_art {
            for i in 0..=m {
                t[(i, n + m + k)] = 0.0;
            }
        }
    }

    // phase 2 objective row: reduced costs of c w.r.t. the current basis
    for j in 0..=total {
        t[(m, j)] = 0.0;
    }
    for j in 0..n {
        t[(m, j)] = c[j];
    }
    for i in 0..m {
        if basis[i] >= n + m {
            continue;
        }
        let cb = if basis[i] < n { c[basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=total {
                t[(m, j)] -= cb * t[(i, j)];
            }
        }
    }

    if !pivot_loop(&mut t, &mut basis, total) {
        return LpResult::Unbounded;
    }

    let mut x = DVector::zeros(n);
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[(i, total)];
        }
    }
    let objective = c.dot(&x);
    LpResult::Optimal { x, objective }
}

// Bland-rule simplex iterations; returns false if the problem is unbounded.
fn pivot_loop(t: &mut DMatrix<f64>, basis: &mut [usize], total: usize) -> bool {
    let m = basis.len();
    for _ in 0..50_000 {
        // entering: smallest index with negative reduced cost
        let mut entering = None;
        for j in 0..total {
            if t[(m, j)] < -EPS {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return true;
        };
        // leaving: Bland ratio test
        let mut leaving: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[(i, e)] > EPS {
                let ratio = t[(i, total)] / t[(i, e)];
                let better = ratio < best - EPS
                    || (ratio < best + EPS
                        && leaving.map_or(true, |l| basis[i] < basis[l]));
                if better {
                    best = ratio;
                    leaving = Some(i);
                }
            }
        }
        let Some(l) = leaving else {
            return false;
        };
        pivot(t, basis, l, e, total);
    }
    true
}

fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize, total: usize) {
    let m = basis.len();
    let p = t[(row, col)];
    for j in 0..=total {
        t[(row, j)] /= p;
    }
    for i in 0..=m {
        if i == row {
            continue;
        }
        let f = t[(i, col)];
        if f != 0.0 {
            for j in 0..=total {
                t[(i, j)] -= f * t[(row, j)];
            }
        }
    }
    basis[row] = col;
}

/// Feasibility of `A x <= b, x >= 0` (zero objective).
pub fn feasible_point(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    match solve(&DVector::zeros(a.ncols()), a, b) {
        LpResult::Optimal { x, .. } => Some(x),
        _ => None,
    }
}
