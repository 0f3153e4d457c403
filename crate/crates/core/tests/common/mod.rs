//! Test-only oracles, independent of the library's linear-algebra path:
//! plain Gaussian elimination with partial pivoting for solves and
//! log-determinants.

use nalgebra::{DMatrix, DVector};

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[(row, col)].abs() > m[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            m.swap_rows(col, pivot);
            x.swap_rows(col, pivot);
        }
        let d = m[(col, col)];
        for row in col + 1..n {
            let f = m[(row, col)] / d;
            for k in col..n {
                let v = m[(col, k)];
                m[(row, k)] -= f * v;
            }
            let v = x[col];
            x[row] -= f * v;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[(col, k)] * x[k];
        }
        x[col] = s / m[(col, col)];
    }
    x
}

/// log |det A| via the elimination pivots (SPD input keeps them positive).
pub fn gauss_log_det(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut m = a.clone();
    let mut log_det = 0.0;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[(row, col)].abs() > m[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            m.swap_rows(col, pivot);
        }
        let d = m[(col, col)];
        log_det += d.abs().ln();
        for row in col + 1..n {
            let f = m[(row, col)] / d;
            for k in col..n {
                let v = m[(col, k)];
                m[(row, k)] -= f * v;
            }
        }
    }
    log_det
}
