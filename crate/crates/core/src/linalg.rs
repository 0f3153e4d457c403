//! Shared dense linear-algebra helpers.

use nalgebra::{Cholesky, DMatrix, Dyn};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FactorizationError {
    #[error(
        "Cholesky factorization failed after jitter escalation (last jitter {last_jitter:.3e}); \
         the Gram matrix is numerically indefinite"
    )]
    Indefinite { last_jitter: f64 },
}

/// Cholesky with the escalating-jitter policy.
///
/// First tries the matrix as given. On failure adds `1e-10 * trace / n` to
/// the diagonal and escalates that jitter by x10 up to three times before
/// giving up. Returns the factor and the jitter that was actually applied.
pub fn cholesky_with_jitter(
    matrix: &DMatrix<f64>,
) -> Result<(Cholesky<f64, Dyn>, f64), FactorizationError> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "cholesky of a non-square matrix");
    if let Some(chol) = Cholesky::new(matrix.clone()) {
        return Ok((chol, 0.0));
    }
    let base = 1e-10 * matrix.trace() / n as f64;
    let mut jitter = base.max(f64::MIN_POSITIVE);
    for _ in 0..3 {
        let mut jittered = matrix.clone();
        for i in 0..n {
            jittered[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(jittered) {
            return Ok((chol, jitter));
        }
        jitter *= 10.0;
    }
    Err(FactorizationError::Indefinite {
        last_jitter: jitter / 10.0,
    })
}
