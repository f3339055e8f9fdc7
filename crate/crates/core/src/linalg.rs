//! Cholesky factorization with bounded diagonal jitter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const JITTER_START: f64 = 1e-14;
pub const JITTER_MAX: f64 = 1e-4;

/// Lower Cholesky factor of `a`, or of `a + jitter * I` when the plain
/// factorization fails: jitter starts at [`JITTER_START`] and escalates by
/// 10x up to [`JITTER_MAX`]. Returns the factor and the jitter used (0 when
/// none was needed).
pub fn cholesky_jittered(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let mut jitter = 0.0;
    loop {
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            let l = ch.unpack();
            if l.iter().all(|v| v.is_finite()) {
                return Ok((l, jitter));
            }
        }
        if jitter >= JITTER_MAX {
            return Err(Error::Conditioning { jitter });
        }
        jitter = if jitter == 0.0 { JITTER_START } else { (jitter * 10.0).min(JITTER_MAX) };
    }
}

/// Solve `L x = b` in place for lower-triangular `L`.
pub fn solve_lower(l: &DMatrix<f64>, b: &mut DVector<f64>) {
    let ok = l.solve_lower_triangular_mut(b);
    debug_assert!(ok);
}

/// Solve `L^T x = b` in place for lower-triangular `L`.
pub fn solve_lower_transpose(l: &DMatrix<f64>, b: &mut DVector<f64>) {
    let ok = l.tr_solve_lower_triangular_mut(b);
    debug_assert!(ok);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_matrix_is_repaired_with_recorded_jitter() {
        let a = DMatrix::from_element(3, 3, 1.0);
        let (l, jitter) = cholesky_jittered(&a).unwrap();
        assert!(jitter >= JITTER_START && jitter <= JITTER_MAX);
        let (_, none) = cholesky_jittered(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(none, 0.0);
        let back = &l * l.transpose();
        assert!((back[(0, 1)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky_jittered(&a), Err(Error::Conditioning { .. })));
    }
}
