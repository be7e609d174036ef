//! Small dense linear-algebra helpers shared by the filter and the solver.

use nalgebra::DMatrix;

/// Largest singular value.
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Eigenvalues of a symmetric matrix, unordered.
pub(crate) fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

pub(crate) fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Inverse of a small dense block by Gauss-Jordan elimination with partial
/// pivoting. Returns the inverse together with the pivot ratio
/// `max |pivot| / min |pivot|`, a cheap conditioning estimate.
///
/// Returns `None` when a zero pivot is hit.
pub(crate) fn invert_block(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let m = a.nrows();
    debug_assert_eq!(m, a.ncols());
    if m == 0 {
        return Some((DMatrix::zeros(0, 0), 1.0));
    }
    let mut work = a.clone();
    let mut inv = DMatrix::<f64>::identity(m, m);
    let mut max_piv = 0.0f64;
    let mut min_piv = f64::INFINITY;

    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&r, &s| work[(r, col)].abs().total_cmp(&work[(s, col)].abs()))
            .unwrap();
        let pivot = work[(pivot_row, col)];
        if pivot == 0.0 {
            return None;
        }
        if pivot_row != col {
            work.swap_rows(pivot_row, col);
            inv.swap_rows(pivot_row, col);
        }
        max_piv = max_piv.max(pivot.abs());
        min_piv = min_piv.min(pivot.abs());

        let scale = 1.0 / pivot;
        for c in 0..m {
            work[(col, c)] *= scale;
            inv[(col, c)] *= scale;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let factor = work[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for c in 0..m {
                work[(r, c)] -= factor * work[(col, c)];
                inv[(r, c)] -= factor * inv[(col, c)];
            }
        }
    }
    Some((inv, max_piv / min_piv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_identity() {
        let eye = DMatrix::<f64>::identity(4, 4);
        let (inv, cond) = invert_block(&eye).unwrap();
        assert_eq!(inv, eye);
        assert!((cond - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invert_matches_nalgebra() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let (inv, _) = invert_block(&a).unwrap();
        let expect = a.clone().try_inverse().unwrap();
        assert!((inv - expect).abs().max() < 1e-12);
    }

    #[test]
    fn singular_block_is_detected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(invert_block(&a).is_none());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -5.0]);
        assert!((spectral_norm(&d) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_extremes() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((min_symmetric_eigenvalue(&a) - 1.0).abs() < 1e-10);
        assert!((max_symmetric_eigenvalue(&a) - 3.0).abs() < 1e-10);
    }
}
