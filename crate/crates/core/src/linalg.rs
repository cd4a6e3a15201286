//! Small dense helpers shared by the solvers.

use alloc::vec::Vec;
use core::ops::{Mul, Sub};

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, not on how the caller chunks them.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Forward-eliminated tridiagonal matrix with real coefficients.
///
/// Row `i` reads `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1]`;
/// `lower[0]` and `upper[n-1]` are ignored.
pub(crate) struct Tridiagonal {
    lower: Vec<f64>,
    pivots: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    /// Factorises without pivoting. Returns `None` when a pivot is not
    /// strictly positive, which for the symmetric systems used here means the
    /// matrix is not positive definite.
    pub(crate) fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut pivots = Vec::with_capacity(n);
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * upper[i - 1] / prev
            };
            if !(pivot > 0.0) {
                return None;
            }
            pivots.push(pivot);
            prev = pivot;
        }
        Some(Self {
            lower: lower.to_vec(),
            pivots,
            upper: upper.to_vec(),
        })
    }

    pub(crate) fn solve_in_place<T>(&self, rhs: &mut [T])
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = self.pivots.len();
        for i in 1..n {
            let factor = self.lower[i] / self.pivots[i - 1];
            rhs[i] = rhs[i] - rhs[i - 1] * factor;
        }
        rhs[n - 1] = rhs[n - 1] * (1.0 / self.pivots[n - 1]);
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - rhs[i + 1] * self.upper[i]) * (1.0 / self.pivots[i]);
        }
    }
}

/// General tridiagonal solve (Thomas algorithm) without a definiteness
/// requirement; returns `None` on a vanishing pivot.
pub(crate) fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
) -> Option<()> {
    let n = diag.len();
    let mut c = Vec::with_capacity(n);
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return None;
    }
    c.push(upper[0] / pivot);
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        c.push(if i + 1 < n { upper[i] / pivot } else { 0.0 });
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_sum_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn tridiagonal_solves_known_system() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] -> x = [1 1 1]
        let lower = [0.0, -1.0, -1.0];
        let diag = [2.0, 2.0, 2.0];
        let upper = [-1.0, -1.0, 0.0];
        let t = Tridiagonal::factor(&lower, &diag, &upper).unwrap();
        let mut rhs = [1.0, 0.0, 1.0];
        t.solve_in_place(&mut rhs);
        for x in rhs {
            assert!((x - 1.0).abs() < 1e-14);
        }
        let mut rhs = [1.0, 0.0, 1.0];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs).unwrap();
        assert!((rhs[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let lower = [0.0, 3.0];
        let diag = [1.0, 1.0];
        let upper = [3.0, 0.0];
        assert!(Tridiagonal::factor(&lower, &diag, &upper).is_none());
    }
}
