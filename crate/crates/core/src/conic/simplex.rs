//! Dense tableau simplex for `max cᵀx` subject to `Ax ≤ b`, `x ≥ 0`, `b ≥ 0`.
//!
//! Only used on tiny scaling problems, so Bland's rule and a dense tableau
//! are plenty.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: DVector<f64>, value: f64 },
    Unbounded,
    IterationLimit,
}

const EPS: f64 = 1e-12;

/// Requires `b ≥ 0` so that the slack basis is feasible.
pub fn maximize(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpOutcome {
    let (m, n) = a.shape();
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);
    assert!(b.iter().all(|&v| v >= 0.0), "origin must be feasible");

    // tableau columns: x (n), slacks (m), rhs
    let width = n + m + 1;
    let mut t = DMatrix::<f64>::zeros(m + 1, width);
    for i in 0..m {
        for j in 0..n {
            t[(i, j)] = a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, width - 1)] = b[i];
    }
    for j in 0..n {
        t[(m, j)] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_iter = 50 * (m + n + 1);
    for _ in 0..max_iter {
        let Some(enter) = (0..n + m).find(|&j| t[(m, j)] < -EPS) else {
            let mut x = DVector::zeros(n);
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[(i, width - 1)];
                }
            }
            let value = c.dot(&x);
            return LpOutcome::Optimal { x, value };
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = t[(i, enter)];
            if aij > EPS {
                let ratio = t[(i, width - 1)] / aij;
                match leave {
                    Some((li, lr))
                        if ratio > lr + EPS
                            || ((ratio - lr).abs() <= EPS && basis[i] > basis[li]) => {}
                    _ => leave = Some((i, ratio)),
                }
            }
        }
        let Some((row, _)) = leave else {
            return LpOutcome::Unbounded;
        };
        let pivot = t[(row, enter)];
        for j in 0..width {
            t[(row, j)] /= pivot;
        }
        for i in 0..=m {
            if i != row {
                let f = t[(i, enter)];
                if f != 0.0 {
                    for j in 0..width {
                        t[(i, j)] -= f * t[(row, j)];
                    }
                }
            }
        }
        basis[row] = enter;
    }
    LpOutcome::IterationLimit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let c = DVector::from_vec(vec![3.0, 5.0]);
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0]);
        let b = DVector::from_vec(vec![4.0, 12.0, 18.0]);
        match maximize(&c, &a, &b) {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_unbounded() {
        let c = DVector::from_vec(vec![1.0, 0.0]);
        let a = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0]);
        assert_eq!(maximize(&c, &a, &b), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // degenerate vertex at the origin
        let c = DVector::from_vec(vec![10.0, -57.0, -9.0, -24.0]);
        let a = DMatrix::from_row_slice(
            3,
            4,
            &[
                0.5, -5.5, -2.5, 9.0, 0.5, -1.5, -0.5, 1.0, 1.0, 0.0, 0.0, 0.0,
            ],
        );
        let b = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        match maximize(&c, &a, &b) {
            LpOutcome::Optimal { value, .. } => assert!((value - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
