//! Blocked Cholesky factorization for the Schur systems of the interior-point
//! method. Diagonal blocks use nalgebra's factorization and the trailing
//! update goes through its matrix-multiply kernel, which is several times
//! faster than the unblocked loop on matrices in the low thousands.

use nalgebra::{Cholesky, DMatrix, DVector};

const BLOCK: usize = 96;

/// Lower-triangular `L` with `LLᵀ = A`.
#[derive(Clone, Debug)]
pub struct Factor {
    l: DMatrix<f64>,
}

impl Factor {
    /// Factors a symmetric positive definite matrix; `None` when a pivot is
    /// not positive.
    pub fn new(mut a: DMatrix<f64>) -> Option<Self> {
        let n = a.nrows();
        let mut k = 0;
        while k < n {
            let b = BLOCK.min(n - k);
            let diag = a.view((k, k), (b, b)).clone_owned();
            let l11 = Cholesky::new(diag)?.unpack();
            a.view_mut((k, k), (b, b)).copy_from(&l11);
            let rest = n - k - b;
            if rest > 0 {
                // L21ᵀ = L11⁻¹ A21ᵀ
                let a21t = a.view((k + b, k), (rest, b)).transpose();
                let l21t = l11.solve_lower_triangular(&a21t)?;
                let l21 = l21t.transpose();
                a.view_mut((k + b, k), (rest, b)).copy_from(&l21);
                a.view_mut((k + b, k + b), (rest, rest))
                    .gemm(-1.0, &l21, &l21t, 1.0);
            }
            k += b;
        }
        a.fill_upper_triangle(0.0, 1);
        if a.diagonal().iter().all(|v| v.is_finite() && *v > 0.0) {
            Some(Factor { l: a })
        } else {
            None
        }
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let y = self.l.solve_lower_triangular(rhs)?;
        let x = self.l.tr_solve_lower_triangular(&y)?;
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}
