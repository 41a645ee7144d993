//! Membership tests for the matrix cones dd ⊆ sdd ⊆ psd.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::Signed;

use super::simplex::{maximize, LpOutcome};
use crate::error::{Error, Result};
use crate::rational::from_f64;
use crate::Rational;

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSymmetric);
    }
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if m[(i, j)] != m[(j, i)] {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// `M_ii ≥ Σ_{j≠i} |M_ij|` for every row, decided exactly on the rational
/// values of the float entries.
pub fn check_dd(m: &DMatrix<f64>) -> Result<bool> {
    check_symmetric(m)?;
    let n = m.nrows();
    for i in 0..n {
        let off: Rational = (0..n)
            .filter(|&j| j != i)
            .map(|j| from_f64(m[(i, j)]).abs())
            .sum();
        if from_f64(m[(i, i)]) < off {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Raises each diagonal entry, if needed, to the smallest float that is at
/// least the exact off-diagonal row sum. Used after solves whose dd
/// structure holds mathematically but may be off by rounding.
pub fn repair_dd_diagonal(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        let off: Rational = (0..n)
            .filter(|&j| j != i)
            .map(|j| from_f64(m[(i, j)]).abs())
            .sum();
        let mut d = m[(i, i)];
        while from_f64(d) < off {
            let approx = crate::rational::to_f64(&off);
            d = if approx > d { approx } else { next_up(d) };
        }
        m[(i, i)] = d;
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// Largest ratio allowed between entries of the sdd scaling witness.
pub const SDD_SCALING_RANGE: f64 = 1e6;

/// Decides whether some positive diagonal `D` makes `DMD` diagonally
/// dominant and returns the diagonal of `D`.
///
/// Row `i` of `DMD` is dominant iff `M_ii d_i ≥ Σ_{j≠i} |M_ij| d_j`, so the
/// test is the LP `max t` subject to `B d ≥ t·1`, `1 ≤ d ≤ K` with the
/// comparison matrix `B` (`B_ii = M_ii`, `B_ij = −|M_ij|`); `M` is sdd when
/// the optimum is nonnegative up to `tol` times the largest entry. Matrices
/// that are already dd return `D = I` without solving.
pub fn check_sdd(m: &DMatrix<f64>, tol: f64) -> Result<Option<DVector<f64>>> {
    check_symmetric(m)?;
    let n = m.nrows();
    if check_dd(m)? {
        return Ok(Some(DVector::from_element(n, 1.0)));
    }
    if (0..n).any(|i| m[(i, i)] < 0.0) {
        return Ok(None);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = if i == j { m[(i, i)] } else { -m[(i, j)].abs() } / scale;
        }
    }
    // d = 1 + e with 0 ≤ e ≤ K − 1, t = t' − t0 with t' ≥ 0, so that the
    // origin (e, t') = 0 is feasible:  −B e + t' ≤ B·1 + t0
    let b1 = &b * DVector::from_element(n, 1.0);
    let t0 = (-b1.min()).max(0.0);
    let vars = n + 1;
    let mut a = DMatrix::<f64>::zeros(2 * n, vars);
    let mut rhs = DVector::<f64>::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = -b[(i, j)];
        }
        a[(i, n)] = 1.0;
        rhs[i] = b1[i] + t0;
        a[(n + i, i)] = 1.0;
        rhs[n + i] = SDD_SCALING_RANGE - 1.0;
    }
    let mut c = DVector::<f64>::zeros(vars);
    c[n] = 1.0;
    let LpOutcome::Optimal { x, value } = maximize(&c, &a, &rhs) else {
        return Ok(None);
    };
    if value - t0 < -tol {
        return Ok(None);
    }
    let d = DVector::from_iterator(n, (0..n).map(|i| 1.0 + x[i]));
    let mut scaled = m.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] *= d[i] * d[j];
        }
    }
    let norm = scaled.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        let off: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| scaled[(i, j)].abs())
            .sum();
        if scaled[(i, i)] - off < -tol * norm {
            return Ok(None);
        }
    }
    Ok(Some(d))
}

/// Smallest eigenvalue of a symmetric matrix (`+∞` for the empty matrix).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// `λ_min(M) ≥ threshold` (the threshold is typically `−1e−9`).
pub fn check_psd(m: &DMatrix<f64>, threshold: f64) -> Result<bool> {
    check_symmetric(m)?;
    Ok(min_eigenvalue(m) >= threshold)
}
