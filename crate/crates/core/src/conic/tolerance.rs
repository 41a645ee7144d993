use serde::Serialize;

/// Numeric tolerances at the floating-point boundary. Every result that
/// depends on them echoes this record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Max absolute violation of an equality row by a feasible assignment.
    pub equality_residual: f64,
    /// Smallest eigenvalue accepted as positive semidefinite.
    pub psd_eigenvalue: f64,
    /// Max coefficient error when re-expanding a Gram certificate.
    pub reconstruction: f64,
    /// Phase-one optimum above which a program is declared infeasible.
    pub infeasibility_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equality_residual: 1e-8,
            psd_eigenvalue: -1e-9,
            reconstruction: 1e-7,
            infeasibility_margin: 1e-7,
        }
    }
}
