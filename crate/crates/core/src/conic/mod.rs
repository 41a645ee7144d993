//! Conic feasibility over dd, sdd and psd matrix cones, and the Gram-matrix
//! formulations built on it.

pub mod classes;
mod dense;
pub mod gram;
pub mod ipm;
pub mod program;
pub mod simplex;
pub mod solve;
pub mod tolerance;

pub use classes::{check_dd, check_psd, check_sdd, min_eigenvalue};
pub use gram::{gram_setup, Blocking, GramBlock, GramData, GramLayout, SignSymmetry};
pub use program::{Assignment, BlockKind, ConeProgram, Row, ScalarKind, VarRef};
pub use solve::{solve, Backend, Budget, ConeStatus, Evidence};
pub use tolerance::Tolerances;
