//! Exact sparse polynomials over the rationals.

mod json;
mod monomial;
mod polynomial;
mod transform;

pub use json::{PolyJson, TermJson};
pub use monomial::{count_monomials, monomials_of_degree, Monomial};
pub use polynomial::Polynomial;
pub use transform::{
    compose, double_exponents, embed, even_lift, halve_exponents, homogenize, substitute,
    sum_of_even_powers, sum_of_squares,
};
