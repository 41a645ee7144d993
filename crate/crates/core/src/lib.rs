pub mod certifiers;
pub mod conic;
pub mod driver;
pub mod error;
pub mod oracle;
pub mod poly;
pub mod pop;
pub mod rational;
pub mod reduction;

pub use error::{Error, Result};
pub use poly::{Monomial, Polynomial};

/// Exact arbitrary-precision rational.
pub type Rational = num_rational::BigRational;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/conic.md")]
    mod conic {}
    #[doc = include_str!("../../../book/src/hierarchy.md")]
    mod hierarchy {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
