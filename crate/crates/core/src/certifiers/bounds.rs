//! Powers–Reznick exponent bounds for Polyá's theorem.
//!
//! For a form `f = Σ a_α x^α` of degree `2d` positive on the simplex with
//! minimum `λ`, `f·(Σx_i)^N` has positive coefficients once
//! `N > d(2d − 1)‖f‖/λ − 2d`, where `‖f‖ = max |a_α / c(α)|` and
//! `c(α) = (2d)!/(α_1!⋯α_n!)`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::{compose, halve_exponents, sum_of_squares, Monomial, Polynomial};
use crate::pop::{PopConstants, PopInstance};
use crate::rational::{as_string, ceil, int, next_integer_above, pow};
use crate::reduction::build_f_gamma;
use crate::Rational;

fn big_string<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn opt_big_string<S: Serializer>(v: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

fn opt_rational_string<S: Serializer>(
    v: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolyaBoundReport {
    /// Half the degree of the form the bound is applied to.
    pub d: u32,
    #[serde(serialize_with = "opt_rational_string")]
    pub lambda: Option<Rational>,
    /// `‖f‖`, or `‖f̄_γ‖` for the level bound.
    #[serde(with = "as_string")]
    pub norm: Rational,
    /// The right-hand side that `N̄` must exceed.
    #[serde(with = "as_string")]
    pub bound: Rational,
    #[serde(serialize_with = "big_string")]
    pub nbar: BigInt,
    #[serde(serialize_with = "opt_rational_string")]
    pub c_gamma: Option<Rational>,
    pub r0: Option<u32>,
    #[serde(serialize_with = "opt_big_string")]
    pub r_hat: Option<BigInt>,
}

fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn multinomial(m: &Monomial) -> BigInt {
    let den = m
        .exponents()
        .iter()
        .fold(BigInt::one(), |acc, &a| acc * factorial(u32::from(a)));
    factorial(m.degree()) / den
}

/// `max_α |a_α| / c(α)` with `c(α) = |α|!/Π α_i!`, for a form.
pub fn weighted_norm(f: &Polynomial) -> Result<Rational> {
    f.form_degree()?;
    Ok(f.terms()
        .map(|(m, c)| c.abs() / Rational::from_integer(multinomial(m)))
        .max()
        .unwrap_or_else(Rational::zero))
}

/// Smallest admissible `N̄` for a form `f` of degree `2d` whose minimum on
/// the simplex is `lambda`.
pub fn powers_reznick_nbar(f: &Polynomial, lambda: &Rational) -> Result<PolyaBoundReport> {
    if !lambda.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let deg = f.form_degree()?;
    if deg % 2 != 0 {
        return Err(Error::OddDegree(deg));
    }
    let d = deg / 2;
    let norm = weighted_norm(f)?;
    let bound = int(i64::from(d) * (2 * i64::from(d) - 1)) * &norm / lambda - int(2 * i64::from(d));
    Ok(PolyaBoundReport {
        d,
        lambda: Some(lambda.clone()),
        nbar: next_integer_above(&bound),
        norm,
        bound,
        c_gamma: None,
        r0: None,
        r_hat: None,
    })
}

/// `N̄` for an even form `p` through `q(x) = p(√x)`, with `beta` a lower
/// bound on `p` over the unit sphere. The bound uses `q`'s own degree.
pub fn even_form_nbar(p: &Polynomial, beta: &Rational) -> Result<PolyaBoundReport> {
    if !p.is_even_form()? {
        return Err(Error::NotEven);
    }
    powers_reznick_nbar(&halve_exponents(p)?, beta)
}

/// Level threshold `r̂ = max(r0, ⌈D(2D−1)2^{D+1}N^D c_γ⌉)` with
/// `c_γ = ‖f̄_γ‖ + ‖(Σ(v_i − w_i)²)^D‖ + ‖(Σ(v_i² + w_i²))^D‖` and
/// `f̄_γ(v, w) = f_γ(v − w)`.
pub fn r_hat_bound(
    pop: &PopInstance,
    consts: &PopConstants,
    gamma: &Rational,
    r0: u32,
) -> Result<PolyaBoundReport> {
    if r0 < 1 {
        return Err(Error::InvalidArgument("r0 must be at least 1".into()));
    }
    let f = build_f_gamma(pop, consts, gamma)?.form;
    let big_n = consts.big_n();
    let big_d = consts.big_d();
    let diffs: Vec<Polynomial> = (0..big_n)
        .map(|i| &Polynomial::var(2 * big_n, i) - &Polynomial::var(2 * big_n, big_n + i))
        .collect();
    let f_bar = compose(&f, &diffs)?;
    let diff_sq = diffs
        .iter()
        .fold(Polynomial::zero(2 * big_n), |acc, z| &acc + &z.pow(2));
    let norm = weighted_norm(&f_bar)?;
    let c_gamma = &norm
        + &weighted_norm(&diff_sq.pow(big_d))?
        + weighted_norm(&sum_of_squares(2 * big_n).pow(big_d))?;
    let dd = i64::from(big_d);
    let factor = int(dd * (2 * dd - 1)) * pow(&int(2), big_d + 1) * pow(&int(big_n as i64), big_d);
    let bound = factor * &c_gamma;
    let r_hat = ceil(&bound).max(BigInt::from(r0));
    Ok(PolyaBoundReport {
        d: big_d,
        lambda: None,
        norm,
        nbar: ceil(&bound),
        bound,
        c_gamma: Some(c_gamma),
        r0: Some(r0),
        r_hat: Some(r_hat),
    })
}
