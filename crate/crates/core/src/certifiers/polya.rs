//! Polyá-type test: `(p(v² − w²) + (1/2r)(Σ(v_i⁴ + w_i⁴))^d)·(Σv_i² + Σw_i²)^{r²}`
//! must have nonnegative coefficients.
//!
//! Every monomial of the lifted form is even, so the product is computed on
//! halved exponents, `Q(u)·(Σu_i)^{r²}` with `u = (v², w²)`, which has the same
//! coefficients. Coefficients are carried as integers over a common
//! denominator, and exponents are packed eight bits per variable into a
//! `u128` with the first variable in the top byte; among keys of one degree,
//! descending integer order is descending grlex order.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use super::{CertKind, Certificate, Outcome, Payload, PolyaWitness, Verdict};
use crate::error::{Error, Result};
use crate::poly::{count_monomials, halve_exponents, Polynomial};
use crate::reduction::lift_with_margin;
use crate::Rational;

/// Expansion size above which `polya_certify` reports a budget overrun.
pub const DEFAULT_TERM_BUDGET: u64 = 5_000_000;

const MAX_PACKED_VARS: usize = 16;
const MAX_PACKED_DEGREE: u32 = 255;

/// The term budget, overridable through `PSATZ_BUDGET_TERMS`.
pub fn term_budget() -> u64 {
    std::env::var("PSATZ_BUDGET_TERMS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_TERM_BUDGET)
}

/// Summary of the expanded product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyaExpansion {
    pub terms: u64,
    pub min_coefficient: Rational,
    /// Exponents over `(v, w)` of the most negative coefficient; ties go to
    /// the first monomial in descending grlex order.
    pub min_monomial: Option<Vec<u16>>,
    pub sha256: String,
    pub nvars: usize,
}

trait Coef: Clone {
    fn zero() -> Self;
    fn add_checked(&mut self, other: &Self) -> bool;
    fn is_zero(&self) -> bool;
    fn to_big(&self) -> BigInt;
}

impl Coef for i128 {
    fn zero() -> Self {
        0
    }
    fn add_checked(&mut self, other: &Self) -> bool {
        match self.checked_add(*other) {
            Some(v) => {
                *self = v;
                true
            }
            None => false,
        }
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Coef for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn add_checked(&mut self, other: &Self) -> bool {
        *self += other;
        true
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

fn pack(exps: &[u16]) -> u128 {
    exps.iter().enumerate().fold(0u128, |acc, (i, &e)| {
        acc | (u128::from(e) << (8 * (MAX_PACKED_VARS - 1 - i)))
    })
}

fn unpack(key: u128, nvars: usize) -> Vec<u16> {
    (0..nvars)
        .map(|i| ((key >> (8 * (MAX_PACKED_VARS - 1 - i))) & 0xff) as u16)
        .collect()
}

/// `Σ_t c_t u^t · (Σu_i)^passes`, or `None` on overflow.
fn multiply_out<C: Coef>(start: &[(u128, C)], nvars: usize, passes: u32) -> Option<Vec<(u128, C)>> {
    let units: Vec<u128> = (0..nvars)
        .map(|i| 1u128 << (8 * (MAX_PACKED_VARS - 1 - i)))
        .collect();
    let mut cur: Vec<(u128, C)> = start.to_vec();
    for _ in 0..passes {
        let mut next: HashMap<u128, C> = HashMap::with_capacity(cur.len() * 2);
        for (key, c) in &cur {
            for u in &units {
                if !next.entry(key + u).or_insert_with(C::zero).add_checked(c) {
                    return None;
                }
            }
        }
        cur = next.into_iter().collect();
    }
    Some(cur)
}

fn finish<C: Coef>(mut terms: Vec<(u128, C)>, nvars: usize, denom: &BigInt) -> PolyaExpansion {
    terms.retain(|(_, c)| !c.is_zero());
    terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
    let mut hasher = Sha256::new();
    let mut best: Option<(BigInt, u128)> = None;
    for (key, c) in &terms {
        let big = c.to_big();
        let coef = Rational::new(big.clone(), denom.clone());
        let exps: Vec<String> = unpack(*key, nvars)
            .iter()
            .map(|e| (2 * e).to_string())
            .collect();
        hasher.update(format!("{}:{}\n", exps.join(","), coef).as_bytes());
        if best.as_ref().map_or(true, |(b, _)| &big < b) {
            best = Some((big, *key));
        }
    }
    let (min_coefficient, min_monomial) = match best {
        Some((c, key)) => (
            Rational::new(c, denom.clone()),
            Some(unpack(key, nvars).iter().map(|e| 2 * e).collect()),
        ),
        None => (Rational::zero(), None),
    };
    PolyaExpansion {
        terms: terms.len() as u64,
        min_coefficient,
        min_monomial,
        sha256: hex::encode(hasher.finalize()),
        nvars,
    }
}

fn lifted_halves(p: &Polynomial, r: u32) -> Result<(Polynomial, u64)> {
    if r == 0 {
        return Err(Error::InvalidArgument("level r must be positive".into()));
    }
    let deg = p.form_degree()?;
    if deg % 2 != 0 {
        return Err(Error::OddDegree(deg));
    }
    let half = halve_exponents(&lift_with_margin(p, r)?)?;
    let size = count_monomials(half.nvars(), u64::from(deg) + u64::from(r) * u64::from(r));
    Ok((half, size))
}

/// Expands the product exactly, without a size check.
pub fn polya_expand(p: &Polynomial, r: u32) -> Result<PolyaExpansion> {
    let (half, _) = lifted_halves(p, r)?;
    let nvars = half.nvars();
    let top = half.degree().unwrap_or(0) + r * r;
    if nvars > MAX_PACKED_VARS || top > MAX_PACKED_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "expansion needs at most {MAX_PACKED_VARS} lifted variables and degree {MAX_PACKED_DEGREE}"
        )));
    }
    let denom = half
        .terms()
        .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
    let scaled: Vec<(u128, BigInt)> = half
        .terms()
        .map(|(m, c)| (pack(m.exponents()), c.numer() * (&denom / c.denom())))
        .collect();
    let passes = r * r;
    let small: Option<Vec<(u128, i128)>> = scaled
        .iter()
        .map(|(k, c)| {
            c.to_i128()
                .filter(|v| v.abs() < (1 << 100))
                .map(|v| (*k, v))
        })
        .collect();
    if let Some(start) = small {
        if let Some(out) = multiply_out(&start, nvars, passes) {
            return Ok(finish(out, nvars, &denom));
        }
    }
    let out = multiply_out(&scaled, nvars, passes).expect("big integers do not overflow");
    Ok(finish(out, nvars, &denom))
}

/// Tests membership of the form `p` (even degree) at level `r ≥ 1`.
/// Expansions whose estimated size exceeds `budget` terms are not attempted.
pub fn polya_certify(p: &Polynomial, r: u32, budget: u64) -> Result<Outcome> {
    let (_, size) = lifted_halves(p, r)?;
    if size > budget {
        return Ok(Outcome::without_certificate(
            Verdict::BudgetExceeded,
            format!("expansion has up to {size} terms, budget is {budget}"),
        ));
    }
    let exp = polya_expand(p, r)?;
    if exp.min_coefficient.is_negative() {
        return Ok(Outcome {
            verdict: Verdict::Reject,
            certificate: None,
            witness: exp.min_monomial.map(|monomial| PolyaWitness {
                coefficient: exp.min_coefficient.clone(),
                monomial,
            }),
            reason: None,
        });
    }
    Ok(Outcome::accept(Certificate {
        kind: CertKind::Polya,
        level: r,
        subject: p.clone(),
        payload: Payload::Polya {
            terms: exp.terms,
            min_coefficient: exp.min_coefficient,
            sha256: exp.sha256,
        },
    }))
}
