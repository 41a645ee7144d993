use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{Monomial, Polynomial};
use crate::error::{Error, Result};
use crate::Rational;

/// `y^{target} p(x/y)`: each term of degree `k` is multiplied by
/// `y^{target-k}`. The variable `y` lives at index `y` of `p`'s ambient space
/// and must not occur in `p`.
pub fn homogenize(p: &Polynomial, target: u32, y: usize) -> Result<Polynomial> {
    if y >= p.nvars() {
        return Err(Error::InvalidArgument(format!(
            "homogenizing variable {y} outside {} variables",
            p.nvars()
        )));
    }
    if let Some(deg) = p.degree() {
        if deg > target {
            return Err(Error::DegreeTooHigh {
                degree: deg,
                target,
            });
        }
    }
    let mut out = Polynomial::zero(p.nvars());
    for (m, c) in p.terms() {
        if m.exponents()[y] != 0 {
            return Err(Error::InvalidArgument(format!(
                "variable {y} already occurs in the polynomial"
            )));
        }
        let mut e = m.exponents().to_vec();
        e[y] = (target - m.degree()) as u16;
        out.add_term(Monomial::new(e), c.clone());
    }
    Ok(out)
}

/// Replaces variable `index` by a rational constant; the ambient variable
/// count is unchanged and the variable no longer occurs.
pub fn substitute(p: &Polynomial, index: usize, value: &Rational) -> Result<Polynomial> {
    if index >= p.nvars() {
        return Err(Error::InvalidArgument(format!(
            "variable {index} outside {} variables",
            p.nvars()
        )));
    }
    let mut out = Polynomial::zero(p.nvars());
    for (m, c) in p.terms() {
        let mut e = m.exponents().to_vec();
        let k = std::mem::take(&mut e[index]);
        out.add_term(Monomial::new(e), c * crate::rational::pow(value, k as u32));
    }
    Ok(out)
}

/// Re-expresses `p` in `nvars` variables, sending old variable `i` to
/// `mapping[i]`.
pub fn embed(p: &Polynomial, nvars: usize, mapping: &[usize]) -> Result<Polynomial> {
    if mapping.len() != p.nvars() {
        return Err(Error::VarCountMismatch {
            left: p.nvars(),
            right: mapping.len(),
        });
    }
    if let Some(&bad) = mapping.iter().find(|&&j| j >= nvars) {
        return Err(Error::InvalidArgument(format!(
            "target index {bad} outside {nvars} variables"
        )));
    }
    let mut out = Polynomial::zero(nvars);
    for (m, c) in p.terms() {
        let mut e = vec![0u16; nvars];
        for (i, &k) in m.exponents().iter().enumerate() {
            e[mapping[i]] += k;
        }
        out.add_term(Monomial::new(e), c.clone());
    }
    Ok(out)
}

/// `p(s_1, …, s_n)`: variable `i` replaced by the polynomial `subs[i]`.
/// All substitutes share one variable count, which the result inherits.
pub fn compose(p: &Polynomial, subs: &[Polynomial]) -> Result<Polynomial> {
    if subs.len() != p.nvars() {
        return Err(Error::VarCountMismatch {
            left: p.nvars(),
            right: subs.len(),
        });
    }
    let nvars = subs.first().map_or(0, Polynomial::nvars);
    if let Some(s) = subs.iter().find(|s| s.nvars() != nvars) {
        return Err(Error::VarCountMismatch {
            left: nvars,
            right: s.nvars(),
        });
    }
    let mut powers: HashMap<(usize, u16), Polynomial> = HashMap::new();
    let mut out = Polynomial::zero(nvars);
    for (m, c) in p.terms() {
        let mut term = Polynomial::constant(nvars, c.clone());
        for (i, &a) in m.exponents().iter().enumerate() {
            if a == 0 {
                continue;
            }
            let pw = powers
                .entry((i, a))
                .or_insert_with(|| subs[i].pow(u32::from(a)));
            term = &term * pw;
        }
        out = &out + &term;
    }
    Ok(out)
}

fn binomial_row(a: u16) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..a as u64 {
        let next = row[k as usize].clone() * BigInt::from(a as u64 - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

/// Substitutes `z_i := v_i² − w_i²`. The result has `2n` variables ordered
/// `(v_1..v_n, w_1..w_n)`.
pub fn even_lift(p: &Polynomial) -> Polynomial {
    let n = p.nvars();
    let mut acc: HashMap<Monomial, Rational> = HashMap::new();
    for (m, c) in p.terms() {
        // expand Π_i (v_i² − w_i²)^{α_i} as a product of binomial rows
        let mut partial: Vec<(Vec<u16>, Rational)> = vec![(vec![0; 2 * n], c.clone())];
        for (i, &a) in m.exponents().iter().enumerate() {
            if a == 0 {
                continue;
            }
            let row = binomial_row(a);
            let mut next = Vec::with_capacity(partial.len() * row.len());
            for (e, coef) in &partial {
                for (k, b) in row.iter().enumerate() {
                    let mut e2 = e.clone();
                    e2[i] = 2 * (a - k as u16);
                    e2[n + i] = 2 * k as u16;
                    let signed = if k % 2 == 1 { -b.clone() } else { b.clone() };
                    next.push((e2, coef * Rational::from_integer(signed)));
                }
            }
            partial = next;
        }
        for (e, coef) in partial {
            *acc.entry(Monomial::new(e)).or_insert_with(Rational::zero) += coef;
        }
    }
    Polynomial::from_hash_map(2 * n, acc)
}

/// `(Σ_i x_i^exponent)^power` in `nvars` variables.
pub fn sum_of_even_powers(nvars: usize, exponent: u16, power: u32) -> Result<Polynomial> {
    if exponent % 2 != 0 {
        return Err(Error::OddDegree(exponent as u32));
    }
    let base = Polynomial::from_terms(
        nvars,
        (0..nvars).map(|i| (Monomial::var(nvars, i, exponent), Rational::one())),
    )?;
    Ok(base.pow(power))
}

/// `Σ_i x_i²`.
pub fn sum_of_squares(nvars: usize) -> Polynomial {
    sum_of_even_powers(nvars, 2, 1).expect("exponent 2 is even")
}

/// `q(x) = p(√x)`: every exponent halved. Errors unless all exponents are even.
pub fn halve_exponents(p: &Polynomial) -> Result<Polynomial> {
    let mut out = Polynomial::zero(p.nvars());
    for (m, c) in p.terms() {
        out.add_term(m.halved().ok_or(Error::NotEven)?, c.clone());
    }
    Ok(out)
}

/// `p(x²)`: every exponent doubled.
pub fn double_exponents(p: &Polynomial) -> Polynomial {
    let mut out = Polynomial::zero(p.nvars());
    for (m, c) in p.terms() {
        out.add_term(m.doubled(), c.clone());
    }
    out
}
