use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::Monomial;
use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::Rational;

/// Exact sparse multivariate polynomial with rational coefficients.
///
/// Terms are kept in canonical form: no stored coefficient is zero, so two
/// polynomials are equal exactly when their term maps are equal. Iteration
/// through [`Polynomial::terms`] is in descending graded lexicographic order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::term(Monomial::one(nvars), c)
    }

    /// The variable `x_index`.
    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable index {index} out of range");
        Self::term(Monomial::var(nvars, index, 1), Rational::one())
    }

    pub fn term(mono: Monomial, c: Rational) -> Self {
        let nvars = mono.nvars();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(mono, c);
        }
        Polynomial { nvars, terms }
    }

    /// Builds a polynomial from possibly repeated or zero terms, summing
    /// duplicates and dropping zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (m, c) in terms {
            if m.nvars() != nvars {
                return Err(Error::VarCountMismatch {
                    left: nvars,
                    right: m.nvars(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub(crate) fn from_hash_map(nvars: usize, acc: HashMap<Monomial, Rational>) -> Self {
        Polynomial {
            nvars,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical (descending graded lexicographic) order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> + '_ {
        self.terms.iter().rev()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    /// True when every term has the same total degree (the zero polynomial
    /// counts as homogeneous).
    pub fn is_homogeneous(&self) -> bool {
        match (self.min_degree(), self.degree()) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
    }

    /// Degree of a homogeneous polynomial; errors on mixed degrees.
    pub fn form_degree(&self) -> Result<u32> {
        if !self.is_homogeneous() {
            return Err(Error::NotHomogeneous);
        }
        Ok(self.degree().unwrap_or(0))
    }

    fn check_same(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::VarCountMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    /// Exact product by sparse convolution.
    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Polynomial::zero(self.nvars));
        }
        let mut acc: HashMap<Monomial, Rational> =
            HashMap::with_capacity(self.len().saturating_mul(other.len()).min(1 << 20));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let prod = ca * cb;
                match acc.entry(ma.mul(mb)) {
                    std::collections::hash_map::Entry::Occupied(mut o) => *o.get_mut() += prod,
                    std::collections::hash_map::Entry::Vacant(v) => {
                        v.insert(prod);
                    }
                }
            }
        }
        Ok(Polynomial::from_hash_map(self.nvars, acc))
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    /// `self^k` by repeated squaring; `self^0 = 1`.
    pub fn pow(&self, k: u32) -> Polynomial {
        let mut result = Polynomial::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Exact value at a rational point.
    pub fn evaluate(&self, point: &[Rational]) -> Result<Rational> {
        if point.len() != self.nvars {
            return Err(Error::PointLength {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut powers: Vec<Vec<Rational>> = vec![vec![Rational::one()]; self.nvars];
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (i, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[i];
                while cache.len() <= e as usize {
                    let next = cache.last().unwrap() * &point[i];
                    cache.push(next);
                }
                v *= &cache[e as usize];
            }
            total += v;
        }
        Ok(total)
    }

    /// Floating-point value, for oracles and witness checks.
    pub fn evaluate_f64(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.nvars {
            return Err(Error::PointLength {
                expected: self.nvars,
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                m.exponents()
                    .iter()
                    .zip(point)
                    .fold(to_f64(c), |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum())
    }

    /// Most negative coefficient with a witnessing monomial. Ties go to the
    /// first monomial in canonical order. The zero polynomial yields
    /// `(0, None)`.
    pub fn min_coefficient(&self) -> (Rational, Option<Monomial>) {
        let mut best: Option<(&Monomial, &Rational)> = None;
        for (m, c) in self.terms() {
            match best {
                Some((_, b)) if c >= b => {}
                _ => best = Some((m, c)),
            }
        }
        match best {
            Some((m, c)) => (c.clone(), Some(m.clone())),
            None => (Rational::zero(), None),
        }
    }

    pub fn has_nonnegative_coefficients(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }

    /// True iff every exponent of every monomial is even. Errors on
    /// non-homogeneous input.
    pub fn is_even_form(&self) -> Result<bool> {
        if !self.is_homogeneous() {
            return Err(Error::NotHomogeneous);
        }
        Ok(self.is_even())
    }

    /// Every exponent even (no homogeneity requirement).
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(Monomial::is_even)
    }

    pub fn max_abs_coefficient(&self) -> Rational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Renders with custom variable names.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        PolyDisplay { poly: self, names }
    }

    pub fn default_names(nvars: usize) -> Vec<String> {
        (1..=nvars).map(|i| format!("x{i}")).collect()
    }
}

struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.poly.terms().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if m.is_constant() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", m.display_with(self.names))?;
            } else {
                write!(f, "{a}*{}", m.display_with(self.names))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = Polynomial::default_names(self.nvars);
        let shown = self.display_with(&names);
        write!(f, "{shown}")?;
        Ok(())
    }
}

// Operator forms panic on a variable-count mismatch; use the `checked_*`
// methods when the operands come from user input.

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial add")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial sub")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial mul")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}
