use std::cmp::Ordering;
use std::fmt;

/// Exponent vector `α` of a monomial `x^α`. The length is the ambient variable
/// count of the owning polynomial.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u16>);

impl Monomial {
    pub fn new(exponents: Vec<u16>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    /// `x_index^exponent` in `nvars` variables.
    pub fn var(nvars: usize, index: usize, exponent: u16) -> Self {
        let mut e = vec![0; nvars];
        e[index] = exponent;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.checked_add(*b).expect("exponent overflow"))
                .collect(),
        )
    }

    pub fn pow(&self, k: u16) -> Monomial {
        Monomial(
            self.0
                .iter()
                .map(|&a| a.checked_mul(k).expect("exponent overflow"))
                .collect(),
        )
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|e| e % 2 == 0)
    }

    /// `α/2` when every exponent is even.
    pub fn halved(&self) -> Option<Monomial> {
        self.is_even()
            .then(|| Monomial(self.0.iter().map(|e| e / 2).collect()))
    }

    pub fn doubled(&self) -> Monomial {
        self.pow(2)
    }

    /// Bit mask of the variables carrying an odd exponent (first 64 variables).
    pub fn parity_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, e)| *e % 2 == 1)
            .fold(0u64, |m, (i, _)| m | (1u64 << (i % 64)))
    }

    /// Renders with the given variable names, `1` for the constant monomial.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        MonomialDisplay { mono: self, names }
    }
}

/// Graded lexicographic order: total degree first, then exponent vectors
/// lexicographically (so `x1 > x2 > ...`).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct MonomialDisplay<'a> {
    mono: &'a Monomial,
    names: &'a [String],
}

impl fmt::Display for MonomialDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.mono.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            let name = self
                .names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("x{}", i + 1));
            if e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..=self.0.len()).map(|i| format!("x{i}")).collect();
        let shown = self.display_with(&names);
        write!(f, "{shown}")?;
        Ok(())
    }
}

/// All exponent vectors of total degree exactly `degree` in `nvars` variables,
/// in descending graded lexicographic order.
pub fn monomials_of_degree(nvars: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut current = vec![0u16; nvars];
    fn rec(i: usize, remaining: u32, current: &mut Vec<u16>, out: &mut Vec<Monomial>) {
        let n = current.len();
        if i + 1 == n {
            current[i] = remaining as u16;
            out.push(Monomial(current.clone()));
            current[i] = 0;
            return;
        }
        for e in (0..=remaining).rev() {
            current[i] = e as u16;
            rec(i + 1, remaining - e, current, out);
        }
        current[i] = 0;
    }
    if nvars == 0 {
        if degree == 0 {
            out.push(Monomial(Vec::new()));
        }
        return out;
    }
    rec(0, degree, &mut current, &mut out);
    out
}

/// Number of monomials of total degree `degree` in `nvars` variables, saturating.
pub fn count_monomials(nvars: usize, degree: u64) -> u64 {
    if nvars == 0 {
        return u64::from(degree == 0);
    }
    // C(degree + nvars - 1, nvars - 1)
    let k = (nvars - 1) as u64;
    let n = degree + k;
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grlex_orders_by_degree_then_lex() {
        let a = Monomial::new(vec![2, 0]);
        let b = Monomial::new(vec![1, 1]);
        let c = Monomial::new(vec![0, 3]);
        assert!(a > b);
        assert!(c > a);
    }

    #[test]
    fn enumerates_all_monomials_of_a_degree() {
        let ms = monomials_of_degree(3, 2);
        assert_eq!(ms.len(), 6);
        assert_eq!(ms[0].exponents(), &[2, 0, 0]);
        assert_eq!(ms[5].exponents(), &[0, 0, 2]);
        assert!(ms.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(count_monomials(3, 2), 6);
        assert_eq!(count_monomials(10, 5), 2002);
        assert_eq!(
            monomials_of_degree(5, 5).len() as u64,
            count_monomials(5, 5)
        );
    }

    #[test]
    fn halving_requires_even_exponents() {
        assert_eq!(
            Monomial::new(vec![4, 2]).halved(),
            Some(Monomial::new(vec![2, 1]))
        );
        assert_eq!(Monomial::new(vec![3, 1]).halved(), None);
    }

    #[test]
    fn display_uses_names() {
        let names = vec!["v1".to_string(), "w1".to_string()];
        let m = Monomial::new(vec![4, 2]);
        assert_eq!(m.display_with(&names).to_string(), "v1^4*w1^2");
        assert_eq!(Monomial::one(2).to_string(), "1");
    }
}
