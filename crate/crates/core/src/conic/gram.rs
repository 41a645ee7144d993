//! Gram-matrix formulations `p(x) = z(x)ᵀ Q z(x)`.
//!
//! The basis `z` is every monomial of half the target degree. Optionally the
//! basis is split by sign symmetry: if flipping the signs of some variables
//! leaves the target unchanged, averaging any Gram matrix over those flips
//! keeps it feasible and in its cone (dd, sdd and psd are all preserved) while
//! zeroing every entry that pairs monomials of different character. So `Q`
//! may be taken block diagonal with one block per character class, which is
//! a reduction of the program, not a restriction.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::program::{Assignment, BlockKind, ConeProgram, VarRef};
use crate::error::{Error, Result};
use crate::poly::{monomials_of_degree, Monomial, Polynomial};
use crate::rational::{from_f64, int, to_f64};
use crate::Rational;

/// Sign flips preserving a set of polynomials, stored as the GF(2) row space
/// spanned by the exponent parities of their supports. Two monomials have the
/// same character under the group iff their parities differ by an element of
/// that space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignSymmetry {
    /// Echelon basis, each vector with a distinct leading bit, sorted by
    /// leading bit in descending order.
    basis: Vec<u64>,
    nvars: usize,
}

impl SignSymmetry {
    /// The symmetry group of the given polynomials (which must share `nvars`,
    /// at most 64).
    pub fn of(polys: &[&Polynomial]) -> Result<Self> {
        let nvars = polys.first().map_or(0, |p| p.nvars());
        if nvars > 64 {
            return Err(Error::InvalidArgument(
                "sign symmetry supports at most 64 variables".into(),
            ));
        }
        let mut sym = SignSymmetry {
            basis: Vec::new(),
            nvars,
        };
        for p in polys {
            for (m, _) in p.terms() {
                sym.insert(m.parity_mask());
            }
        }
        Ok(sym)
    }

    /// No symmetry at all: every monomial is its own class representative.
    pub fn trivial(nvars: usize) -> Self {
        let mut sym = SignSymmetry {
            basis: Vec::new(),
            nvars,
        };
        for i in 0..nvars.min(64) {
            sym.insert(1u64 << i);
        }
        sym
    }

    fn insert(&mut self, v: u64) {
        let r = self.reduce(v);
        if r != 0 {
            self.basis.push(r);
            self.basis
                .sort_by_key(|b| std::cmp::Reverse(63 - b.leading_zeros()));
        }
    }

    fn reduce(&self, mut v: u64) -> u64 {
        for &b in &self.basis {
            let lead = 1u64 << (63 - b.leading_zeros());
            if v & lead != 0 {
                v ^= b;
            }
        }
        v
    }

    /// Canonical representative of the monomial's character class.
    pub fn class_key(&self, m: &Monomial) -> u64 {
        self.reduce(m.parity_mask())
    }

    /// True when every flip in the group fixes the monomial.
    pub fn is_invariant(&self, m: &Monomial) -> bool {
        self.class_key(m) == 0
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blocking {
    /// One block holding the whole basis.
    Single,
    /// One block per sign-symmetry class.
    SignSymmetry,
}

/// Where each Gram block lives in a program and which monomials index it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramLayout {
    pub nvars: usize,
    pub kind: BlockKind,
    pub blocks: Vec<(usize, Vec<Monomial>)>,
}

impl GramLayout {
    /// Entries of the Gram blocks that produce each monomial, with
    /// coefficient 1 on the diagonal and 2 off it.
    pub fn contributions(&self) -> BTreeMap<Monomial, Vec<(VarRef, Rational)>> {
        let mut out: BTreeMap<Monomial, Vec<(VarRef, Rational)>> = BTreeMap::new();
        for (block, basis) in &self.blocks {
            for i in 0..basis.len() {
                for j in i..basis.len() {
                    let coef = if i == j { int(1) } else { int(2) };
                    out.entry(basis[i].mul(&basis[j]))
                        .or_default()
                        .push((VarRef::entry(*block, i, j), coef));
                }
            }
        }
        out
    }

    /// `Σ_i Q_ii` over all blocks.
    pub fn trace_terms(&self) -> Vec<(VarRef, Rational)> {
        self.blocks
            .iter()
            .flat_map(|(block, basis)| {
                (0..basis.len()).map(move |i| (VarRef::entry(*block, i, i), int(1)))
            })
            .collect()
    }

    /// Extracts the blocks of an assignment as certificate data.
    pub fn extract(&self, asg: &Assignment) -> GramData {
        GramData {
            numeric: true,
            class: self.kind,
            nvars: self.nvars,
            blocks: self
                .blocks
                .iter()
                .map(|(b, basis)| GramBlock {
                    basis: basis.iter().map(|m| m.exponents().to_vec()).collect(),
                    matrix: matrix_rows(&asg.blocks[*b]),
                })
                .collect(),
        }
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Adds Gram blocks for forms of degree `2·half_degree` to `prog`.
pub fn add_gram_blocks(
    prog: &mut ConeProgram,
    nvars: usize,
    half_degree: u32,
    kind: BlockKind,
    symmetry: Option<&SignSymmetry>,
) -> GramLayout {
    let basis = monomials_of_degree(nvars, half_degree);
    let groups: Vec<Vec<Monomial>> = match symmetry {
        None => vec![basis],
        Some(sym) => {
            let mut by_key: BTreeMap<u64, Vec<Monomial>> = BTreeMap::new();
            for m in basis {
                by_key.entry(sym.class_key(&m)).or_default().push(m);
            }
            by_key.into_values().collect()
        }
    };
    let blocks = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| (prog.add_block(kind, g.len()), g))
        .collect();
    GramLayout {
        nvars,
        kind,
        blocks,
    }
}

fn half_degree_of(target: &Polynomial) -> Result<u32> {
    let deg = target.form_degree()?;
    if deg % 2 != 0 {
        return Err(Error::OddDegree(deg));
    }
    Ok(deg / 2)
}

/// One equality per monomial of the target degree: the Gram entries mapping
/// to it sum to the target coefficient. Monomials that no entry can produce
/// and that are absent from the target are omitted.
pub fn gram_setup(
    target: &Polynomial,
    kind: BlockKind,
    blocking: Blocking,
) -> Result<(ConeProgram, GramLayout)> {
    let k = half_degree_of(target)?;
    let sym = match blocking {
        Blocking::Single => None,
        Blocking::SignSymmetry => Some(SignSymmetry::of(&[target])?),
    };
    let mut prog = ConeProgram::new();
    let layout = add_gram_blocks(&mut prog, target.nvars(), k, kind, sym.as_ref());
    let mut rows = layout.contributions();
    for (m, _) in target.terms() {
        rows.entry(m.clone()).or_default();
    }
    for (m, terms) in rows.into_iter().rev() {
        prog.add_row(terms, target.coefficient(&m));
    }
    Ok((prog, layout))
}

/// One Gram block of a certificate: basis exponents and the matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramBlock {
    pub basis: Vec<Vec<u16>>,
    pub matrix: Vec<Vec<f64>>,
}

/// Gram blocks tagged with the cone they must lie in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramData {
    /// Entries are floating-point solver output, not exact values.
    #[serde(default = "numeric_tag")]
    pub numeric: bool,
    pub class: BlockKind,
    pub nvars: usize,
    pub blocks: Vec<GramBlock>,
}

fn numeric_tag() -> bool {
    true
}

impl GramData {
    /// `Σ_blocks zᵀQz` computed exactly from the rational values of the
    /// float entries.
    pub fn reconstruct(&self) -> Result<Polynomial> {
        let mut out = Polynomial::zero(self.nvars);
        for blk in &self.blocks {
            let n = blk.basis.len();
            if blk.matrix.len() != n || blk.matrix.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidInput("gram block shape mismatch".into()));
            }
            let basis: Vec<Monomial> = blk
                .basis
                .iter()
                .map(|e| {
                    if e.len() == self.nvars {
                        Ok(Monomial::new(e.clone()))
                    } else {
                        Err(Error::InvalidInput("basis monomial length mismatch".into()))
                    }
                })
                .collect::<Result<_>>()?;
            let mut terms = Vec::with_capacity(n * (n + 1) / 2);
            for i in 0..n {
                for j in i..n {
                    if blk.matrix[i][j] != blk.matrix[j][i] {
                        return Err(Error::NotSymmetric);
                    }
                    let q = from_f64(blk.matrix[i][j]);
                    if q.is_zero() {
                        continue;
                    }
                    let c = if i == j { q } else { q * int(2) };
                    terms.push((basis[i].mul(&basis[j]), c));
                }
            }
            out = &out + &Polynomial::from_terms(self.nvars, terms)?;
        }
        Ok(out)
    }

    /// Max coefficient error of the reconstruction against `target`.
    pub fn residual(&self, target: &Polynomial) -> Result<f64> {
        let diff = &self.reconstruct()? - target;
        Ok(to_f64(&diff.max_abs_coefficient()))
    }

    pub fn matrices(&self) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.basis.len();
                DMatrix::from_fn(n, n, |i, j| b.matrix[i][j])
            })
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (0..b.basis.len()).map(|i| b.matrix[i][i]).sum::<f64>())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::solve::{solve, Budget, ConeStatus};
    use crate::conic::tolerance::Tolerances;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn single_monomial_target() {
        let (prog, layout) = gram_setup(&x(1, 0).pow(4), BlockKind::Psd, Blocking::Single).unwrap();
        assert_eq!(layout.blocks.len(), 1);
        assert_eq!(prog.rows().len(), 1);
        assert_eq!(prog.rows()[0].terms, vec![(VarRef::entry(0, 0, 0), int(1))]);
        assert_eq!(prog.rows()[0].rhs, int(1));
    }

    #[test]
    fn cross_term_bookkeeping() {
        let target = &x(2, 0).pow(2) * &x(2, 1).pow(2);
        let (prog, layout) = gram_setup(&target, BlockKind::Psd, Blocking::Single).unwrap();
        // basis (x1², x1x2, x2²)
        assert_eq!(layout.blocks[0].1.len(), 3);
        let row = prog
            .rows()
            .iter()
            .find(|r| r.rhs == int(1))
            .expect("row for x1²x2²");
        let mut terms = row.terms.clone();
        terms.sort();
        assert_eq!(
            terms,
            vec![
                (VarRef::entry(0, 0, 2), int(2)),
                (VarRef::entry(0, 1, 1), int(1))
            ]
        );
    }

    #[test]
    fn zero_target_has_zero_rhs() {
        let (prog, _) = gram_setup(&Polynomial::zero(2), BlockKind::Psd, Blocking::Single).unwrap();
        assert!(!prog.rows().is_empty());
        assert!(prog.rows().iter().all(|r| r.rhs.is_zero()));
    }

    #[test]
    fn sign_symmetry_splits_even_targets_by_parity() {
        let target = &x(2, 0).pow(4) + &x(2, 1).pow(4);
        let (_, layout) = gram_setup(&target, BlockKind::Psd, Blocking::SignSymmetry).unwrap();
        // basis x1², x1x2, x2²: parities {00, 11, 00} → two classes
        let mut sizes: Vec<usize> = layout.blocks.iter().map(|b| b.1.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
    }

    #[test]
    fn symmetry_keys_respect_odd_supports() {
        // p = x1 x2 + x3²: flips fixing p are (x1,x2) together and x3 alone
        let p = &(&x(3, 0) * &x(3, 1)) + &x(3, 2).pow(2);
        let sym = SignSymmetry::of(&[&p]).unwrap();
        assert!(sym.is_invariant(&Monomial::new(vec![1, 1, 0])));
        assert!(!sym.is_invariant(&Monomial::new(vec![1, 0, 0])));
        assert_eq!(
            sym.class_key(&Monomial::new(vec![1, 0, 0])),
            sym.class_key(&Monomial::new(vec![0, 1, 0]))
        );
        assert!(SignSymmetry::trivial(3).is_invariant(&Monomial::new(vec![1, 0, 1])));
    }

    #[test]
    fn solved_gram_reconstructs_target() {
        // (x² + y²)² is a square
        let s = &x(2, 0).pow(2) + &x(2, 1).pow(2);
        let target = s.pow(2);
        for blocking in [Blocking::Single, Blocking::SignSymmetry] {
            let (prog, layout) = gram_setup(&target, BlockKind::Psd, blocking).unwrap();
            let st = solve(&prog, &Budget::default(), &Tolerances::default()).unwrap();
            let ConeStatus::Feasible(asg) = st else {
                panic!("{st:?}")
            };
            let data = layout.extract(&asg);
            assert!(data.residual(&target).unwrap() <= 1e-7);
        }
    }
}
