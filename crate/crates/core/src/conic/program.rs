use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Free,
    Nonneg,
}

/// Cone class of a symmetric matrix block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Dd,
    Sdd,
    Psd,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Dd => "dd",
            BlockKind::Sdd => "sdd",
            BlockKind::Psd => "psd",
        }
    }
}

/// A decision variable: a scalar, or entry `(i, j)` with `i ≤ j` of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Scalar(usize),
    Entry { block: usize, i: usize, j: usize },
}

impl VarRef {
    /// Entry reference with the indices put in `i ≤ j` order.
    pub fn entry(block: usize, i: usize, j: usize) -> Self {
        VarRef::Entry {
            block,
            i: i.min(j),
            j: i.max(j),
        }
    }
}

/// `Σ coef · var = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub terms: Vec<(VarRef, Rational)>,
    pub rhs: Rational,
}

/// A conic feasibility problem: find scalars and symmetric blocks in their
/// cones satisfying every equality row.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConeProgram {
    scalars: Vec<ScalarKind>,
    blocks: Vec<(BlockKind, usize)>,
    rows: Vec<Row>,
}

impl ConeProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_scalar(&mut self, kind: ScalarKind) -> usize {
        self.scalars.push(kind);
        self.scalars.len() - 1
    }

    pub fn add_block(&mut self, kind: BlockKind, size: usize) -> usize {
        self.blocks.push((kind, size));
        self.blocks.len() - 1
    }

    pub fn add_row(&mut self, terms: Vec<(VarRef, Rational)>, rhs: Rational) {
        self.rows.push(Row { terms, rhs });
    }

    pub fn scalars(&self) -> &[ScalarKind] {
        &self.scalars
    }

    pub fn blocks(&self) -> &[(BlockKind, usize)] {
        &self.blocks
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.scalars.is_empty() && self.blocks.is_empty()
    }

    /// Checks that every row references declared variables and that blocks
    /// are nonempty.
    pub fn validate(&self) -> Result<()> {
        for (b, &(_, size)) in self.blocks.iter().enumerate() {
            if size == 0 {
                return Err(Error::MalformedProgram(format!("block {b} has size 0")));
            }
        }
        for (k, row) in self.rows.iter().enumerate() {
            for (v, _) in &row.terms {
                match *v {
                    VarRef::Scalar(s) if s >= self.scalars.len() => {
                        return Err(Error::MalformedProgram(format!(
                            "row {k} references undeclared scalar {s}"
                        )))
                    }
                    VarRef::Entry { block, i, j } => {
                        let Some(&(_, size)) = self.blocks.get(block) else {
                            return Err(Error::MalformedProgram(format!(
                                "row {k} references undeclared block {block}"
                            )));
                        };
                        if i > j || j >= size {
                            return Err(Error::MalformedProgram(format!(
                                "row {k} references entry ({i},{j}) of block {block} (size {size})"
                            )));
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Plain-text listing: variables, block tags and equalities.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scalars {}", self.scalars.len());
        for (i, k) in self.scalars.iter().enumerate() {
            let tag = match k {
                ScalarKind::Free => "free",
                ScalarKind::Nonneg => "nonneg",
            };
            let _ = writeln!(out, "  t{i} {tag}");
        }
        let _ = writeln!(out, "blocks {}", self.blocks.len());
        for (b, (k, size)) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "  B{b} {} {size}", k.name());
        }
        let _ = writeln!(out, "rows {}", self.rows.len());
        for row in &self.rows {
            let terms: Vec<String> = row
                .terms
                .iter()
                .map(|(v, c)| match v {
                    VarRef::Scalar(s) => format!("{c}*t{s}"),
                    VarRef::Entry { block, i, j } => format!("{c}*B{block}[{i},{j}]"),
                })
                .collect();
            let lhs = if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" + ")
            };
            let _ = writeln!(out, "  {lhs} = {}", row.rhs);
        }
        out
    }
}

/// Values for every variable of a program.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub scalars: Vec<f64>,
    pub blocks: Vec<DMatrix<f64>>,
}

impl Assignment {
    pub fn value(&self, v: VarRef) -> f64 {
        match v {
            VarRef::Scalar(s) => self.scalars[s],
            VarRef::Entry { block, i, j } => self.blocks[block][(i, j)],
        }
    }

    /// Largest absolute equality violation.
    pub fn max_residual(&self, prog: &ConeProgram) -> f64 {
        prog.rows
            .iter()
            .map(|row| {
                let lhs: f64 = row
                    .terms
                    .iter()
                    .map(|(v, c)| crate::rational::to_f64(c) * self.value(*v))
                    .sum();
                (lhs - crate::rational::to_f64(&row.rhs)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn validation_catches_bad_references() {
        let mut p = ConeProgram::new();
        let b = p.add_block(BlockKind::Psd, 2);
        p.add_row(vec![(VarRef::entry(b, 1, 0), int(2))], int(1));
        assert!(p.validate().is_ok());
        p.add_row(vec![(VarRef::entry(b, 2, 0), int(1))], int(0));
        assert!(p.validate().is_err());

        let mut q = ConeProgram::new();
        q.add_row(vec![(VarRef::Scalar(0), int(1))], int(0));
        assert!(q.validate().is_err());

        let mut z = ConeProgram::new();
        z.add_block(BlockKind::Dd, 0);
        assert!(z.validate().is_err());
    }

    #[test]
    fn dump_lists_everything() {
        let mut p = ConeProgram::new();
        let t = p.add_scalar(ScalarKind::Free);
        let b = p.add_block(BlockKind::Sdd, 2);
        p.add_row(
            vec![
                (VarRef::Scalar(t), int(1)),
                (VarRef::entry(b, 0, 1), int(2)),
            ],
            int(3),
        );
        let text = p.dump();
        assert!(text.contains("t0 free"));
        assert!(text.contains("B0 sdd 2"));
        assert!(text.contains("1*t0 + 2*B0[0,1] = 3"));
    }
}
