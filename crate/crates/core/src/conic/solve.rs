//! Compilation of a [`ConeProgram`] into standard form and the public solve.
//!
//! Free scalars split into two nonnegative parts. A dd block of size `s`
//! becomes `s` diagonal slacks `a_i ≥ 0` plus pairs `b⁺_ij, b⁻_ij ≥ 0` with
//! `M_ij = b⁺_ij − b⁻_ij` and `M_ii = a_i + Σ_j (b⁺_ij + b⁻_ij)`, which is
//! exactly the cone of dd matrices. An sdd block becomes one 2×2 PSD block
//! per index pair, since sdd matrices are the sums of PSD matrices supported
//! on 2×2 principal submatrices.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use super::classes::{check_dd, check_psd, check_sdd, repair_dd_diagonal};
use super::ipm::{self, IpmOutcome, IpmSettings, StdBlock, StdForm};
use super::program::{Assignment, BlockKind, ConeProgram, ScalarKind, VarRef};
use super::tolerance::Tolerances;
use crate::error::Result;
use crate::rational::to_f64;

/// Resource limits for one solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Budget {
    pub max_iterations: usize,
    pub max_seconds: Option<f64>,
    /// Programs with more equality rows than this are not attempted.
    pub max_rows: usize,
    /// Programs with more standard-form scalar variables than this are not
    /// attempted.
    pub max_lp_vars: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_iterations: 150,
            max_seconds: None,
            max_rows: 2500,
            max_lp_vars: 400_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarkasEvidence {
    /// Dual multipliers, one per row of the program.
    pub y: Vec<f64>,
    /// `bᵀy`, positive for a certificate.
    pub dual_objective: f64,
    /// Smallest eigenvalue (or entry) of `−Aᵀy` over the cones.
    pub min_dual_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Farkas(FarkasEvidence),
    /// A row with no variables and a nonzero right-hand side.
    EmptyRow {
        row: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConeStatus {
    Feasible(Assignment),
    Infeasible(Evidence),
    Unknown(String),
    BudgetExceeded(String),
}

impl ConeStatus {
    pub fn name(&self) -> &'static str {
        match self {
            ConeStatus::Feasible(_) => "feasible",
            ConeStatus::Infeasible(_) => "infeasible",
            ConeStatus::Unknown(_) => "unknown",
            ConeStatus::BudgetExceeded(_) => "budget_exceeded",
        }
    }
}

enum ScalarMap {
    Nonneg(usize),
    Free(usize, usize),
}

enum BlockMap {
    /// Size-one block stored as a single standard scalar.
    Scalar(usize),
    Psd(usize),
    Dd {
        diag: Vec<usize>,
        pairs: BTreeMap<(usize, usize), (usize, usize)>,
    },
    Sdd {
        pairs: BTreeMap<(usize, usize), usize>,
    },
}

struct Compiled {
    form: StdForm,
    scalars: Vec<ScalarMap>,
    blocks: Vec<BlockMap>,
    /// Standard-form row of each program row, `None` for dropped rows.
    row_map: Vec<Option<usize>>,
}

enum Target {
    Lp(usize),
    Sdp(usize, usize, usize),
}

fn compile(prog: &ConeProgram) -> std::result::Result<Compiled, Evidence> {
    let mut nlp = 0usize;
    let mut nblocks = 0usize;
    let mut block_sizes = Vec::new();
    let mut fresh = || {
        nlp += 1;
        nlp - 1
    };
    let scalars: Vec<ScalarMap> = prog
        .scalars()
        .iter()
        .map(|k| match k {
            ScalarKind::Nonneg => ScalarMap::Nonneg(fresh()),
            ScalarKind::Free => {
                let a = fresh();
                ScalarMap::Free(a, fresh())
            }
        })
        .collect();
    let blocks: Vec<BlockMap> = prog
        .blocks()
        .iter()
        .map(|&(kind, size)| {
            if size == 1 {
                return BlockMap::Scalar(fresh());
            }
            match kind {
                BlockKind::Psd => {
                    block_sizes.push(size);
                    nblocks += 1;
                    BlockMap::Psd(nblocks - 1)
                }
                BlockKind::Dd => {
                    let diag = (0..size).map(|_| fresh()).collect();
                    let mut pairs = BTreeMap::new();
                    for i in 0..size {
                        for j in i + 1..size {
                            let p = fresh();
                            pairs.insert((i, j), (p, fresh()));
                        }
                    }
                    BlockMap::Dd { diag, pairs }
                }
                BlockKind::Sdd => {
                    let mut pairs = BTreeMap::new();
                    for i in 0..size {
                        for j in i + 1..size {
                            block_sizes.push(2);
                            nblocks += 1;
                            pairs.insert((i, j), nblocks - 1);
                        }
                    }
                    BlockMap::Sdd { pairs }
                }
            }
        })
        .collect();

    let expand = |v: VarRef, c: f64, out: &mut Vec<(Target, f64)>| match v {
        VarRef::Scalar(s) => match scalars[s] {
            ScalarMap::Nonneg(j) => out.push((Target::Lp(j), c)),
            ScalarMap::Free(p, m) => {
                out.push((Target::Lp(p), c));
                out.push((Target::Lp(m), -c));
            }
        },
        VarRef::Entry { block, i, j } => match &blocks[block] {
            BlockMap::Scalar(lp) => out.push((Target::Lp(*lp), c)),
            BlockMap::Psd(b) => out.push((Target::Sdp(*b, i, j), c)),
            BlockMap::Dd { diag, pairs } => {
                if i == j {
                    out.push((Target::Lp(diag[i]), c));
                    for (&(p, q), &(bp, bm)) in pairs.iter() {
                        if p == i || q == i {
                            out.push((Target::Lp(bp), c));
                            out.push((Target::Lp(bm), c));
                        }
                    }
                } else {
                    let (bp, bm) = pairs[&(i, j)];
                    out.push((Target::Lp(bp), c));
                    out.push((Target::Lp(bm), -c));
                }
            }
            BlockMap::Sdd { pairs } => {
                if i == j {
                    for (&(p, q), &b) in pairs.iter() {
                        if p == i {
                            out.push((Target::Sdp(b, 0, 0), c));
                        } else if q == i {
                            out.push((Target::Sdp(b, 1, 1), c));
                        }
                    }
                } else {
                    out.push((Target::Sdp(pairs[&(i, j)], 0, 1), c));
                }
            }
        },
    };

    let mut lp_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nlp];
    let mut std_blocks: Vec<StdBlock> = block_sizes
        .iter()
        .map(|&size| StdBlock {
            size,
            entries: Vec::new(),
        })
        .collect();
    let mut b = Vec::new();
    let mut row_map = Vec::with_capacity(prog.rows().len());
    for (k, row) in prog.rows().iter().enumerate() {
        let mut terms = Vec::new();
        for (v, c) in &row.terms {
            expand(*v, to_f64(c), &mut terms);
        }
        let mut lp: BTreeMap<usize, f64> = BTreeMap::new();
        let mut sdp: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for (t, c) in terms {
            match t {
                Target::Lp(j) => *lp.entry(j).or_insert(0.0) += c,
                Target::Sdp(bk, i, j) => *sdp.entry((bk, i, j)).or_insert(0.0) += c,
            }
        }
        lp.retain(|_, c| *c != 0.0);
        sdp.retain(|_, c| *c != 0.0);
        let rhs = to_f64(&row.rhs);
        if lp.is_empty() && sdp.is_empty() {
            if rhs != 0.0 {
                return Err(Evidence::EmptyRow { row: k });
            }
            row_map.push(None);
            continue;
        }
        let r = b.len();
        for (j, c) in lp {
            lp_cols[j].push((r, c));
        }
        for ((bk, i, j), c) in sdp {
            std_blocks[bk].entries.push((r, i, j, c));
        }
        b.push(rhs);
        row_map.push(Some(r));
    }
    Ok(Compiled {
        form: StdForm {
            rows: b.len(),
            lp_cols,
            blocks: std_blocks,
            b,
        },
        scalars,
        blocks,
        row_map,
    })
}

fn assemble(prog: &ConeProgram, c: &Compiled, x: &[f64], mats: &[DMatrix<f64>]) -> Assignment {
    let scalars = c
        .scalars
        .iter()
        .map(|s| match *s {
            ScalarMap::Nonneg(j) => x[j],
            ScalarMap::Free(p, m) => x[p] - x[m],
        })
        .collect();
    let blocks = c
        .blocks
        .iter()
        .zip(prog.blocks())
        .map(|(map, &(kind, size))| match map {
            BlockMap::Scalar(j) => DMatrix::from_element(1, 1, x[*j]),
            BlockMap::Psd(b) => mats[*b].clone(),
            BlockMap::Dd { diag, pairs } => {
                let mut m = DMatrix::zeros(size, size);
                for (i, &a) in diag.iter().enumerate() {
                    m[(i, i)] = x[a];
                }
                for (&(i, j), &(bp, bm)) in pairs {
                    let v = x[bp] - x[bm];
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                    m[(i, i)] += x[bp] + x[bm];
                    m[(j, j)] += x[bp] + x[bm];
                }
                debug_assert_eq!(kind, BlockKind::Dd);
                repair_dd_diagonal(&mut m);
                m
            }
            BlockMap::Sdd { pairs } => {
                let mut m = DMatrix::zeros(size, size);
                for (&(i, j), &b) in pairs {
                    let p = &mats[b];
                    m[(i, i)] += p[(0, 0)];
                    m[(j, j)] += p[(1, 1)];
                    m[(i, j)] += p[(0, 1)];
                    m[(j, i)] += p[(0, 1)];
                }
                m
            }
        })
        .collect();
    Assignment { scalars, blocks }
}

/// Checks an assignment against every row and every cone.
pub fn verify_assignment(
    prog: &ConeProgram,
    asg: &Assignment,
    tol: &Tolerances,
) -> std::result::Result<(), String> {
    if asg.scalars.len() != prog.scalars().len() || asg.blocks.len() != prog.blocks().len() {
        return Err("assignment shape does not match the program".into());
    }
    let res = asg.max_residual(prog);
    if res > tol.equality_residual {
        return Err(format!("equality residual {res:.3e}"));
    }
    for (i, (k, v)) in prog.scalars().iter().zip(&asg.scalars).enumerate() {
        if *k == ScalarKind::Nonneg && *v < 0.0 {
            return Err(format!("scalar {i} is negative"));
        }
    }
    for (b, (&(kind, size), m)) in prog.blocks().iter().zip(&asg.blocks).enumerate() {
        if m.nrows() != size || m.ncols() != size {
            return Err(format!("block {b} has the wrong shape"));
        }
        let ok = match kind {
            BlockKind::Dd => check_dd(m),
            BlockKind::Sdd => check_sdd(m, 1e-9).map(|d| d.is_some()),
            BlockKind::Psd => check_psd(m, tol.psd_eigenvalue * m.amax().max(1.0)),
        }
        .map_err(|e| format!("block {b}: {e}"))?;
        if !ok {
            return Err(format!("block {b} is not {}", kind.name()));
        }
    }
    Ok(())
}

/// A solver configuration: limits plus tolerances. Cheap to clone; each
/// concurrent task should own one.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Backend {
    pub budget: Budget,
    pub tolerances: Tolerances,
}

impl Backend {
    pub fn solve(&self, prog: &ConeProgram) -> Result<ConeStatus> {
        solve(prog, &self.budget, &self.tolerances)
    }
}

/// Decides feasibility of `prog`. Feasible answers are re-verified before
/// they are returned.
pub fn solve(prog: &ConeProgram, budget: &Budget, tol: &Tolerances) -> Result<ConeStatus> {
    prog.validate()?;
    if prog.rows().is_empty() {
        let asg = Assignment {
            scalars: vec![0.0; prog.scalars().len()],
            blocks: prog
                .blocks()
                .iter()
                .map(|&(_, s)| DMatrix::zeros(s, s))
                .collect(),
        };
        return Ok(ConeStatus::Feasible(asg));
    }
    let compiled = match compile(prog) {
        Ok(c) => c,
        Err(ev) => return Ok(ConeStatus::Infeasible(ev)),
    };
    let form = &compiled.form;
    if form.rows > budget.max_rows {
        return Ok(ConeStatus::BudgetExceeded(format!(
            "{} equality rows exceed the limit of {}",
            form.rows, budget.max_rows
        )));
    }
    let nvars = form.lp_cols.len()
        + form
            .blocks
            .iter()
            .map(|b| b.size * (b.size + 1) / 2)
            .sum::<usize>();
    if nvars > budget.max_lp_vars {
        return Ok(ConeStatus::BudgetExceeded(format!(
            "{nvars} standard-form variables exceed the limit of {}",
            budget.max_lp_vars
        )));
    }
    let settings = IpmSettings {
        max_iterations: budget.max_iterations,
        max_seconds: budget.max_seconds,
        equality_tolerance: tol.equality_residual,
        psd_threshold: tol.psd_eigenvalue,
        infeasibility_margin: tol.infeasibility_margin,
    };
    Ok(match ipm::solve(form, &settings) {
        IpmOutcome::Feasible { x, blocks, .. } => {
            let asg = assemble(prog, &compiled, &x, &blocks);
            match verify_assignment(prog, &asg, tol) {
                Ok(()) => ConeStatus::Feasible(asg),
                Err(why) => ConeStatus::Unknown(format!("candidate failed verification: {why}")),
            }
        }
        IpmOutcome::Infeasible {
            y,
            dual_objective,
            min_dual_slack,
            ..
        } => {
            let mut full_y = vec![0.0; prog.rows().len()];
            for (k, r) in compiled.row_map.iter().enumerate() {
                if let Some(r) = r {
                    full_y[k] = y[*r];
                }
            }
            ConeStatus::Infeasible(Evidence::Farkas(FarkasEvidence {
                y: full_y,
                dual_objective,
                min_dual_slack,
            }))
        }
        IpmOutcome::Unknown { reason, .. } => {
            if reason == "time limit" || reason == "iteration limit" {
                ConeStatus::BudgetExceeded(reason)
            } else {
                ConeStatus::Unknown(reason)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn gram_x1sq_plus_x2sq(kind: BlockKind) -> ConeProgram {
        // x1² + x2² = zᵀQz with z = (x1, x2)
        let mut p = ConeProgram::new();
        let b = p.add_block(kind, 2);
        p.add_row(vec![(VarRef::entry(b, 0, 0), int(1))], int(1));
        p.add_row(vec![(VarRef::entry(b, 0, 1), int(2))], int(0));
        p.add_row(vec![(VarRef::entry(b, 1, 1), int(1))], int(1));
        p
    }

    #[test]
    fn diagonal_gram_in_every_cone() {
        for kind in [BlockKind::Dd, BlockKind::Sdd, BlockKind::Psd] {
            let st = solve(
                &gram_x1sq_plus_x2sq(kind),
                &Budget::default(),
                &Tolerances::default(),
            )
            .unwrap();
            let ConeStatus::Feasible(a) = st else {
                panic!("{kind:?}: {st:?}")
            };
            assert!((a.blocks[0][(0, 0)] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_program_is_feasible() {
        let st = solve(
            &ConeProgram::new(),
            &Budget::default(),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(
            st,
            ConeStatus::Feasible(Assignment {
                scalars: vec![],
                blocks: vec![]
            })
        );
    }

    fn pinned(kind: BlockKind) -> ConeProgram {
        // M = [[2, 3], [3, 5]]: sdd (hence psd) but not dd
        let mut p = ConeProgram::new();
        let b = p.add_block(kind, 2);
        p.add_row(vec![(VarRef::entry(b, 0, 0), int(1))], int(2));
        p.add_row(vec![(VarRef::entry(b, 1, 1), int(1))], int(5));
        p.add_row(vec![(VarRef::entry(b, 0, 1), int(1))], int(3));
        p
    }

    #[test]
    fn dd_rejects_an_sdd_matrix() {
        let (budget, tol) = (Budget::default(), Tolerances::default());
        assert!(matches!(
            solve(&pinned(BlockKind::Dd), &budget, &tol).unwrap(),
            ConeStatus::Infeasible(_)
        ));
        assert!(matches!(
            solve(&pinned(BlockKind::Sdd), &budget, &tol).unwrap(),
            ConeStatus::Feasible(_)
        ));
        assert!(matches!(
            solve(&pinned(BlockKind::Psd), &budget, &tol).unwrap(),
            ConeStatus::Feasible(_)
        ));
    }

    #[test]
    fn free_scalars_and_empty_rows() {
        let mut p = ConeProgram::new();
        let t = p.add_scalar(ScalarKind::Free);
        p.add_row(vec![(VarRef::Scalar(t), int(1))], int(-3));
        let ConeStatus::Feasible(a) =
            solve(&p, &Budget::default(), &Tolerances::default()).unwrap()
        else {
            panic!()
        };
        assert!((a.scalars[0] + 3.0).abs() < 1e-8);

        p.add_row(vec![], int(1));
        assert!(matches!(
            solve(&p, &Budget::default(), &Tolerances::default()).unwrap(),
            ConeStatus::Infeasible(Evidence::EmptyRow { row: 1 })
        ));
    }
}
