//! Gram-matrix certifiers: Reznick (`p·(Σx²)^r` sos), Artin (`p·q` sos for
//! a nonzero sos `q` of degree `2r`), and the dd/sdd variant with `q` of
//! degree `2r²`.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{CertKind, Certificate, Outcome, Payload, Verdict};
use crate::conic::gram::add_gram_blocks;
use crate::conic::{
    gram_setup, Assignment, Backend, BlockKind, Blocking, ConeProgram, ConeStatus, SignSymmetry,
    VarRef,
};
use crate::error::{Error, Result};
use crate::poly::{count_monomials, sum_of_squares, Monomial, Polynomial};
use crate::rational::int;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DsosMode {
    Dd,
    Sdd,
}

impl DsosMode {
    fn class(self) -> BlockKind {
        match self {
            DsosMode::Dd => BlockKind::Dd,
            DsosMode::Sdd => BlockKind::Sdd,
        }
    }

    fn kind(self) -> CertKind {
        match self {
            DsosMode::Dd => CertKind::Dsos,
            DsosMode::Sdd => CertKind::Sdsos,
        }
    }
}

fn half_degree(p: &Polynomial) -> Result<u32> {
    let deg = p.form_degree()?;
    if deg % 2 != 0 {
        return Err(Error::OddDegree(deg));
    }
    Ok(deg / 2)
}

/// Each basis monomial `m` of a Gram block owns the row of `m²`, so the
/// basis size bounds the row count from below. Refusing early avoids
/// building programs the backend would turn down anyway.
fn oversized(nvars: usize, half: u32, backend: &Backend) -> Option<Outcome> {
    let rows = count_monomials(nvars, u64::from(half));
    (rows > backend.budget.max_rows as u64).then(|| {
        Outcome::without_certificate(
            Verdict::BudgetExceeded,
            format!(
                "at least {rows} equality rows exceed the limit of {}",
                backend.budget.max_rows
            ),
        )
    })
}

/// Turns a solver status into an outcome. Feasible points become
/// certificates, which must pass `Certificate::verify` to count as accepts.
fn conclude(
    status: ConeStatus,
    backend: &Backend,
    build: impl FnOnce(&Assignment) -> Result<Certificate>,
) -> Result<Outcome> {
    Ok(match status {
        ConeStatus::Feasible(asg) => {
            let cert = build(&asg)?;
            match cert.verify(&backend.tolerances) {
                Ok(_) => Outcome::accept(cert),
                Err(e) => Outcome::without_certificate(Verdict::Unknown, e.to_string()),
            }
        }
        ConeStatus::Infeasible(ev) => Outcome::without_certificate(
            Verdict::Reject,
            serde_json::to_string(&ev).unwrap_or_else(|_| "infeasible".into()),
        ),
        ConeStatus::Unknown(why) => Outcome::without_certificate(Verdict::Unknown, why),
        ConeStatus::BudgetExceeded(why) => {
            Outcome::without_certificate(Verdict::BudgetExceeded, why)
        }
    })
}

/// Is `p·(Σx²)^r` a sum of squares?
pub fn reznick_certify(p: &Polynomial, r: u32, backend: &Backend) -> Result<Outcome> {
    let half = half_degree(p)?;
    if let Some(out) = oversized(p.nvars(), half + r, backend) {
        return Ok(out);
    }
    let target = p * &sum_of_squares(p.nvars()).pow(r);
    let (prog, layout) = gram_setup(&target, BlockKind::Psd, Blocking::SignSymmetry)?;
    let status = backend.solve(&prog)?;
    conclude(status, backend, |asg| {
        Ok(Certificate {
            kind: CertKind::Reznick,
            level: r,
            subject: p.clone(),
            payload: Payload::Gram {
                product: layout.extract(asg),
            },
        })
    })
}

/// Joint program for `q = z_qᵀ Q z_q` with `trace(Q) = 1` and
/// `p·q = z_pᵀ P z_p`, `Q` and `P` in `class`. The coefficients of `q` are
/// linear in `Q`, so they are substituted rather than declared.
fn multiplier_search(
    p: &Polynomial,
    q_half: u32,
    class: BlockKind,
    kind: CertKind,
    level: u32,
    backend: &Backend,
) -> Result<Outcome> {
    let p_half = half_degree(p)?;
    let n = p.nvars();
    if let Some(out) = oversized(n, p_half + q_half, backend) {
        return Ok(out);
    }
    let sym = SignSymmetry::of(&[p])?;
    let mut prog = ConeProgram::new();
    let q_layout = add_gram_blocks(&mut prog, n, q_half, class, Some(&sym));
    let pq_layout = add_gram_blocks(&mut prog, n, p_half + q_half, class, Some(&sym));

    let mut rows: BTreeMap<Monomial, BTreeMap<VarRef, Rational>> = BTreeMap::new();
    for (alpha, terms) in pq_layout.contributions() {
        let row = rows.entry(alpha).or_default();
        for (v, c) in terms {
            *row.entry(v).or_insert_with(Rational::zero) += c;
        }
    }
    let q_contrib = q_layout.contributions();
    for (beta, pb) in p.terms() {
        for (gamma, terms) in &q_contrib {
            let row = rows.entry(beta.mul(gamma)).or_default();
            for (v, c) in terms {
                *row.entry(*v).or_insert_with(Rational::zero) -= pb * c;
            }
        }
    }
    for (_, row) in rows.into_iter().rev() {
        let terms: Vec<(VarRef, Rational)> =
            row.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if !terms.is_empty() {
            prog.add_row(terms, int(0));
        }
    }
    prog.add_row(q_layout.trace_terms(), int(1));

    let status = backend.solve(&prog)?;
    conclude(status, backend, |asg| {
        let q_gram = q_layout.extract(asg);
        let q = q_gram.reconstruct()?;
        Ok(Certificate {
            kind,
            level,
            subject: p.clone(),
            payload: Payload::Multiplier {
                q,
                q_gram,
                product: pq_layout.extract(asg),
            },
        })
    })
}

/// Is `p·q` a sum of squares for some sos `q ≠ 0` of degree `2r`?
/// Nontriviality is imposed as `trace(Gram_q) = 1`.
pub fn artin_certify(p: &Polynomial, r: u32, backend: &Backend) -> Result<Outcome> {
    multiplier_search(p, r, BlockKind::Psd, CertKind::Artin, r, backend)
}

/// Are `q` and `pgr·q` dsos (or sdsos) for some `q` of degree `2r²` with
/// `trace(Gram_q) = 1`?
pub fn dsos_certify(
    pgr: &Polynomial,
    r: u32,
    mode: DsosMode,
    backend: &Backend,
) -> Result<Outcome> {
    if r == 0 {
        return Err(Error::InvalidArgument("level r must be positive".into()));
    }
    multiplier_search(pgr, r * r, mode.class(), mode.kind(), r, backend)
}
