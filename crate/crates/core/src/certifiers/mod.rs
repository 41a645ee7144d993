//! Membership tests for the certificate cones, each returning a certificate
//! that can be checked again without the solver.

mod bounds;
mod polya;
mod sos;

use serde::{Deserialize, Serialize};

pub use bounds::{
    even_form_nbar, powers_reznick_nbar, r_hat_bound, weighted_norm, PolyaBoundReport,
};
pub use polya::{polya_certify, polya_expand, term_budget, PolyaExpansion, DEFAULT_TERM_BUDGET};
pub use sos::{artin_certify, dsos_certify, reznick_certify, DsosMode};

use crate::conic::{check_dd, check_psd, check_sdd, BlockKind, GramData, Tolerances};
use crate::error::{Error, Result};
use crate::poly::{sum_of_squares, Polynomial};
use crate::rational::as_string;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertKind {
    Polya,
    Reznick,
    Artin,
    Dsos,
    Sdsos,
}

impl CertKind {
    pub const ALL: [CertKind; 5] = [
        CertKind::Polya,
        CertKind::Reznick,
        CertKind::Artin,
        CertKind::Dsos,
        CertKind::Sdsos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CertKind::Polya => "polya",
            CertKind::Reznick => "reznick",
            CertKind::Artin => "artin",
            CertKind::Dsos => "dsos",
            CertKind::Sdsos => "sdsos",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    Unknown,
    BudgetExceeded,
}

/// Most negative coefficient of a rejected Polyá expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyaWitness {
    #[serde(with = "as_string")]
    pub coefficient: Rational,
    /// Exponents over `(v_1..v_n, w_1..w_n)`.
    pub monomial: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// Digest of the expanded product; it has `terms` terms, all nonnegative.
    Polya {
        terms: u64,
        #[serde(with = "as_string")]
        min_coefficient: Rational,
        sha256: String,
    },
    /// Gram data for `subject · (Σx²)^level`.
    Gram { product: GramData },
    /// `q` is the exact expansion of `q_gram`; `product` certifies
    /// `subject · q`.
    Multiplier {
        q: Polynomial,
        q_gram: GramData,
        product: GramData,
    },
}

/// Certificate that `subject` lies in the cone of kind `kind` at `level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertKind,
    pub level: u32,
    pub subject: Polynomial,
    pub payload: Payload,
}

/// Result of one membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<PolyaWitness>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl Outcome {
    pub(crate) fn accept(cert: Certificate) -> Self {
        Outcome {
            verdict: Verdict::Accept,
            certificate: Some(cert),
            witness: None,
            reason: None,
        }
    }

    pub(crate) fn without_certificate(verdict: Verdict, reason: impl Into<String>) -> Self {
        Outcome {
            verdict,
            certificate: None,
            witness: None,
            reason: Some(reason.into()),
        }
    }

    pub fn is_accept(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}

fn gram_class_ok(data: &GramData, tol: &Tolerances) -> Result<bool> {
    for m in data.matrices() {
        let ok = match data.class {
            BlockKind::Dd => check_dd(&m)?,
            BlockKind::Sdd => check_sdd(&m, tol.psd_eigenvalue.abs())?.is_some(),
            BlockKind::Psd => check_psd(&m, tol.psd_eigenvalue)?,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

fn expected_class(kind: CertKind) -> Option<BlockKind> {
    match kind {
        CertKind::Polya => None,
        CertKind::Reznick | CertKind::Artin => Some(BlockKind::Psd),
        CertKind::Dsos => Some(BlockKind::Dd),
        CertKind::Sdsos => Some(BlockKind::Sdd),
    }
}

fn check_gram(
    data: &GramData,
    target: &Polynomial,
    kind: CertKind,
    tol: &Tolerances,
    what: &str,
) -> Result<f64> {
    let bad = |msg: String| Err(Error::InvalidCertificate(format!("{what}: {msg}")));
    if Some(data.class) != expected_class(kind) {
        return bad(format!(
            "{} blocks do not match a {} certificate",
            data.class.name(),
            kind.name()
        ));
    }
    if data.nvars != target.nvars() {
        return bad("variable count differs from the subject".into());
    }
    let residual = data.residual(target)?;
    if residual > tol.reconstruction {
        return bad(format!(
            "reconstruction residual {residual:e} exceeds {:e}",
            tol.reconstruction
        ));
    }
    if !gram_class_ok(data, tol)? {
        return bad(format!("a block is not {}", data.class.name()));
    }
    Ok(residual)
}

impl Certificate {
    /// Re-checks the certificate from its own contents. Returns the largest
    /// Gram reconstruction residual (zero for Polyá).
    pub fn verify(&self, tol: &Tolerances) -> Result<f64> {
        match (&self.payload, self.kind) {
            (
                Payload::Polya {
                    terms,
                    min_coefficient,
                    sha256,
                },
                CertKind::Polya,
            ) => {
                let exp = polya_expand(&self.subject, self.level)?;
                if exp.terms != *terms
                    || &exp.sha256 != sha256
                    || &exp.min_coefficient != min_coefficient
                {
                    return Err(Error::InvalidCertificate("expansion digest differs".into()));
                }
                if exp.min_coefficient < Rational::from_integer(0.into()) {
                    return Err(Error::InvalidCertificate(
                        "expansion has a negative coefficient".into(),
                    ));
                }
                Ok(0.0)
            }
            (Payload::Gram { product }, CertKind::Reznick) => {
                let target = &self.subject * &sum_of_squares(self.subject.nvars()).pow(self.level);
                check_gram(product, &target, self.kind, tol, "product")
            }
            (
                Payload::Multiplier { q, q_gram, product },
                CertKind::Artin | CertKind::Dsos | CertKind::Sdsos,
            ) => {
                if &q_gram.reconstruct()? != q {
                    return Err(Error::InvalidCertificate(
                        "multiplier differs from its Gram expansion".into(),
                    ));
                }
                let r1 = check_gram(q_gram, q, self.kind, tol, "multiplier")?;
                let trace = q_gram.trace();
                if (trace - 1.0).abs() > tol.reconstruction {
                    return Err(Error::InvalidCertificate(format!(
                        "multiplier Gram trace {trace} is not 1"
                    )));
                }
                if q.is_zero() {
                    return Err(Error::InvalidCertificate("multiplier is zero".into()));
                }
                let expect_deg = match self.kind {
                    CertKind::Artin => 2 * self.level,
                    _ => 2 * self.level * self.level,
                };
                if q.form_degree()? != expect_deg {
                    return Err(Error::InvalidCertificate(format!(
                        "multiplier degree is not {expect_deg}"
                    )));
                }
                let r2 = check_gram(product, &(&self.subject * q), self.kind, tol, "product")?;
                Ok(r1.max(r2))
            }
            _ => Err(Error::InvalidCertificate(format!(
                "payload does not match a {} certificate",
                self.kind.name()
            ))),
        }
    }
}
