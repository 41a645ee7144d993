use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Monomial, Polynomial};
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational};

/// Wire form of a polynomial: `{"nvars": n, "terms": [{"exp": [..], "coef": "p/q"}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub nvars: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub exp: Vec<u16>,
    pub coef: String,
}

impl From<&Polynomial> for PolyJson {
    fn from(p: &Polynomial) -> Self {
        PolyJson {
            nvars: p.nvars(),
            terms: p
                .terms()
                .map(|(m, c)| TermJson {
                    exp: m.exponents().to_vec(),
                    coef: format_rational(c),
                })
                .collect(),
        }
    }
}

impl TryFrom<PolyJson> for Polynomial {
    type Error = Error;

    /// Repeated monomials are summed and zero coefficients dropped.
    fn try_from(j: PolyJson) -> Result<Self> {
        if j.nvars == 0 {
            return Err(Error::InvalidInput("nvars must be positive".into()));
        }
        let mut terms = Vec::with_capacity(j.terms.len());
        for (k, t) in j.terms.into_iter().enumerate() {
            if t.exp.len() != j.nvars {
                return Err(Error::InvalidInput(format!(
                    "terms[{k}].exp has {} entries, expected {}",
                    t.exp.len(),
                    j.nvars
                )));
            }
            let c = parse_rational(&t.coef)
                .map_err(|_| Error::InvalidInput(format!("terms[{k}].coef: {:?}", t.coef)))?;
            terms.push((Monomial::new(t.exp), c));
        }
        Polynomial::from_terms(j.nvars, terms)
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PolyJson::deserialize(d)?;
        Polynomial::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl Polynomial {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("polynomial serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}
