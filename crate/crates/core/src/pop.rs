//! Polynomial optimization problems and the constants the reduction needs.

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::rng::SplitMix64;
use crate::poly::Polynomial;
use crate::rational::{format_rational, from_f64, parse_rational, pow, sqrt_upper};
use crate::Rational;

/// `min p(x)` subject to `g_i(x) ≥ 0`, with the feasible set inside
/// `{Σ x_i² ≤ radius_sq}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopInstance {
    objective: Polynomial,
    constraints: Vec<Polynomial>,
    radius_sq: Rational,
}

impl PopInstance {
    pub fn new(
        objective: Polynomial,
        constraints: Vec<Polynomial>,
        radius_sq: Rational,
    ) -> Result<Self> {
        let n = objective.nvars();
        if n == 0 {
            return Err(Error::InvalidInput(
                "objective: nvars must be positive".into(),
            ));
        }
        for (i, g) in constraints.iter().enumerate() {
            if g.nvars() != n {
                return Err(Error::InvalidInput(format!(
                    "constraints[{i}]: {} variables, objective has {n}",
                    g.nvars()
                )));
            }
        }
        if !radius_sq.is_positive() {
            return Err(Error::InvalidInput("radius_sq must be positive".into()));
        }
        Ok(PopInstance {
            objective,
            constraints,
            radius_sq,
        })
    }

    pub fn objective(&self) -> &Polynomial {
        &self.objective
    }

    pub fn constraints(&self) -> &[Polynomial] {
        &self.constraints
    }

    pub fn radius_sq(&self) -> &Rational {
        &self.radius_sq
    }

    pub fn nvars(&self) -> usize {
        self.objective.nvars()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Exact feasibility: every `g_i(x) ≥ 0` and `Σx² ≤ R`.
    pub fn is_feasible(&self, x: &[Rational]) -> Result<bool> {
        if x.len() != self.nvars() {
            return Err(Error::PointLength {
                expected: self.nvars(),
                got: x.len(),
            });
        }
        let norm: Rational = x.iter().map(|v| v * v).sum();
        if norm > self.radius_sq {
            return Ok(false);
        }
        for g in &self.constraints {
            if g.evaluate(x)?.is_negative() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Feasibility of the constraints alone, ignoring the ball.
    pub fn satisfies_constraints(&self, x: &[Rational]) -> Result<bool> {
        for g in &self.constraints {
            if g.evaluate(x)?.is_negative() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PopJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let radius_sq = parse_rational(&raw.radius_sq)
            .map_err(|_| Error::InvalidInput(format!("radius_sq: {:?}", raw.radius_sq)))?;
        PopInstance::new(raw.objective, raw.constraints, radius_sq)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PopJson {
            objective: self.objective.clone(),
            constraints: self.constraints.clone(),
            radius_sq: format_rational(&self.radius_sq),
        })
        .expect("pop serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopJson {
    objective: Polynomial,
    #[serde(default)]
    constraints: Vec<Polynomial>,
    radius_sq: String,
}

/// `d`, `η_i`, `β` and the derived sizes `N = n+m+3`, `D = 2d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopConstants {
    pub d: u32,
    pub eta: Vec<Rational>,
    pub beta: Rational,
    /// Rational `u ≥ √R` used in the monomial bounds.
    pub sqrt_r: Rational,
    pub sqrt_r_exact: bool,
    pub n: usize,
    pub m: usize,
}

impl PopConstants {
    /// Variable count of the reduced form, `n + m + 3`.
    pub fn big_n(&self) -> usize {
        self.n + self.m + 3
    }

    /// Degree parameter `D = 2d`; the reduced form has degree `2D`.
    pub fn big_d(&self) -> u32 {
        2 * self.d
    }

    /// `R + Ση_i + β`.
    pub fn offset(&self, radius_sq: &Rational) -> Rational {
        radius_sq + self.eta.iter().sum::<Rational>() + &self.beta
    }

    /// Smallest admissible `γ`, namely `−(R + Ση_i + β)`.
    pub fn floor(&self, radius_sq: &Rational) -> Rational {
        -self.offset(radius_sq)
    }
}

/// `Σ_α |c_α| u^{|α|}`: an upper bound on `|q|` over the box `|x_j| ≤ u`.
pub fn monomial_bound(q: &Polynomial, u: &Rational) -> Rational {
    q.terms().map(|(m, c)| c.abs() * pow(u, m.degree())).sum()
}

pub fn compute_constants(pop: &PopInstance) -> PopConstants {
    let maxdeg = std::iter::once(&pop.objective)
        .chain(&pop.constraints)
        .filter_map(Polynomial::degree)
        .max()
        .unwrap_or(0);
    let d = maxdeg.div_ceil(2).max(1);
    let (u, exact) = sqrt_upper(&pop.radius_sq);
    let eta = pop
        .constraints
        .iter()
        .map(|g| monomial_bound(g, &u))
        .collect();
    let beta = monomial_bound(&-&pop.objective, &u);
    PopConstants {
        d,
        eta,
        beta,
        sqrt_r: u,
        sqrt_r_exact: exact,
        n: pop.nvars(),
        m: pop.num_constraints(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub n: usize,
    pub m: usize,
    pub objective_degree: u32,
    pub constraint_degrees: Vec<u32>,
    pub d: u32,
    pub warnings: Vec<String>,
}

/// Number of random probes `validate` draws around the ball.
pub const VALIDATE_SAMPLES: usize = 2000;

/// Reports sizes and degrees, and warns when a feasible point is found
/// outside `{Σx² ≤ R}`. Probes are the caller's `points` followed by
/// deterministic samples from the box `[−2√R, 2√R]^n`.
pub fn validate(pop: &PopInstance, points: &[Vec<Rational>], seed: u64) -> Diagnostics {
    let consts = compute_constants(pop);
    let mut warnings = Vec::new();
    if pop.num_constraints() == 0 {
        warnings.push(
            "no constraints: the feasible set is all of R^n, so bounds refer to the ball Σx² ≤ R only if R is chosen to cover the minimizers".into(),
        );
    }
    let half = crate::rational::to_f64(&consts.sqrt_r) * 2.0;
    let mut rng = SplitMix64::new(seed);
    let sampled = (0..VALIDATE_SAMPLES).map(|_| {
        (0..pop.nvars())
            .map(|_| {
                let t = (rng.next_f64() * 2.0 - 1.0) * half;
                from_f64((t * 1024.0).round() / 1024.0)
            })
            .collect::<Vec<_>>()
    });
    let mut outside = 0usize;
    let mut first: Option<Vec<Rational>> = None;
    for x in points.iter().cloned().chain(sampled) {
        if x.len() != pop.nvars() {
            warnings.push(format!(
                "probe point has {} coordinates, expected {}",
                x.len(),
                pop.nvars()
            ));
            continue;
        }
        let norm: Rational = x.iter().map(|v| v * v).sum();
        if norm > pop.radius_sq && pop.satisfies_constraints(&x).unwrap_or(false) {
            outside += 1;
            first.get_or_insert(x);
        }
    }
    if let Some(x) = first {
        let coords: Vec<String> = x.iter().map(format_rational).collect();
        warnings.push(format!(
            "{outside} feasible probe point(s) lie outside Σx² ≤ {}, e.g. ({}); radius_sq is too small",
            format_rational(&pop.radius_sq),
            coords.join(", ")
        ));
    }
    Diagnostics {
        n: pop.nvars(),
        m: pop.num_constraints(),
        objective_degree: pop.objective.degree().unwrap_or(0),
        constraint_degrees: pop
            .constraints
            .iter()
            .map(|g| g.degree().unwrap_or(0))
            .collect(),
        d: consts.d,
        warnings,
    }
}

/// True when `γ` is at or above the floor.
pub fn gamma_admissible(consts: &PopConstants, pop: &PopInstance, gamma: &Rational) -> bool {
    !(gamma + consts.offset(&pop.radius_sq)).is_negative()
}

pub(crate) fn check_gamma(
    consts: &PopConstants,
    pop: &PopInstance,
    gamma: &Rational,
) -> Result<()> {
    if gamma_admissible(consts, pop, gamma) {
        Ok(())
    } else {
        Err(Error::GammaBelowFloor {
            gamma: gamma.clone(),
            floor: consts.floor(&pop.radius_sq),
        })
    }
}
