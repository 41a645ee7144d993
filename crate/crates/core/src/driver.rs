//! Hierarchy runs: bisection on `γ` at each level, and the running maximum
//! `m_r` of the level values.
//!
//! Bisection only ever raises its lower end to a `γ` that was certified, so
//! every value it returns is either the starting bracket or carries a
//! certificate. Unknown and budget outcomes count as rejections.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::certifiers::{
    artin_certify, dsos_certify, polya_certify, reznick_certify, term_budget, CertKind,
    Certificate, DsosMode, Outcome, Verdict,
};
use crate::conic::Backend;
use crate::error::{Error, Result};
use crate::oracle::grid_minimize;
use crate::pop::{check_gamma, compute_constants, monomial_bound, PopConstants, PopInstance};
use crate::rational::{as_string, int, ratio};
use crate::reduction::{build_f_gamma, build_p_gamma_r, perturb_form};
use crate::Rational;

/// The certifier family driving a hierarchy.
pub type Method = CertKind;

/// Everything a level test needs besides the problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSettings {
    pub backend: Backend,
    /// Term budget for Polyá expansions.
    pub polya_terms: u64,
}

impl Default for LevelSettings {
    fn default() -> Self {
        LevelSettings {
            backend: Backend::default(),
            polya_terms: term_budget(),
        }
    }
}

/// Is `γ` certified at level `r`? Builds `f_γ − (1/r)(Σz²)^D` for the
/// Polyá, Reznick and Artin families and `p_{γ,r}` for dsos/sdsos.
pub fn level_feasible(
    pop: &PopInstance,
    consts: &PopConstants,
    method: Method,
    r: u32,
    gamma: &Rational,
    settings: &LevelSettings,
) -> Result<Outcome> {
    check_gamma(consts, pop, gamma)?;
    let be = &settings.backend;
    match method {
        CertKind::Dsos | CertKind::Sdsos => {
            let mode = if method == CertKind::Dsos {
                DsosMode::Dd
            } else {
                DsosMode::Sdd
            };
            dsos_certify(&build_p_gamma_r(pop, consts, gamma, r)?, r, mode, be)
        }
        _ => {
            let test = perturb_form(&build_f_gamma(pop, consts, gamma)?.form, r)?;
            match method {
                CertKind::Polya => polya_certify(&test, r, settings.polya_terms),
                CertKind::Reznick => reznick_certify(&test, r, be),
                _ => artin_certify(&test, r, be),
            }
        }
    }
}

fn opt_rational<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.collect_str(q),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BisectionStep {
    #[serde(with = "as_string")]
    pub gamma: Rational,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bisection {
    /// Final lower end: the starting `L0` or the last certified midpoint.
    #[serde(with = "as_string")]
    pub value: Rational,
    #[serde(with = "as_string")]
    pub upper: Rational,
    pub trace: Vec<BisectionStep>,
    /// Certificate for `value` when it was raised above `L0`.
    pub certificate: Option<Certificate>,
    /// True when a budget overrun ended the search early.
    pub budget_exceeded: bool,
}

/// Bisection on `[l0, u0]` until `U − L ≤ ε`, which takes exactly
/// `⌈log₂((u0 − l0)/ε)⌉` tests when none exceeds a budget. `test` decides a
/// midpoint.
pub fn bisect<F>(l0: &Rational, u0: &Rational, epsilon: &Rational, mut test: F) -> Result<Bisection>
where
    F: FnMut(&Rational) -> Result<Outcome>,
{
    if l0 >= u0 {
        return Err(Error::InvalidArgument(format!(
            "empty bracket [{l0}, {u0}]"
        )));
    }
    if *epsilon <= int(0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let (mut lo, mut hi) = (l0.clone(), u0.clone());
    let mut out = Bisection {
        value: lo.clone(),
        upper: hi.clone(),
        trace: Vec::new(),
        certificate: None,
        budget_exceeded: false,
    };
    while &hi - &lo > *epsilon {
        let mid = (&lo + &hi) / int(2);
        let outcome = test(&mid)?;
        out.trace.push(BisectionStep {
            gamma: mid.clone(),
            verdict: outcome.verdict,
        });
        match outcome.verdict {
            Verdict::Accept => {
                lo = mid;
                out.certificate = outcome.certificate;
            }
            Verdict::BudgetExceeded => {
                out.budget_exceeded = true;
                break;
            }
            Verdict::Reject | Verdict::Unknown => hi = mid,
        }
    }
    out.value = lo;
    out.upper = hi;
    Ok(out)
}

/// Bisection of one level between `l0 ≥ floor` and `u0`.
#[allow(clippy::too_many_arguments)]
pub fn bisect_level(
    pop: &PopInstance,
    consts: &PopConstants,
    method: Method,
    r: u32,
    l0: &Rational,
    u0: &Rational,
    epsilon: &Rational,
    settings: &LevelSettings,
) -> Result<Bisection> {
    check_gamma(consts, pop, l0)?;
    bisect(l0, u0, epsilon, |g| {
        level_feasible(pop, consts, method, r, g, settings)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpperSource {
    /// Objective at a feasible point supplied by the caller.
    GivenPoint,
    /// Objective at the best feasible grid point.
    GridOracle,
    /// `Σ|c_α| u^{|α|}` over the objective.
    MonomialBound,
    /// Supplied directly.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Brackets {
    #[serde(with = "as_string")]
    pub lower: Rational,
    #[serde(with = "as_string")]
    pub upper: Rational,
    pub upper_source: UpperSource,
}

/// Grid points per axis used for the default upper bracket.
pub fn bracket_grid_resolution(n: usize) -> usize {
    match n {
        1 => 101,
        2 => 41,
        _ => 21,
    }
}

/// `L0 = −β − 1` when that is admissible, else `floor + 1/1000`. `U0` is the
/// objective at a feasible point (given, else found on a grid), else the
/// monomial bound. `U0` is raised to `L0 + 1` if it does not exceed `L0`.
pub fn default_brackets(
    pop: &PopInstance,
    consts: &PopConstants,
    point: Option<&[Rational]>,
) -> Result<Brackets> {
    let floor = consts.floor(pop.radius_sq());
    let natural = -&consts.beta - int(1);
    let lower = if natural >= floor {
        natural
    } else {
        floor + ratio(1, 1000)
    };
    let mut found = None;
    if let Some(x) = point {
        if pop.is_feasible(x)? {
            found = Some((pop.objective().evaluate(x)?, UpperSource::GivenPoint));
        }
    }
    if found.is_none() && pop.nvars() <= crate::oracle::GRID_MAX_VARS {
        let rep = grid_minimize(pop, bracket_grid_resolution(pop.nvars()))?;
        if let Some(v) = rep.exact {
            found = Some((v, UpperSource::GridOracle));
        }
    }
    let (mut upper, upper_source) = found.unwrap_or_else(|| {
        (
            monomial_bound(pop.objective(), &consts.sqrt_r),
            UpperSource::MonomialBound,
        )
    });
    if upper <= lower {
        upper = &lower + int(1);
    }
    Ok(Brackets {
        lower,
        upper,
        upper_source,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HierarchyConfig {
    pub method: Method,
    pub r_min: u32,
    pub r_max: u32,
    #[serde(with = "as_string")]
    pub epsilon: Rational,
    /// Explicit `(L0, U0)`; defaults are computed when absent.
    #[serde(skip)]
    pub brackets: Option<(Rational, Rational)>,
    pub settings: LevelSettings,
    /// Run levels on the rayon pool.
    pub parallel: bool,
}

impl HierarchyConfig {
    pub fn new(method: Method, r_min: u32, r_max: u32) -> Self {
        HierarchyConfig {
            method,
            r_min,
            r_max,
            epsilon: ratio(1, 100),
            brackets: None,
            settings: LevelSettings::default(),
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= int(0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.r_min < 1 {
            return Err(Error::InvalidArgument("r_min must be at least 1".into()));
        }
        if self.r_min > self.r_max {
            return Err(Error::InvalidArgument(format!(
                "r_min {} exceeds r_max {}",
                self.r_min, self.r_max
            )));
        }
        if let Some((l, u)) = &self.brackets {
            if l >= u {
                return Err(Error::InvalidArgument(format!("empty bracket [{l}, {u}]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelStatus {
    Completed,
    BudgetExceeded,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub r: u32,
    #[serde(with = "as_string")]
    pub l_r_eps: Rational,
    /// Running maximum of `l_{i,ε}` over levels `i ≤ r`.
    #[serde(with = "as_string")]
    pub m_r: Rational,
    pub status: LevelStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(serialize_with = "opt_rational")]
    pub final_upper: Option<Rational>,
    pub trace: Vec<BisectionStep>,
    pub certificate: Option<Certificate>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HierarchyResult {
    pub config: HierarchyConfig,
    pub brackets: Brackets,
    pub levels: Vec<LevelRecord>,
}

impl HierarchyResult {
    /// `m_r` at the last level.
    pub fn best(&self) -> Option<&Rational> {
        self.levels.last().map(|l| &l.m_r)
    }
}

fn run_level(
    pop: &PopInstance,
    consts: &PopConstants,
    cfg: &HierarchyConfig,
    br: &Brackets,
    r: u32,
) -> LevelRecord {
    let start = Instant::now();
    let settings = cfg.settings.clone();
    let res = bisect_level(
        pop,
        consts,
        cfg.method,
        r,
        &br.lower,
        &br.upper,
        &cfg.epsilon,
        &settings,
    );
    let wall_seconds = start.elapsed().as_secs_f64();
    match res {
        Ok(b) => LevelRecord {
            r,
            m_r: b.value.clone(),
            l_r_eps: b.value,
            status: if b.budget_exceeded {
                LevelStatus::BudgetExceeded
            } else {
                LevelStatus::Completed
            },
            error: None,
            final_upper: Some(b.upper),
            trace: b.trace,
            certificate: b.certificate,
            wall_seconds,
        },
        Err(e) => LevelRecord {
            r,
            l_r_eps: br.lower.clone(),
            m_r: br.lower.clone(),
            status: LevelStatus::Failed,
            error: Some(e.to_string()),
            final_upper: None,
            trace: Vec::new(),
            certificate: None,
            wall_seconds,
        },
    }
}

/// Levels `r_min..=r_max`, each bisected independently, then `m_r`
/// accumulated in level order.
pub fn run_hierarchy(pop: &PopInstance, config: &HierarchyConfig) -> Result<HierarchyResult> {
    run_hierarchy_with_point(pop, config, None)
}

/// As `run_hierarchy`, using `point` (if feasible) for the upper bracket.
pub fn run_hierarchy_with_point(
    pop: &PopInstance,
    config: &HierarchyConfig,
    point: Option<&[Rational]>,
) -> Result<HierarchyResult> {
    config.validate()?;
    let consts = compute_constants(pop);
    let brackets = match &config.brackets {
        Some((l, u)) => {
            check_gamma(&consts, pop, l)?;
            Brackets {
                lower: l.clone(),
                upper: u.clone(),
                upper_source: UpperSource::Explicit,
            }
        }
        None => default_brackets(pop, &consts, point)?,
    };
    let levels: Vec<u32> = (config.r_min..=config.r_max).collect();
    let mut records: Vec<LevelRecord> = if config.parallel {
        levels
            .par_iter()
            .map(|&r| run_level(pop, &consts, config, &brackets, r))
            .collect()
    } else {
        levels
            .iter()
            .map(|&r| run_level(pop, &consts, config, &brackets, r))
            .collect()
    };
    records.sort_by_key(|rec| rec.r);
    let mut running: Option<Rational> = None;
    for rec in &mut records {
        let m = match running {
            Some(prev) if prev > rec.l_r_eps => prev,
            _ => rec.l_r_eps.clone(),
        };
        rec.m_r = m.clone();
        running = Some(m);
    }
    Ok(HierarchyResult {
        config: config.clone(),
        brackets,
        levels: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifiers::Outcome;
    use crate::poly::Polynomial;

    fn threshold(zero: Rational) -> impl FnMut(&Rational) -> Result<Outcome> {
        move |g: &Rational| {
            let verdict = if *g < zero {
                Verdict::Accept
            } else {
                Verdict::Reject
            };
            Ok(Outcome {
                verdict,
                certificate: None,
                witness: None,
                reason: None,
            })
        }
    }

    #[test]
    fn synthetic_threshold_bisection() {
        let b = bisect(&int(-2), &int(2), &ratio(1, 100), threshold(int(0))).unwrap();
        assert_eq!(b.trace.len(), 9);
        assert!(b.value < int(0) && b.value >= ratio(-1, 100));
    }

    #[test]
    fn never_and_always() {
        let never = |_: &Rational| {
            Ok(Outcome {
                verdict: Verdict::Unknown,
                certificate: None,
                witness: None,
                reason: None,
            })
        };
        let b = bisect(&int(-2), &int(2), &ratio(1, 100), never).unwrap();
        assert_eq!(b.value, int(-2));
        let b = bisect(&int(-2), &int(2), &ratio(1, 100), threshold(int(10))).unwrap();
        assert!(b.value >= int(2) - ratio(1, 100));
        assert!(bisect(&int(1), &int(1), &ratio(1, 100), threshold(int(0))).is_err());
    }

    fn square_pop(constrained: bool) -> PopInstance {
        let x = Polynomial::var(1, 0);
        let g = if constrained {
            vec![&Polynomial::one(1) - &x.pow(2)]
        } else {
            vec![]
        };
        PopInstance::new(x.pow(2), g, int(1)).unwrap()
    }

    #[test]
    fn brackets_for_the_square() {
        let pop = square_pop(false);
        let consts = compute_constants(&pop);
        let br = default_brackets(&pop, &consts, None).unwrap();
        assert_eq!(br.lower, int(-2));
        assert_eq!(br.upper, int(0));
        assert_eq!(br.upper_source, UpperSource::GridOracle);
    }

    #[test]
    fn constant_objective_brackets() {
        let pop = PopInstance::new(Polynomial::constant(1, int(3)), vec![], int(1)).unwrap();
        let consts = compute_constants(&pop);
        let br = default_brackets(&pop, &consts, Some(&[int(0)])).unwrap();
        assert_eq!(br.upper, int(3));
        assert_eq!(br.upper_source, UpperSource::GivenPoint);
        assert!(br.lower < br.upper);
    }

    #[test]
    fn floor_violation_is_an_error() {
        let pop = square_pop(false);
        let consts = compute_constants(&pop);
        let err = level_feasible(
            &pop,
            &consts,
            CertKind::Polya,
            1,
            &int(-5),
            &LevelSettings::default(),
        );
        assert!(matches!(err, Err(Error::GammaBelowFloor { .. })));
    }

    #[test]
    fn hierarchy_bounds_are_sound_and_monotone() {
        let pop = square_pop(true);
        let mut cfg = HierarchyConfig::new(CertKind::Reznick, 1, 2);
        cfg.epsilon = ratio(1, 4);
        let res = run_hierarchy(&pop, &cfg).unwrap();
        assert_eq!(res.levels.len(), 2);
        for w in res.levels.windows(2) {
            assert!(w[0].m_r <= w[1].m_r);
        }
        for rec in &res.levels {
            assert!(rec.l_r_eps <= int(0));
            if rec.l_r_eps > res.brackets.lower {
                let cert = rec.certificate.as_ref().expect("certified value");
                cert.verify(&cfg.settings.backend.tolerances).unwrap();
            }
        }
    }
}
