use std::path::Path;

use psatz::certifiers::{
    artin_certify, dsos_certify, even_form_nbar, polya_certify, powers_reznick_nbar, r_hat_bound,
    reznick_certify, term_budget, CertKind, DsosMode, Outcome, Verdict,
};
use psatz::conic::Backend;
use psatz::driver::{
    bracket_grid_resolution, run_hierarchy_with_point, HierarchyConfig, LevelStatus,
};
use psatz::oracle::{grid_minimize, sphere_min, OracleReport, GRID_MAX_VARS};
use psatz::pop::{compute_constants, PopInstance};
use psatz::rational::{format_rational, from_f64, to_f64};
use psatz::reduction::{build_f_gamma, build_h, lift_with_margin, perturb_form};
use psatz::Polynomial;
use serde_json::{json, Value};

use crate::{BoundArgs, BudgetArgs, CertifyArgs, Failure, ReduceArgs, Report, SolveArgs};

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))
}

fn read_pop(path: &Path) -> Result<PopInstance, Failure> {
    PopInstance::from_json(&read(path)?)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn read_poly(path: &Path) -> Result<Polynomial, Failure> {
    Polynomial::from_json(&read(path)?)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn opt_str(q: &Option<psatz::Rational>) -> Value {
    q.as_ref()
        .map_or(Value::Null, |q| Value::String(format_rational(q)))
}

fn backend(b: &BudgetArgs) -> Backend {
    let mut be = Backend::default();
    be.budget.max_seconds = b.max_seconds;
    be
}

fn polya_terms(b: &BudgetArgs) -> u64 {
    b.budget_terms.unwrap_or_else(term_budget)
}

fn budget_config(b: &BudgetArgs) -> Value {
    json!({
        "budget_terms": polya_terms(b),
        "max_seconds": b.max_seconds,
        "fatal_budget": b.fatal_budget,
    })
}

pub fn reduce_config(a: &ReduceArgs) -> Value {
    json!({ "gamma": opt_str(&a.gamma) })
}

pub fn reduce(a: &ReduceArgs) -> Result<Report, Failure> {
    let pop = read_pop(&a.pop)?;
    let consts = compute_constants(&pop);
    let reduced = match &a.gamma {
        Some(g) => build_f_gamma(&pop, &consts, g)?,
        None => build_h(&pop, &consts)?,
    };
    let constants = json!({
        "d": consts.d,
        "eta": consts.eta.iter().map(format_rational).collect::<Vec<_>>(),
        "beta": format_rational(&consts.beta),
        "sqrt_r_upper": format_rational(&consts.sqrt_r),
        "sqrt_r_exact": consts.sqrt_r_exact,
        "floor": format_rational(&consts.floor(pop.radius_sq())),
        "big_n": consts.big_n(),
        "big_d": consts.big_d(),
    });
    let mut result = to_value(&reduced);
    result["constants"] = constants;
    Ok(Report {
        result,
        exit_code: 0,
    })
}

pub fn certify_config(a: &CertifyArgs) -> Value {
    json!({
        "cone": a.cone.name(),
        "level": a.level,
        "pop": a.pop,
        "budget": budget_config(&a.budget),
    })
}

fn certify_form(p: &Polynomial, cone: CertKind, r: u32, b: &BudgetArgs) -> psatz::Result<Outcome> {
    let be = backend(b);
    match cone {
        CertKind::Polya => polya_certify(p, r, polya_terms(b)),
        CertKind::Reznick => reznick_certify(p, r, &be),
        CertKind::Artin => artin_certify(p, r, &be),
        CertKind::Dsos => dsos_certify(p, r, DsosMode::Dd, &be),
        CertKind::Sdsos => dsos_certify(p, r, DsosMode::Sdd, &be),
    }
}

pub fn certify(a: &CertifyArgs) -> Result<Report, Failure> {
    let (subject, source) = if a.pop {
        let pop = read_pop(&a.input)?;
        let consts = compute_constants(&pop);
        let h = build_h(&pop, &consts)?.form;
        let test = perturb_form(&h, a.level)?;
        let subject = match a.cone {
            CertKind::Dsos | CertKind::Sdsos => lift_with_margin(&test, a.level)?,
            _ => test,
        };
        (subject, "h")
    } else {
        (read_poly(&a.input)?, "input")
    };
    let outcome = certify_form(&subject, a.cone, a.level, &a.budget)?;
    let exit_code = if a.budget.fatal_budget && outcome.verdict == Verdict::BudgetExceeded {
        4
    } else {
        0
    };
    Ok(Report {
        result: json!({
            "cone": a.cone.name(),
            "level": a.level,
            "subject": source,
            "outcome": to_value(&outcome),
        }),
        exit_code,
    })
}

pub fn solve_config(a: &SolveArgs) -> Value {
    json!({
        "method": a.method.name(),
        "rmin": a.rmin,
        "rmax": a.rmax,
        "epsilon": format_rational(&a.epsilon),
        "bracket": a.bracket.as_ref().map(|(l, u)| [format_rational(l), format_rational(u)]),
        "point": a.point.as_ref().map(|p| p.iter().map(format_rational).collect::<Vec<_>>()),
        "oracle": a.oracle,
        "sequential": a.sequential,
        "budget": budget_config(&a.budget),
    })
}

pub fn solve(a: &SolveArgs) -> Result<Report, Failure> {
    let pop = read_pop(&a.pop)?;
    let mut cfg = HierarchyConfig::new(a.method, a.rmin, a.rmax);
    cfg.epsilon = a.epsilon.clone();
    cfg.brackets = a.bracket.clone();
    cfg.parallel = !a.sequential;
    cfg.settings.backend = backend(&a.budget);
    cfg.settings.polya_terms = polya_terms(&a.budget);
    cfg.validate().map_err(|e| Failure::new(2, e.to_string()))?;
    let res = run_hierarchy_with_point(&pop, &cfg, a.point.as_deref())?;
    let mut result = to_value(&res);
    if a.oracle {
        result["oracle"] = oracle_comparison(
            &pop,
            &res.levels
                .iter()
                .map(|l| to_f64(&l.l_r_eps))
                .collect::<Vec<_>>(),
        )?;
    }
    let completed = res
        .levels
        .iter()
        .any(|l| l.status == LevelStatus::Completed);
    let exceeded = res
        .levels
        .iter()
        .any(|l| l.status == LevelStatus::BudgetExceeded);
    let exit_code = if exceeded && (a.budget.fatal_budget || !completed) {
        4
    } else if completed || exceeded {
        0
    } else {
        1
    };
    Ok(Report { result, exit_code })
}

fn oracle_comparison(pop: &PopInstance, values: &[f64]) -> Result<Value, Failure> {
    if pop.nvars() > GRID_MAX_VARS {
        return Ok(
            json!({ "skipped": format!("grid oracle needs at most {GRID_MAX_VARS} variables") }),
        );
    }
    let rep: OracleReport = grid_minimize(pop, bracket_grid_resolution(pop.nvars()))?;
    let sound = rep
        .estimate
        .map(|est| values.iter().all(|v| *v <= est + 1e-6));
    Ok(json!({ "report": to_value(&rep), "bounds_below_estimate": sound }))
}

pub fn bound_config(a: &BoundArgs) -> Value {
    json!({
        "lambda": opt_str(&a.lambda),
        "even": a.even,
        "beta": opt_str(&a.beta),
        "pop": a.pop,
        "gamma": opt_str(&a.gamma),
        "r0": a.r0,
        "oracle": a.oracle,
        "samples": a.samples,
        "seed": a.seed,
    })
}

pub fn bound(a: &BoundArgs) -> Result<Report, Failure> {
    let result = if a.pop {
        let pop = read_pop(&a.input)?;
        let consts = compute_constants(&pop);
        let gamma = a.gamma.as_ref().expect("clap requires --gamma with --pop");
        let mut v = to_value(&r_hat_bound(&pop, &consts, gamma, a.r0)?);
        if a.oracle {
            v["oracle"] = oracle_comparison(&pop, &[])?;
        }
        v
    } else if let Some(lambda) = &a.lambda {
        to_value(&powers_reznick_nbar(&read_poly(&a.input)?, lambda)?)
    } else if a.even {
        let p = read_poly(&a.input)?;
        let (beta, sampled) = match (&a.beta, a.oracle) {
            (Some(b), _) => (b.clone(), None),
            (None, true) => {
                let rep = sphere_min(&p, a.samples, a.seed)?;
                let est = rep.estimate.unwrap_or(f64::NAN);
                if !(est > 0.0) {
                    return Err(Failure::new(
                        1,
                        format!("sampled sphere minimum {est} is not positive"),
                    ));
                }
                // halved: a sampled minimum only bounds the true one from above
                (from_f64(est / 2.0), Some(rep))
            }
            (None, false) => return Err(Failure::new(2, "--even needs --beta or --oracle")),
        };
        let mut v = to_value(&even_form_nbar(&p, &beta)?);
        if let Some(rep) = sampled {
            v["oracle"] = to_value(&rep);
        }
        v
    } else {
        return Err(Failure::new(
            2,
            "one of --lambda, --even or --pop is required",
        ));
    };
    Ok(Report {
        result,
        exit_code: 0,
    })
}
