//! Brute-force ground truth at small scale: grid minimization over the
//! feasible set, sphere sampling of forms, and randomized identity checks.
//! Estimates carry the direction in which they are valid.

pub mod rng;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::pop::PopInstance;
use crate::rational::{ratio, sqrt_upper, to_f64};
use crate::Rational;
use rng::{mix, SplitMix64};

/// Largest dimension `grid_minimize` accepts.
pub const GRID_MAX_VARS: usize = 3;
/// Fewest grid points per axis `grid_minimize` accepts.
pub const GRID_MIN_RESOLUTION: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// The estimate is attained at a feasible point, so it bounds the true
    /// minimum from above.
    UpperBoundOnMin,
    /// Minimum over the drawn samples only.
    MinOnSamples,
}

fn opt_rational<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.collect_str(q),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    /// `None` when no grid point is feasible.
    pub estimate: Option<f64>,
    /// Exact value at the witness when it is a rational point.
    #[serde(serialize_with = "opt_rational")]
    pub exact: Option<Rational>,
    pub witness: Option<Vec<f64>>,
    #[serde(skip)]
    pub exact_witness: Option<Vec<Rational>>,
    pub samples: usize,
    pub resolution: Option<usize>,
    pub direction: Direction,
}

impl OracleReport {
    pub fn infeasible_grid(&self) -> bool {
        self.estimate.is_none()
    }
}

/// Minimum of the objective over the grid points of `[−u, u]^n` that satisfy
/// every constraint and the ball, where `u ≥ √R` is rational. The grid has
/// `resolution` points per axis, endpoints included.
pub fn grid_minimize(pop: &PopInstance, resolution: usize) -> Result<OracleReport> {
    let n = pop.nvars();
    if n > GRID_MAX_VARS {
        return Err(Error::InvalidArgument(format!(
            "grid oracle supports at most {GRID_MAX_VARS} variables, got {n}"
        )));
    }
    if resolution < GRID_MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least {GRID_MIN_RESOLUTION}"
        )));
    }
    let (u, _) = sqrt_upper(pop.radius_sq());
    let steps = (resolution - 1) as i64;
    let axis: Vec<Rational> = (0..resolution as i64)
        .map(|k| &u * ratio(2 * k - steps, steps))
        .collect();
    let mut idx = vec![0usize; n];
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    let mut visited = 0usize;
    loop {
        let point: Vec<Rational> = idx.iter().map(|&k| axis[k].clone()).collect();
        visited += 1;
        if pop.is_feasible(&point)? {
            let v = pop.objective().evaluate(&point)?;
            if best.as_ref().map_or(true, |(b, _)| &v < b) {
                best = Some((v, point));
            }
        }
        // odometer
        let mut i = 0;
        while i < n {
            idx[i] += 1;
            if idx[i] < resolution {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    Ok(match best {
        Some((v, x)) => OracleReport {
            estimate: Some(to_f64(&v)),
            exact: Some(v),
            witness: Some(x.iter().map(to_f64).collect()),
            exact_witness: Some(x),
            samples: visited,
            resolution: Some(resolution),
            direction: Direction::UpperBoundOnMin,
        },
        None => OracleReport {
            estimate: None,
            exact: None,
            witness: None,
            exact_witness: None,
            samples: visited,
            resolution: Some(resolution),
            direction: Direction::UpperBoundOnMin,
        },
    })
}

/// Unit vector number `k` of stream `seed`: the first draw of the stream
/// seeded with `mix(seed + k)`.
pub fn sphere_sample(seed: u64, k: u64, dim: usize) -> Vec<f64> {
    SplitMix64::new(mix(seed.wrapping_add(k))).unit_vector(dim)
}

/// Minimum of a form over `samples` random unit vectors and the `±e_i` axes.
pub fn sphere_min(form: &Polynomial, samples: usize, seed: u64) -> Result<OracleReport> {
    sphere_min_with(form, samples, seed, &[])
}

/// As `sphere_min`, with extra directions (normalized before evaluation).
pub fn sphere_min_with(
    form: &Polynomial,
    samples: usize,
    seed: u64,
    forced: &[Vec<f64>],
) -> Result<OracleReport> {
    form.form_degree()?;
    let n = form.nvars();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: Vec<f64>| -> Result<()> {
        let v = form.evaluate_f64(&x)?;
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, x));
        }
        Ok(())
    };
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            consider(e)?;
        }
    }
    for f in forced {
        let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        if f.len() != n || norm == 0.0 {
            return Err(Error::InvalidArgument(
                "forced direction has the wrong length or is zero".into(),
            ));
        }
        consider(f.iter().map(|v| v / norm).collect())?;
    }
    for k in 0..samples {
        consider(sphere_sample(seed, k as u64, n))?;
    }
    let (v, x) = best.expect("at least the axes are sampled");
    Ok(OracleReport {
        estimate: Some(v),
        exact: None,
        witness: Some(x),
        exact_witness: None,
        samples: samples + 2 * n + forced.len(),
        resolution: None,
        direction: Direction::MinOnSamples,
    })
}

/// Exact evaluation of `a − b` at `trials` random rational points; `true`
/// when every value is zero. Advisory only: canonical equality decides.
pub fn random_eval_equal(a: &Polynomial, b: &Polynomial, trials: usize, seed: u64) -> bool {
    if a.nvars() != b.nvars() {
        return false;
    }
    let diff = a - b;
    let mut g = SplitMix64::new(seed);
    (0..trials).all(|_| {
        let point: Vec<Rational> = (0..diff.nvars())
            .map(|_| ratio(g.next_range(-1000, 1000), g.next_range(1, 1000)))
            .collect();
        diff.evaluate(&point)
            .map(|v| v == Rational::from_integer(0.into()))
            .unwrap_or(false)
    })
}
