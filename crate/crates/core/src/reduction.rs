//! The reduced form `f_γ`, its `γ`-free sibling `h`, and the lifted
//! perturbation `p_{γ,r}`.
//!
//! Reduced variables are ordered `(x_1..x_n, s_0..s_{m+1}, y)`, so `s_j`
//! sits at index `n + j` and `y` at index `n + m + 2`.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{
    embed, even_lift, homogenize, sum_of_even_powers, sum_of_squares, Monomial, Polynomial,
};
use crate::pop::{check_gamma, PopConstants, PopInstance};
use crate::rational::{pow, to_f64};
use crate::Rational;

/// A homogeneous form of degree `2D` in the reduced variables, together with
/// the polynomials whose squares sum to it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReducedForm {
    pub form: Polynomial,
    #[serde(serialize_with = "ser_opt_rational")]
    pub gamma: Option<Rational>,
    pub constituents: Vec<Polynomial>,
    pub variables: Vec<String>,
}

fn ser_opt_rational<S: serde::Serializer>(
    g: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match g {
        Some(q) => s.serialize_some(&q.to_string()),
        None => s.serialize_none(),
    }
}

impl ReducedForm {
    fn from_constituents(
        constituents: Vec<Polynomial>,
        gamma: Option<Rational>,
        variables: Vec<String>,
    ) -> Self {
        let nvars = variables.len();
        let form = constituents
            .iter()
            .fold(Polynomial::zero(nvars), |acc, c| &acc + &(c * c));
        ReducedForm {
            form,
            gamma,
            constituents,
            variables,
        }
    }

    /// `Σ (constituent)²`, recomputed.
    pub fn sum_of_constituent_squares(&self) -> Polynomial {
        self.constituents
            .iter()
            .fold(Polynomial::zero(self.form.nvars()), |acc, c| {
                &acc + &(c * c)
            })
    }
}

/// Names of the reduced variables: `x1..xn, s0..s{m+1}, y`.
pub fn reduced_variable_names(n: usize, m: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("x{i}"))
        .chain((0..=m + 1).map(|j| format!("s{j}")))
        .chain(std::iter::once("y".to_string()))
        .collect()
}

/// Names of the lifted variables: `v1..vN, w1..wN`.
pub fn lifted_variable_names(big_n: usize) -> Vec<String> {
    (1..=big_n)
        .map(|i| format!("v{i}"))
        .chain((1..=big_n).map(|i| format!("w{i}")))
        .collect()
}

struct Layout {
    n: usize,
    m: usize,
    d: u32,
}

impl Layout {
    fn new(consts: &PopConstants) -> Self {
        Layout {
            n: consts.n,
            m: consts.m,
            d: consts.d,
        }
    }

    fn nvars(&self) -> usize {
        self.n + self.m + 3
    }

    fn s(&self, j: usize) -> usize {
        self.n + j
    }

    fn y(&self) -> usize {
        self.n + self.m + 2
    }

    fn var_pow(&self, index: usize, e: u32) -> Polynomial {
        Polynomial::term(
            Monomial::var(self.nvars(), index, e as u16),
            Rational::from_integer(BigInt::from(1)),
        )
    }

    /// `y^{2d} q(x/y)` in the reduced space.
    fn hom(&self, q: &Polynomial) -> Polynomial {
        let mapping: Vec<usize> = (0..self.n).collect();
        let lifted = embed(q, self.nvars(), &mapping).expect("embedding into reduced space");
        homogenize(&lifted, 2 * self.d, self.y()).expect("degree at most 2d")
    }

    /// `s_j² y^{2d−2}`.
    fn slack(&self, j: usize) -> Polynomial {
        &self.var_pow(self.s(j), 2) * &self.var_pow(self.y(), 2 * self.d - 2)
    }

    /// `K^d y^{2d} − (Σx² + Σ_{i=0}^m s_i²)^d − s_{m+1}^{2d}`.
    fn ball_square(&self, k: &Rational) -> Polynomial {
        let mut inner = Polynomial::zero(self.nvars());
        for i in (0..self.n).chain((0..=self.m).map(|j| self.s(j))) {
            inner = &inner + &self.var_pow(i, 2);
        }
        let lead = self.var_pow(self.y(), 2 * self.d).scale(&pow(k, self.d));
        &(&lead - &inner.pow(self.d)) - &self.var_pow(self.s(self.m + 1), 2 * self.d)
    }
}

fn check_consts(pop: &PopInstance, consts: &PopConstants) -> Result<()> {
    if consts.n != pop.nvars() || consts.m != pop.num_constraints() {
        return Err(Error::InvalidArgument(
            "constants were computed for a different problem".into(),
        ));
    }
    Ok(())
}

/// Builds `f_γ`. Errors when `γ` is below `−(R + Ση_i + β)`.
pub fn build_f_gamma(
    pop: &PopInstance,
    consts: &PopConstants,
    gamma: &Rational,
) -> Result<ReducedForm> {
    check_consts(pop, consts)?;
    check_gamma(consts, pop, gamma)?;
    let lay = Layout::new(consts);
    let mut parts = Vec::with_capacity(consts.m + 2);
    let first = &(&lay.var_pow(lay.y(), 2 * lay.d).scale(gamma) - &lay.hom(pop.objective()))
        - &lay.slack(0);
    parts.push(first);
    for (i, g) in pop.constraints().iter().enumerate() {
        parts.push(&lay.hom(g) - &lay.slack(i + 1));
    }
    let k = consts.offset(pop.radius_sq()) + gamma;
    parts.push(lay.ball_square(&k));
    Ok(ReducedForm::from_constituents(
        parts,
        Some(gamma.clone()),
        reduced_variable_names(consts.n, consts.m),
    ))
}

/// Builds the `γ`-free form `h` whose first square is
/// `(y^{2d}p(x/y) + s_0² y^{2d−2})²` and whose ball constant is `R + Ση_i + β`.
/// It coincides with `f_0`.
pub fn build_h(pop: &PopInstance, consts: &PopConstants) -> Result<ReducedForm> {
    check_consts(pop, consts)?;
    let lay = Layout::new(consts);
    let mut parts = Vec::with_capacity(consts.m + 2);
    parts.push(&lay.hom(pop.objective()) + &lay.slack(0));
    for (i, g) in pop.constraints().iter().enumerate() {
        parts.push(&lay.hom(g) - &lay.slack(i + 1));
    }
    parts.push(lay.ball_square(&consts.offset(pop.radius_sq())));
    Ok(ReducedForm::from_constituents(
        parts,
        None,
        reduced_variable_names(consts.n, consts.m),
    ))
}

/// `F − (1/r)(Σ z_i²)^{k}` for a form `F` of degree `2k`.
pub fn perturb_form(form: &Polynomial, r: u32) -> Result<Polynomial> {
    if r == 0 {
        return Err(Error::InvalidArgument("level r must be positive".into()));
    }
    let deg = form.form_degree()?;
    if deg % 2 != 0 {
        return Err(Error::OddDegree(deg));
    }
    let k = deg / 2;
    let shift = sum_of_squares(form.nvars())
        .pow(k)
        .scale(&Rational::new(1.into(), r.into()));
    Ok(form - &shift)
}

/// `F(v² − w²) + (1/2r)(Σ(v_i⁴ + w_i⁴))^{k}` for a form `F` of degree `2k`.
pub fn lift_with_margin(form: &Polynomial, r: u32) -> Result<Polynomial> {
    if r == 0 {
        return Err(Error::InvalidArgument("level r must be positive".into()));
    }
    let deg = form.form_degree()?;
    if deg % 2 != 0 {
        return Err(Error::OddDegree(deg));
    }
    let k = deg / 2;
    let margin =
        sum_of_even_powers(2 * form.nvars(), 4, k)?.scale(&Rational::new(1.into(), (2 * r).into()));
    Ok(&even_lift(form) + &margin)
}

/// `p_{γ,r}(v, w) = f_γ(v² − w²) − (1/r)(Σ(v_i² − w_i²)²)^D + (1/2r)(Σ(v_i⁴ + w_i⁴))^D`.
pub fn build_p_gamma_r(
    pop: &PopInstance,
    consts: &PopConstants,
    gamma: &Rational,
    r: u32,
) -> Result<Polynomial> {
    if r == 0 {
        return Err(Error::InvalidArgument("level r must be positive".into()));
    }
    let f = build_f_gamma(pop, consts, gamma)?;
    lift_with_margin(&perturb_form(&f.form, r)?, r)
}

/// A point `(x̂, s, 1)` where `f_γ` vanishes, built from a feasible `x̂` with
/// `p(x̂) ≤ γ`. Square roots are taken in floating point.
pub fn zero_witness(
    pop: &PopInstance,
    consts: &PopConstants,
    gamma: &Rational,
    x: &[Rational],
) -> Result<Vec<f64>> {
    check_consts(pop, consts)?;
    check_gamma(consts, pop, gamma)?;
    if !pop.is_feasible(x)? {
        return Err(Error::InfeasiblePoint(
            "point violates a constraint or the ball".into(),
        ));
    }
    let px = pop.objective().evaluate(x)?;
    if &px > gamma {
        return Err(Error::InfeasiblePoint(format!(
            "gamma {gamma} is below p(x) = {px}"
        )));
    }
    let lay = Layout::new(consts);
    let mut point = vec![0.0; lay.nvars()];
    for (i, v) in x.iter().enumerate() {
        point[i] = to_f64(v);
    }
    let s0_sq = gamma - &px;
    let mut total: Rational = x.iter().map(|v| v * v).sum::<Rational>() + &s0_sq;
    point[lay.s(0)] = to_f64(&s0_sq).sqrt();
    for (i, g) in pop.constraints().iter().enumerate() {
        let gi = g.evaluate(x)?;
        point[lay.s(i + 1)] = to_f64(&gi).sqrt();
        total += gi;
    }
    let k = consts.offset(pop.radius_sq()) + gamma;
    let last = pow(&k, lay.d) - pow(&total, lay.d);
    if last.is_negative() {
        return Err(Error::InfeasiblePoint(
            "slack bound exceeded; the constants do not bound this point".into(),
        ));
    }
    point[lay.s(lay.m + 1)] = if last.is_zero() {
        0.0
    } else {
        to_f64(&last).powf(1.0 / (2 * lay.d) as f64)
    };
    point[lay.y()] = 1.0;
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pop::compute_constants;
    use crate::rational::{int, ratio};

    fn square_pop() -> PopInstance {
        PopInstance::new(Polynomial::var(1, 0).pow(2), vec![], int(1)).unwrap()
    }

    fn v(i: usize) -> Polynomial {
        Polynomial::var(4, i)
    }

    #[test]
    fn f_gamma_for_unconstrained_square() {
        let pop = square_pop();
        let c = compute_constants(&pop);
        // variables (x, s0, s1, y); R + β = 2
        let (x, s0, s1, y) = (v(0), v(1), v(2), v(3));
        let f = build_f_gamma(&pop, &c, &int(-1)).unwrap();
        let a = &(&-&y.pow(2) - &x.pow(2)) - &s0.pow(2);
        let b = &(&(&y.pow(2) - &x.pow(2)) - &s0.pow(2)) - &s1.pow(2);
        assert_eq!(f.form, &(&a * &a) + &(&b * &b));
        assert_eq!(f.form.form_degree().unwrap(), 4);

        let f0 = build_f_gamma(&pop, &c, &int(0)).unwrap();
        let a = &-&x.pow(2) - &s0.pow(2);
        let b = &(&(&y.pow(2).scale(&int(2)) - &x.pow(2)) - &s0.pow(2)) - &s1.pow(2);
        assert_eq!(f0.form, &(&a * &a) + &(&b * &b));
    }

    #[test]
    fn floor_is_enforced() {
        let pop = square_pop();
        let c = compute_constants(&pop);
        assert!(build_f_gamma(&pop, &c, &int(-2)).is_ok());
        assert!(matches!(
            build_f_gamma(&pop, &c, &ratio(-201, 100)),
            Err(Error::GammaBelowFloor { .. })
        ));
    }

    #[test]
    fn constituents_square_to_form() {
        let g = &Polynomial::one(1) - &Polynomial::var(1, 0).pow(2);
        let p = &Polynomial::var(1, 0).pow(3) - &Polynomial::var(1, 0);
        let pop = PopInstance::new(p, vec![g], int(1)).unwrap();
        let c = compute_constants(&pop);
        let f = build_f_gamma(&pop, &c, &ratio(-1, 3)).unwrap();
        assert_eq!(f.form, f.sum_of_constituent_squares());
        assert_eq!(f.form.form_degree().unwrap(), 8);
        assert_eq!(f.form.nvars(), 5);
    }

    #[test]
    fn h_is_f_at_zero() {
        let g = &Polynomial::one(1) - &Polynomial::var(1, 0).pow(2);
        let pop = PopInstance::new(Polynomial::var(1, 0), vec![g], int(1)).unwrap();
        let c = compute_constants(&pop);
        let h = build_h(&pop, &c).unwrap();
        assert_eq!(h.form, build_f_gamma(&pop, &c, &int(0)).unwrap().form);
        assert!(h.gamma.is_none());
    }

    #[test]
    fn p_gamma_r_is_an_even_form() {
        let pop = square_pop();
        let c = compute_constants(&pop);
        let p = build_p_gamma_r(&pop, &c, &int(-1), 1).unwrap();
        assert!(p.is_even_form().unwrap());
        assert_eq!(p.degree(), Some(8));
        let f = build_f_gamma(&pop, &c, &int(-1)).unwrap().form;
        let e1 = [int(1), int(0), int(0), int(0)];
        let mut lifted_pt = e1.to_vec();
        lifted_pt.extend([int(0), int(0), int(0), int(0)]);
        let expected = f.evaluate(&e1).unwrap() - int(1) + ratio(1, 2);
        assert_eq!(p.evaluate(&lifted_pt).unwrap(), expected);
        assert!(build_p_gamma_r(&pop, &c, &int(-1), 0).is_err());
    }

    #[test]
    fn zero_witness_vanishes() {
        let pop = square_pop();
        let c = compute_constants(&pop);
        let w = zero_witness(&pop, &c, &int(0), &[int(0)]).unwrap();
        assert_eq!(w[0], 0.0);
        assert_eq!(w[1], 0.0);
        assert!((w[2] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(w[3], 1.0);
        let f = build_f_gamma(&pop, &c, &int(0)).unwrap();
        assert!(f.form.evaluate_f64(&w).unwrap().abs() < 1e-9);
    }

    #[test]
    fn zero_witness_rejects_bad_points() {
        let pop = square_pop();
        let c = compute_constants(&pop);
        assert!(zero_witness(&pop, &c, &int(0), &[int(2)]).is_err());
        assert!(zero_witness(&pop, &c, &int(-1), &[int(0)]).is_err());
    }
}
