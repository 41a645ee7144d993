//! Phase-one primal-dual interior-point method on a standard-form problem
//! with nonnegative scalars and PSD blocks.
//!
//! Feasibility of `A(x, X) = b` is posed as `min τ` subject to
//! `A(x, X) + τ r₀ = b` with `r₀ = b − A(1, I)`, which `(x, X, τ) = (1, I, 1)`
//! satisfies. Iterates follow the HKM direction with Mehrotra's
//! predictor-corrector. Whenever `X − τI ⪰ 0` and `x ≥ τ`, the point
//! `(X − τI)/(1 − τ)` solves the original system and the solve stops early.
//! When the phase-one optimum stays positive, the dual `y` satisfies
//! `−Aᵀy ⪰ 0` and `bᵀy > 0`, a Farkas certificate.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::dense::Factor;

/// Constraint data in standard form. Row `k` reads
/// `Σ_j lp_cols[j][k]·x_j + Σ_b Σ_{(p,q)} a·X_b[p,q] = b_k` where each
/// off-diagonal pair `(p, q)`, `p < q`, is listed once.
#[derive(Clone, Debug, Default)]
pub struct StdForm {
    pub rows: usize,
    pub lp_cols: Vec<Vec<(usize, f64)>>,
    pub blocks: Vec<StdBlock>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct StdBlock {
    pub size: usize,
    /// `(row, p, q, a)` with `p ≤ q`.
    pub entries: Vec<(usize, usize, usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct IpmSettings {
    pub max_iterations: usize,
    pub max_seconds: Option<f64>,
    pub equality_tolerance: f64,
    pub psd_threshold: f64,
    pub infeasibility_margin: f64,
}

#[derive(Clone, Debug)]
pub enum IpmOutcome {
    Feasible {
        x: Vec<f64>,
        blocks: Vec<DMatrix<f64>>,
        iterations: usize,
    },
    Infeasible {
        y: Vec<f64>,
        dual_objective: f64,
        min_dual_slack: f64,
        iterations: usize,
    },
    Unknown {
        reason: String,
        iterations: usize,
        tau: f64,
    },
}

struct Scaled {
    form: StdForm,
    row_scale: Vec<f64>,
    b_scale: f64,
}

fn scale(form: &StdForm) -> Scaled {
    let mut form = form.clone();
    let mut norm2 = vec![0.0f64; form.rows];
    for col in &form.lp_cols {
        for &(k, a) in col {
            norm2[k] += a * a;
        }
    }
    for blk in &form.blocks {
        for &(k, p, q, a) in &blk.entries {
            norm2[k] += if p == q { a * a } else { a * a / 2.0 };
        }
    }
    let row_scale: Vec<f64> = norm2
        .iter()
        .map(|&n| if n > 0.0 { 1.0 / n.sqrt() } else { 1.0 })
        .collect();
    for col in &mut form.lp_cols {
        for e in col.iter_mut() {
            e.1 *= row_scale[e.0];
        }
    }
    for blk in &mut form.blocks {
        for e in blk.entries.iter_mut() {
            e.3 *= row_scale[e.0];
        }
    }
    for (k, bk) in form.b.iter_mut().enumerate() {
        *bk *= row_scale[k];
    }
    let b_scale = form.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let b_scale = if b_scale > 0.0 { b_scale } else { 1.0 };
    for bk in form.b.iter_mut() {
        *bk /= b_scale;
    }
    Scaled {
        form,
        row_scale,
        b_scale,
    }
}

impl StdForm {
    fn apply(&self, x: &[f64], xs: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.rows);
        for (j, col) in self.lp_cols.iter().enumerate() {
            for &(k, a) in col {
                out[k] += a * x[j];
            }
        }
        for (blk, m) in self.blocks.iter().zip(xs) {
            for &(k, p, q, a) in &blk.entries {
                out[k] += a * m[(p, q)];
            }
        }
        out
    }

    /// `Aᵀy`: LP part and one symmetric matrix per block.
    fn adjoint(&self, y: &DVector<f64>) -> (Vec<f64>, Vec<DMatrix<f64>>) {
        let lp = self
            .lp_cols
            .iter()
            .map(|col| col.iter().map(|&(k, a)| a * y[k]).sum())
            .collect();
        let mats = self
            .blocks
            .iter()
            .map(|blk| {
                let mut m = DMatrix::zeros(blk.size, blk.size);
                for &(k, p, q, a) in &blk.entries {
                    if p == q {
                        m[(p, p)] += a * y[k];
                    } else {
                        m[(p, q)] += 0.5 * a * y[k];
                        m[(q, p)] += 0.5 * a * y[k];
                    }
                }
                m
            })
            .collect();
        (lp, mats)
    }

    /// Schur matrix `M_kl = Σ_b tr(A_k X A_l Z) + Σ_j d_j a_kj a_lj`.
    fn schur(&self, xs: &[DMatrix<f64>], zs: &[DMatrix<f64>], d: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::zeros(self.rows, self.rows);
        for (j, col) in self.lp_cols.iter().enumerate() {
            for &(k, a) in col {
                for &(l, c) in col {
                    m[(k, l)] += d[j] * a * c;
                }
            }
        }
        for ((blk, x), z) in self.blocks.iter().zip(xs).zip(zs) {
            let e = &blk.entries;
            for (u, &(k, p, q, a)) in e.iter().enumerate() {
                for (v, &(l, i, j, c)) in e.iter().enumerate().skip(u) {
                    let t = 0.25
                        * (x[(q, i)] * z[(j, p)]
                            + x[(q, j)] * z[(i, p)]
                            + x[(p, i)] * z[(j, q)]
                            + x[(p, j)] * z[(i, q)]);
                    let val = a * c * t;
                    m[(k, l)] += val;
                    if u != v {
                        m[(l, k)] += val;
                    }
                }
            }
        }
        m
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Largest `α` keeping `X + αΔX ⪰ 0`.
fn max_step_psd(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(linv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let w = &linv * dx * linv.transpose();
    let lam = SymmetricEigen::new(sym(&w)).eigenvalues.min();
    if lam < 0.0 {
        -1.0 / lam
    } else {
        f64::INFINITY
    }
}

fn max_step_lp(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// Cholesky factor of `m`, with a growing ridge if `m` is numerically
/// singular.
fn factor_spd(m: &DMatrix<f64>) -> Option<Factor> {
    let diag_max = m.diagonal().amax().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..8 {
        let mut mm = m.clone();
        if reg > 0.0 {
            for i in 0..mm.nrows() {
                mm[(i, i)] += reg;
            }
        }
        if let Some(f) = Factor::new(mm) {
            return Some(f);
        }
        reg = if reg == 0.0 {
            1e-14 * diag_max
        } else {
            reg * 100.0
        };
    }
    None
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

struct Point {
    x: Vec<f64>,
    s: Vec<f64>,
    xs: Vec<DMatrix<f64>>,
    ss: Vec<DMatrix<f64>>,
    y: DVector<f64>,
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dxs: Vec<DMatrix<f64>>,
    dss: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
}

pub fn solve(form: &StdForm, settings: &IpmSettings) -> IpmOutcome {
    let start = Instant::now();
    let sc = scale(form);
    let f = &sc.form;
    let nlp = f.lp_cols.len();

    // phase-one column r0 = b − A(1, I)
    let ones = vec![1.0; nlp];
    let eyes: Vec<DMatrix<f64>> = f
        .blocks
        .iter()
        .map(|b| DMatrix::identity(b.size, b.size))
        .collect();
    let bvec = DVector::from_vec(f.b.clone());
    let r0 = &bvec - f.apply(&ones, &eyes);
    if r0.amax() <= 1e-15 {
        return finish_feasible(form, &sc, ones, eyes, 0, settings).unwrap_or_else(|reason| {
            IpmOutcome::Unknown {
                reason,
                iterations: 0,
                tau: 0.0,
            }
        });
    }
    let mut full = f.clone();
    full.lp_cols.push(
        r0.iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(k, &v)| (k, v))
            .collect(),
    );
    let tau_col = nlp;
    let ntot = nlp + 1;
    let mut cost = vec![0.0; ntot];
    cost[tau_col] = 1.0;
    let degree = (ntot + f.blocks.iter().map(|b| b.size).sum::<usize>()) as f64;

    let mut pt = Point {
        x: vec![1.0; ntot],
        s: vec![1.0; ntot],
        xs: eyes.clone(),
        ss: eyes.clone(),
        y: DVector::zeros(f.rows),
    };

    let mut slow_steps = 0;
    for iter in 0..settings.max_iterations {
        if let Some(limit) = settings.max_seconds {
            if start.elapsed().as_secs_f64() > limit {
                return IpmOutcome::Unknown {
                    reason: "time limit".into(),
                    iterations: iter,
                    tau: pt.x[tau_col],
                };
            }
        }
        let tau = pt.x[tau_col];

        // early exit: shift out the phase-one column
        let min_x = pt.x[..nlp].iter().cloned().fold(f64::INFINITY, f64::min);
        let min_lam = pt.xs.iter().map(min_eig).fold(f64::INFINITY, f64::min);
        if tau < 1.0 && min_x >= tau && min_lam >= tau {
            let x: Vec<f64> = pt.x[..nlp]
                .iter()
                .map(|v| (v - tau) / (1.0 - tau))
                .collect();
            let xs: Vec<DMatrix<f64>> = pt
                .xs
                .iter()
                .map(|m| (m - DMatrix::identity(m.nrows(), m.nrows()) * tau) / (1.0 - tau))
                .collect();
            if let Ok(out) = finish_feasible(form, &sc, x, xs, iter, settings) {
                return out;
            }
        }
        if tau * r0.amax() < 1e-3 * settings.equality_tolerance / sc.b_scale.max(1.0) {
            let x = pt.x[..nlp].to_vec();
            if let Ok(out) = finish_feasible(form, &sc, x, pt.xs.clone(), iter, settings) {
                return out;
            }
        }

        // residuals
        let rp = &bvec - full.apply(&pt.x, &pt.xs);
        let (aty_lp, aty_m) = full.adjoint(&pt.y);
        let rd_lp: Vec<f64> = (0..ntot).map(|j| cost[j] - aty_lp[j] - pt.s[j]).collect();
        let rd_m: Vec<DMatrix<f64>> = aty_m.iter().zip(&pt.ss).map(|(a, s)| -a - s).collect();
        let comp: f64 = pt.x.iter().zip(&pt.s).map(|(a, b)| a * b).sum::<f64>()
            + pt.xs
                .iter()
                .zip(&pt.ss)
                .map(|(a, b)| inner(a, b))
                .sum::<f64>();
        let mu = comp / degree;
        let dual_res = rd_lp
            .iter()
            .map(|v| v.abs())
            .chain(rd_m.iter().map(|m| m.amax()))
            .fold(0.0, f64::max);
        let dual_obj = bvec.dot(&pt.y);

        // infeasibility: converged phase one with a positive optimum
        if dual_res < 1e-9 && (tau - dual_obj).abs() <= 1e-6 * tau.max(1e-12) + 1e-12 && mu < 1e-10
        {
            if dual_obj >= settings.infeasibility_margin {
                let (lp, mats) = f.adjoint(&pt.y);
                let min_slack = lp
                    .iter()
                    .map(|v| -v)
                    .chain(mats.iter().map(|m| min_eig(&(-m))))
                    .fold(f64::INFINITY, f64::min);
                let y: Vec<f64> = pt.y.iter().zip(&sc.row_scale).map(|(v, r)| v * r).collect();
                return IpmOutcome::Infeasible {
                    y,
                    dual_objective: dual_obj * sc.b_scale,
                    min_dual_slack: min_slack,
                    iterations: iter,
                };
            }
            return IpmOutcome::Unknown {
                reason: format!("phase-one optimum {tau:.3e} is within the infeasibility margin"),
                iterations: iter,
                tau,
            };
        }

        let zs: Vec<DMatrix<f64>> = match pt
            .ss
            .iter()
            .map(|s| Cholesky::new(s.clone()).map(|c| c.inverse()))
            .collect::<Option<Vec<_>>>()
        {
            Some(z) => z,
            None => {
                return IpmOutcome::Unknown {
                    reason: "dual slack lost definiteness".into(),
                    iterations: iter,
                    tau,
                }
            }
        };
        let dscale: Vec<f64> = pt.x.iter().zip(&pt.s).map(|(a, b)| a / b).collect();
        let Some(schur) = factor_spd(&full.schur(&pt.xs, &zs, &dscale)) else {
            return IpmOutcome::Unknown {
                reason: "Schur complement is singular".into(),
                iterations: iter,
                tau,
            };
        };

        let direction = |sigma_mu: f64, corr: Option<&Direction>| -> Option<Direction> {
            // G = σμZ − X − sym(Corr·Z), g = σμ/s − x − corr/s
            let g_lp: Vec<f64> = (0..ntot)
                .map(|j| {
                    let c = corr.map_or(0.0, |d| d.dx[j] * d.ds[j]);
                    (sigma_mu - c) / pt.s[j] - pt.x[j]
                })
                .collect();
            let g_m: Vec<DMatrix<f64>> = (0..pt.xs.len())
                .map(|b| {
                    let mut g = &zs[b] * sigma_mu - &pt.xs[b];
                    if let Some(d) = corr {
                        g -= sym(&(&d.dxs[b] * &d.dss[b] * &zs[b]));
                    }
                    g
                })
                .collect();
            let xrz_lp: Vec<f64> = (0..ntot).map(|j| dscale[j] * rd_lp[j]).collect();
            let xrz_m: Vec<DMatrix<f64>> = (0..pt.xs.len())
                .map(|b| sym(&(&pt.xs[b] * &rd_m[b] * &zs[b])))
                .collect();
            let rhs = &rp - full.apply(&g_lp, &g_m) + full.apply(&xrz_lp, &xrz_m);
            let dy = schur.solve(&rhs)?;
            let (ady_lp, ady_m) = full.adjoint(&dy);
            let ds: Vec<f64> = (0..ntot).map(|j| rd_lp[j] - ady_lp[j]).collect();
            let dss: Vec<DMatrix<f64>> = (0..pt.xs.len()).map(|b| &rd_m[b] - &ady_m[b]).collect();
            let dx: Vec<f64> = (0..ntot).map(|j| g_lp[j] - dscale[j] * ds[j]).collect();
            let dxs: Vec<DMatrix<f64>> = (0..pt.xs.len())
                .map(|b| &g_m[b] - sym(&(&pt.xs[b] * &dss[b] * &zs[b])))
                .collect();
            Some(Direction {
                dx,
                ds,
                dxs,
                dss,
                dy,
            })
        };

        let steps = |d: &Direction| -> (f64, f64) {
            let ap = pt
                .xs
                .iter()
                .zip(&d.dxs)
                .map(|(x, dx)| max_step_psd(x, dx))
                .fold(max_step_lp(&pt.x, &d.dx), f64::min);
            let ad = pt
                .ss
                .iter()
                .zip(&d.dss)
                .map(|(s, ds)| max_step_psd(s, ds))
                .fold(max_step_lp(&pt.s, &d.ds), f64::min);
            (ap, ad)
        };

        let Some(aff) = direction(0.0, None) else {
            return IpmOutcome::Unknown {
                reason: "Schur complement is singular".into(),
                iterations: iter,
                tau,
            };
        };
        let (ap, ad) = steps(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let comp_aff: f64 = (0..ntot)
            .map(|j| (pt.x[j] + ap * aff.dx[j]) * (pt.s[j] + ad * aff.ds[j]))
            .sum::<f64>()
            + (0..pt.xs.len())
                .map(|b| {
                    inner(
                        &(&pt.xs[b] + &aff.dxs[b] * ap),
                        &(&pt.ss[b] + &aff.dss[b] * ad),
                    )
                })
                .sum::<f64>();
        let sigma = ((comp_aff / degree) / mu).clamp(0.0, 1.0).powi(3);
        let Some(dir) = direction(sigma * mu, Some(&aff)) else {
            return IpmOutcome::Unknown {
                reason: "Schur complement is singular".into(),
                iterations: iter,
                tau,
            };
        };
        let (ap, ad) = steps(&dir);
        let ap = (0.95 * ap).min(1.0);
        let ad = (0.95 * ad).min(1.0);
        if ap < 1e-8 && ad < 1e-8 {
            slow_steps += 1;
            if slow_steps > 3 {
                return IpmOutcome::Unknown {
                    reason: "step length stalled".into(),
                    iterations: iter,
                    tau,
                };
            }
        } else {
            slow_steps = 0;
        }
        for j in 0..ntot {
            pt.x[j] += ap * dir.dx[j];
            pt.s[j] += ad * dir.ds[j];
        }
        for b in 0..pt.xs.len() {
            pt.xs[b] = sym(&(&pt.xs[b] + &dir.dxs[b] * ap));
            pt.ss[b] = sym(&(&pt.ss[b] + &dir.dss[b] * ad));
        }
        pt.y += &dir.dy * ad;
    }
    IpmOutcome::Unknown {
        reason: "iteration limit".into(),
        iterations: settings.max_iterations,
        tau: pt.x.last().copied().unwrap_or(0.0),
    }
}

/// Polishes a candidate in scaled units, maps it back and checks it against
/// the unscaled rows.
fn finish_feasible(
    original: &StdForm,
    sc: &Scaled,
    mut x: Vec<f64>,
    mut xs: Vec<DMatrix<f64>>,
    iterations: usize,
    settings: &IpmSettings,
) -> Result<IpmOutcome, String> {
    let f = &sc.form;
    let bvec = DVector::from_vec(f.b.clone());
    for _ in 0..3 {
        let res = &bvec - f.apply(&x, &xs);
        if res.amax() * sc.b_scale < 1e-3 * settings.equality_tolerance {
            break;
        }
        // least-norm correction in the metric of the current point:
        // ΔX = X (Aᵀδ) X, Δx = x² aᵀδ
        let d: Vec<f64> = x.iter().map(|v| v * v).collect();
        let m = f.schur(&xs, &xs, &d);
        let Some(delta) = factor_spd(&m).and_then(|f| f.solve(&res)) else {
            break;
        };
        let (lp, mats) = f.adjoint(&delta);
        for j in 0..x.len() {
            x[j] += d[j] * lp[j];
        }
        for (b, mat) in mats.iter().enumerate() {
            xs[b] = sym(&(&xs[b] + &xs[b] * mat * &xs[b]));
        }
    }
    // back to the caller's units
    let x: Vec<f64> = x.iter().map(|v| (v * sc.b_scale).max(0.0)).collect();
    let xs: Vec<DMatrix<f64>> = xs.iter().map(|m| m * sc.b_scale).collect();
    let residual = (DVector::from_vec(original.b.clone()) - original.apply(&x, &xs)).amax();
    if residual > settings.equality_tolerance {
        return Err(format!("residual {residual:.3e} after polishing"));
    }
    for m in &xs {
        let scale = m.amax().max(1.0);
        if min_eig(m) < settings.psd_threshold * scale {
            return Err("polished block left the cone".into());
        }
    }
    Ok(IpmOutcome::Feasible {
        x,
        blocks: xs,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> IpmSettings {
        IpmSettings {
            max_iterations: 100,
            max_seconds: None,
            equality_tolerance: 1e-8,
            psd_threshold: -1e-9,
            infeasibility_margin: 1e-7,
        }
    }

    #[test]
    fn lp_feasible() {
        // x0 + x1 = 3, x0 − x1 = 1
        let form = StdForm {
            rows: 2,
            lp_cols: vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, -1.0)]],
            blocks: vec![],
            b: vec![3.0, 1.0],
        };
        match solve(&form, &settings()) {
            IpmOutcome::Feasible { x, .. } => {
                assert!((x[0] - 2.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lp_infeasible() {
        // x0 + x1 = −1 with x ≥ 0
        let form = StdForm {
            rows: 1,
            lp_cols: vec![vec![(0, 1.0)], vec![(0, 1.0)]],
            blocks: vec![],
            b: vec![-1.0],
        };
        match solve(&form, &settings()) {
            IpmOutcome::Infeasible { dual_objective, .. } => assert!(dual_objective > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sdp_feasible_on_boundary() {
        // X 2×2 PSD with X00 = 1, X11 = 1, X01 = 1 (rank one)
        let form = StdForm {
            rows: 3,
            lp_cols: vec![],
            blocks: vec![StdBlock {
                size: 2,
                entries: vec![(0, 0, 0, 1.0), (1, 1, 1, 1.0), (2, 0, 1, 2.0)],
            }],
            b: vec![1.0, 1.0, 2.0],
        };
        match solve(&form, &settings()) {
            IpmOutcome::Feasible { blocks, .. } => {
                let m = &blocks[0];
                assert!((m[(0, 1)] - 1.0).abs() < 1e-8);
                assert!(min_eig(m) > -1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sdp_infeasible() {
        // X00 = 1, X11 = 1, X01 = 2 is not PSD
        let form = StdForm {
            rows: 3,
            lp_cols: vec![],
            blocks: vec![StdBlock {
                size: 2,
                entries: vec![(0, 0, 0, 1.0), (1, 1, 1, 1.0), (2, 0, 1, 2.0)],
            }],
            b: vec![1.0, 1.0, 4.0],
        };
        assert!(matches!(
            solve(&form, &settings()),
            IpmOutcome::Infeasible { .. }
        ));
    }
}
