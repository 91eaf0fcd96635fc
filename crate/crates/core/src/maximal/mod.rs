//! Maximal norms `‖sup⁺ x_n‖_p` of finite positive sequences.
//!
//! For `x_n ⪰ 0` the norm equals `inf{‖a‖_p : a ⪰ x_n ∀n}`. Every feasible `a`
//! bounds it from above; every family `y_n ⪰ 0` bounds it from below through
//! `Σ τ(x_n y_n) ≤ τ(a Σ y_n) ≤ ‖a‖_p ‖Σ y_n‖_{p'}`. The solvers return both
//! bounds, so each result carries its own certificate.
//!
//! Both the objective `τ(a^p)` and the constraints split over the blocks of `M`,
//! so the program is solved block by block and the certificates are reassembled.

mod ergodic;
mod oracle;

pub use ergodic::{
    ergodic_averages, maximal_ergodic_report, mean_ergodic_projection, two_sided_averages,
    linf_contraction_check, projection_distances, ErgodicOptions, ErgodicReport, LinfReport,
    ProfilePoint, ProjectionOptions, CONDITION_LIMIT,
};
pub use oracle::{oracle_commuting, oracle_grid_2x2, GridOracleResult, DEFAULT_GRID};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{conjugate_exponent, AlgElement, FiniteVNA};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Log-barrier path following with Newton steps.
    Barrier,
    /// Projected gradient with Dykstra projections and Armijo backtracking.
    ProjectedGradient,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub method: Method,
    /// Stop once `(upper − lower) ≤ gap_tol · max(1, upper)`.
    pub gap_tol: f64,
    /// Newton steps (barrier) or gradient steps (projected gradient) per block.
    pub max_iter: usize,
    /// Inputs may have eigenvalues down to `−psd_tol · max(1, ‖x_n‖)`; they are
    /// clipped to their positive parts.
    pub psd_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Barrier,
            gap_tol: 1e-9,
            max_iter: 10_000,
            psd_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MaximalNormResult {
    /// `‖a_star‖_p`.
    pub upper: f64,
    /// `Σ τ(x_n y_n) / ‖Σ y_n‖_{p'}` for the returned `dual`.
    pub lower: f64,
    pub a_star: AlgElement,
    /// Dual certificate `y_n ⪰ 0`, one per input.
    pub dual: Vec<AlgElement>,
    /// `min_n λ_min(a_star − x_n)`; non-negative means exactly feasible.
    pub feasibility_slack: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: Method,
}

impl MaximalNormResult {
    pub fn gap(&self) -> f64 {
        (self.upper - self.lower).max(0.0)
    }

    pub fn relative_gap(&self) -> f64 {
        self.gap() / self.upper.max(1.0)
    }
}

/// The lower bound `Σ τ(x_n y_n) / ‖Σ y_n‖_{p'}` certified by `ys ⪰ 0`.
pub fn dual_bound(m: &FiniteVNA, xs: &[AlgElement], ys: &[AlgElement], p: f64) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} elements but {} dual points", xs.len(), ys.len())));
    }
    for y in ys {
        m.check(y)?;
        if !y.is_psd(1e-12) {
            return Err(Error::Domain("dual points must be positive".into()));
        }
    }
    Ok(dual_bound_unchecked(m, xs, ys, p))
}

fn dual_bound_unchecked(m: &FiniteVNA, xs: &[AlgElement], ys: &[AlgElement], p: f64) -> f64 {
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| m.trace_unchecked(&(x * y)).re).sum();
    let mut total = m.zeros();
    for y in ys {
        total = &total + y;
    }
    let den = m.lp_norm_unchecked(&total.hermitian_part(), conjugate_exponent(p));
    if den > 0.0 {
        (num / den).max(0.0)
    } else {
        0.0
    }
}

/// Computes `‖sup⁺ x_n‖_p` with primal and dual bounds.
pub fn maximal_norm_pos(
    m: &FiniteVNA,
    xs: &[AlgElement],
    p: f64,
    opts: &SolverOptions,
) -> Result<MaximalNormResult> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("maximal norm needs 1 < p < ∞, got {p}")));
    }
    if xs.is_empty() {
        return Err(Error::Domain("maximal norm of an empty sequence".into()));
    }
    let mut clipped = Vec::with_capacity(xs.len());
    for (i, x) in xs.iter().enumerate() {
        m.check(x)?;
        let scale = x.norm_inf().max(1.0);
        if !x.is_hermitian(opts.psd_tol) || x.hermitian_part().min_eigenvalue() < -opts.psd_tol * scale {
            return Err(Error::Domain(format!("element {i} is not positive")));
        }
        clipped.push(m.funcalc_tol(&x.hermitian_part(), |v| v.max(0.0), 0.0)?);
    }
    let xs = clipped;

    let mut a_blocks = Vec::with_capacity(m.num_blocks());
    let mut y_blocks: Vec<Vec<CMat>> = Vec::with_capacity(m.num_blocks());
    let mut iterations = 0;
    let mut converged = true;
    for k in 0..m.num_blocks() {
        let block_xs: Vec<CMat> = xs.iter().map(|x| x.block(k).clone()).collect();
        let sol = match opts.method {
            Method::Barrier => barrier::solve(&block_xs, p, opts),
            Method::ProjectedGradient => projected::solve(&block_xs, p, opts),
        };
        iterations += sol.iterations;
        converged &= sol.converged;
        a_blocks.push(sol.a);
        y_blocks.push(sol.y);
    }

    // Per-block duals are normalized to ‖Σ_n y_{n,k}‖_{p'} = 1; weighting block k by
    // L_k^{p−1} makes the assembled ratio equal (Σ_k w_k L_k^p)^{1/p}.
    let pp = conjugate_exponent(p);
    let mut scales = Vec::with_capacity(m.num_blocks());
    for (k, ys) in y_blocks.iter_mut().enumerate() {
        let total = ys.iter().fold(CMat::zeros(m.dims()[k], m.dims()[k]), |acc, y| acc + y);
        let norm = schatten_psd(&total, pp);
        let num: f64 = ys
            .iter()
            .zip(&xs)
            .map(|(y, x)| (x.block(k) * y).trace().re)
            .sum();
        if norm > 0.0 && num > 0.0 {
            for y in ys.iter_mut() {
                *y /= c(norm);
            }
            scales.push((num / norm).powf(p - 1.0));
        } else {
            scales.push(0.0);
        }
    }
    let dual: Vec<AlgElement> = (0..xs.len())
        .map(|n| {
            AlgElement::from_blocks(
                y_blocks
                    .iter()
                    .zip(&scales)
                    .map(|(ys, &s)| linalg::hermitian_part(&ys[n]) * c(s))
                    .collect(),
            )
        })
        .collect();

    let a_star = AlgElement::from_blocks(a_blocks);
    let upper = m.lp_norm_unchecked(&a_star, p);
    let lower = dual_bound_unchecked(m, &xs, &dual, p).min(upper);
    let feasibility_slack = xs
        .iter()
        .map(|x| (&a_star - x).min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let converged = converged && (upper - lower) <= opts.gap_tol.max(1e-14) * upper.max(1.0) * 10.0;
    Ok(MaximalNormResult {
        upper,
        lower,
        a_star,
        dual,
        feasibility_slack,
        iterations,
        converged,
        method: opts.method,
    })
}

/// `Tr(y^q)^{1/q}` for a PSD block.
fn schatten_psd(y: &CMat, q: f64) -> f64 {
    let (vals, _) = linalg::herm_eig(y);
    vals.iter().map(|v| v.max(0.0).powf(q)).sum::<f64>().powf(1.0 / q)
}

fn trace_power(a: &CMat, p: f64) -> f64 {
    linalg::herm_eig(a).0.iter().map(|v| v.max(0.0).powf(p)).sum()
}

/// Result of one block's program (weight 1).
struct BlockSolution {
    a: CMat,
    y: Vec<CMat>,
    iterations: usize,
    converged: bool,
}

/// If some `x_i` dominates all others it is optimal, with dual `x_i^{p−1}`.
fn dominant(xs: &[CMat], p: f64) -> Option<BlockSolution> {
    let n = xs[0].nrows();
    let scale = xs.iter().map(linalg::max_abs).fold(0.0, f64::max);
    if scale == 0.0 {
        return Some(BlockSolution {
            a: CMat::zeros(n, n),
            y: vec![CMat::zeros(n, n); xs.len()],
            iterations: 0,
            converged: true,
        });
    }
    let i = (0..xs.len()).find(|&i| {
        xs.iter()
            .all(|x| std::ptr::eq(x, &xs[i]) || linalg::min_eig(&(&xs[i] - x)) >= -1e-14 * scale)
    })?;
    let (vals, vecs) = linalg::herm_eig(&xs[i]);
    let yv: Vec<f64> = vals.iter().map(|v| v.max(0.0).powf(p - 1.0)).collect();
    let mut y = vec![CMat::zeros(n, n); xs.len()];
    y[i] = linalg::from_eig(&yv, &vecs);
    Some(BlockSolution {
        a: xs[i].clone(),
        y,
        iterations: 0,
        converged: true,
    })
}

/// Orthonormal (for `Re Tr(AB)`) basis of the `n × n` Hermitian matrices.
fn hermitian_basis(n: usize) -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = CMat::zeros(n, n);
        e[(i, i)] = c(1.0);
        out.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut e = CMat::zeros(n, n);
            e[(i, j)] = c(s);
            e[(j, i)] = c(s);
            out.push(e);
            let mut e = CMat::zeros(n, n);
            e[(i, j)] = num_complex::Complex64::new(0.0, s);
            e[(j, i)] = num_complex::Complex64::new(0.0, -s);
            out.push(e);
        }
    }
    out
}

/// `Re Tr(A B)` without forming the product.
fn re_trace_prod(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

mod barrier {
    use super::*;

    const GROWTH: f64 = 10.0;
    const MAX_STAGES: usize = 80;

    /// Minimizes `t Tr(a^p) − Σ_n log det(a − x_n)` for increasing `t`.
    pub(super) fn solve(xs: &[CMat], p: f64, opts: &SolverOptions) -> BlockSolution {
        if let Some(sol) = dominant(xs, p) {
            return sol;
        }
        let n = xs[0].nrows();
        let m = xs.len() as f64;
        let basis = hermitian_basis(n);
        let scale = xs.iter().map(linalg::spectral_norm).fold(0.0, f64::max);
        let mut a = xs.iter().fold(CMat::zeros(n, n), |acc, x| acc + x) + CMat::identity(n, n) * c(0.1 * scale);
        let mut t = m * n as f64 / trace_power(&a, p);
        let mut iterations = 0;
        let mut converged = false;
        let mut y = Vec::new();
        for _ in 0..MAX_STAGES {
            let (a_new, steps) = center(&a, xs, p, t, &basis, opts.max_iter.saturating_sub(iterations));
            a = a_new;
            iterations += steps;
            if iterations >= opts.max_iter {
                y = duals(&a, xs, t);
                break;
            }
            y = duals(&a, xs, t);
            let upper = trace_power(&a, p).powf(1.0 / p);
            if upper - block_lower(xs, &y, p) <= opts.gap_tol * upper.max(1.0) {
                converged = true;
                break;
            }
            t *= GROWTH;
        }
        BlockSolution {
            a,
            y,
            iterations,
            converged,
        }
    }

    /// `y_n = (a − x_n)^{-1} / t`, the dual point attached to the central path.
    fn duals(a: &CMat, xs: &[CMat], t: f64) -> Vec<CMat> {
        xs.iter()
            .map(|x| {
                let (vals, vecs) = linalg::herm_eig(&(a - x));
                let inv: Vec<f64> = vals.iter().map(|&v| 1.0 / (t * v.max(f64::MIN_POSITIVE))).collect();
                linalg::from_eig(&inv, &vecs)
            })
            .collect()
    }

    fn block_lower(xs: &[CMat], ys: &[CMat], p: f64) -> f64 {
        let n = xs[0].nrows();
        let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x * y).trace().re).sum();
        let total = ys.iter().fold(CMat::zeros(n, n), |acc, y| acc + y);
        let den = schatten_psd(&total, conjugate_exponent(p));
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Barrier value, or `None` outside the strict interior.
    fn phi(a: &CMat, xs: &[CMat], p: f64, t: f64) -> Option<f64> {
        let mut logdet = 0.0;
        for x in xs {
            let (vals, _) = linalg::herm_eig(&(a - x));
            if vals[0] <= 0.0 {
                return None;
            }
            logdet += vals.iter().map(|v| v.ln()).sum::<f64>();
        }
        Some(t * trace_power(a, p) - logdet)
    }

    fn center(a0: &CMat, xs: &[CMat], p: f64, t: f64, basis: &[CMat], budget: usize) -> (CMat, usize) {
        let dim = basis.len();
        let mut a = a0.clone();
        let mut steps = 0;
        let mut phi_a = phi(&a, xs, p, t).expect("iterate stays interior");
        while steps < budget {
            steps += 1;
            let mut g = nalgebra::DVector::<f64>::zeros(dim);
            let mut h = DMatrix::<f64>::zeros(dim, dim);

            // Objective: gradient p a^{p−1}, Hessian from divided differences.
            let (lam, u) = linalg::herm_eig(&a);
            let grad_mat = linalg::from_eig(&lam.iter().map(|l| p * l.powf(p - 1.0)).collect::<Vec<_>>(), &u);
            let nn = lam.len();
            let gamma = DMatrix::<f64>::from_fn(nn, nn, |i, j| {
                let (li, lj) = (lam[i], lam[j]);
                if (li - lj).abs() <= 1e-12 * li.abs().max(lj.abs()) {
                    p * (p - 1.0) * (0.5 * (li + lj)).powf(p - 2.0)
                } else {
                    p * (li.powf(p - 1.0) - lj.powf(p - 1.0)) / (li - lj)
                }
            });
            let rotated: Vec<CMat> = basis.iter().map(|e| u.adjoint() * e * &u).collect();
            for (al, ea) in basis.iter().enumerate() {
                g[al] += t * re_trace_prod(&grad_mat, ea);
                for be in al..dim {
                    let mut acc = 0.0;
                    for i in 0..nn {
                        for j in 0..nn {
                            acc += gamma[(i, j)] * (rotated[al][(i, j)].conj() * rotated[be][(i, j)]).re;
                        }
                    }
                    h[(al, be)] += t * acc;
                }
            }
            // Barrier terms.
            for x in xs {
                let (vals, vecs) = linalg::herm_eig(&(&a - x));
                let r = linalg::from_eig(&vals.iter().map(|v| 1.0 / v).collect::<Vec<_>>(), &vecs);
                let re: Vec<CMat> = basis.iter().map(|e| &r * e).collect();
                for al in 0..dim {
                    g[al] -= re_trace_prod(&r, &basis[al]);
                    for be in al..dim {
                        h[(al, be)] += re_trace_prod(&re[al], &re[be]);
                    }
                }
            }
            for al in 0..dim {
                for be in 0..al {
                    h[(al, be)] = h[(be, al)];
                }
            }
            let delta = match h.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    let ridge = 1e-12 * h.diagonal().amax().max(1.0);
                    match (h + DMatrix::identity(dim, dim) * ridge).cholesky() {
                        Some(ch) => ch.solve(&(-&g)),
                        None => break,
                    }
                }
            };
            let decrement = -g.dot(&delta);
            if decrement <= 1e-14 || !decrement.is_finite() {
                break;
            }
            let step_mat = basis
                .iter()
                .zip(delta.iter())
                .fold(CMat::zeros(nn, nn), |acc, (e, &d)| acc + e * c(d));
            let mut s = 1.0;
            let mut moved = false;
            let mut stalled = false;
            while s > 1e-20 {
                let cand = &a + &step_mat * c(s);
                if let Some(v) = phi(&cand, xs, p, t) {
                    if v <= phi_a - 0.25 * s * decrement {
                        stalled = phi_a - v <= 1e-15 * phi_a.abs();
                        a = cand;
                        phi_a = v;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved || stalled || decrement * 0.5 <= 1e-11 {
                break;
            }
        }
        (a, steps)
    }
}

mod projected {
    use super::*;

    const ARMIJO: f64 = 1e-4;
    const DYKSTRA_CYCLES: usize = 5000;

    /// Projection onto `{a ⪰ x}`: `x + (z − x)_+`.
    fn project_one(z: &CMat, x: &CMat) -> CMat {
        let (vals, vecs) = linalg::herm_eig(&(z - x));
        x + linalg::from_eig(&vals.iter().map(|v| v.max(0.0)).collect::<Vec<_>>(), &vecs)
    }

    /// Dykstra's algorithm for the projection onto `∩_n {a ⪰ x_n}`.
    /// Returns the projection and the final increments (each negative semidefinite).
    pub(super) fn dykstra(z: &CMat, xs: &[CMat], tol: f64) -> (CMat, Vec<CMat>) {
        let n = z.nrows();
        let mut cur = z.clone();
        let mut incs = vec![CMat::zeros(n, n); xs.len()];
        for _ in 0..DYKSTRA_CYCLES {
            let mut change: f64 = 0.0;
            for (x, q) in xs.iter().zip(incs.iter_mut()) {
                let y = &cur + &*q;
                let next = project_one(&y, x);
                *q = &y - &next;
                change = change.max(linalg::max_abs(&(&next - &cur)));
                cur = next;
            }
            if change <= tol {
                break;
            }
        }
        (cur, incs)
    }

    pub(super) fn solve(xs: &[CMat], p: f64, opts: &SolverOptions) -> BlockSolution {
        if let Some(sol) = dominant(xs, p) {
            return sol;
        }
        let n = xs[0].nrows();
        let scale = xs.iter().map(linalg::spectral_norm).fold(0.0, f64::max);
        let mut a = xs.iter().fold(CMat::zeros(n, n), |acc, x| acc + x);
        if xs.iter().all(|x| linalg::min_eig(x) <= 1e-12 * scale) {
            a += CMat::identity(n, n) * c(1e-10);
        }
        let f = |a: &CMat| trace_power(a, p);
        let grad = |a: &CMat| {
            let (vals, vecs) = linalg::herm_eig(a);
            linalg::from_eig(&vals.iter().map(|v| p * v.max(0.0).powf(p - 1.0)).collect::<Vec<_>>(), &vecs)
        };
        let proj_tol = 1e-14 * scale.max(1.0);
        let mut step = 1.0 / (p * scale.max(1e-12).powf(p - 2.0).max(1e-12));
        let mut fa = f(&a);
        let mut y: Vec<CMat> = xs.iter().map(|x| x.clone()).collect();
        let mut best_lower: f64 = 0.0;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < opts.max_iter {
            iterations += 1;
            let g = grad(&a);
            let mut accepted = None;
            for _ in 0..60 {
                let (cand, incs) = dykstra(&(&a - &g * c(step)), xs, proj_tol);
                let fc = f(&cand);
                if fc <= fa + ARMIJO * re_trace_prod(&g, &(&cand - &a)) {
                    accepted = Some((cand, incs, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, incs, fc)) = accepted else { break };
            let moved = linalg::max_abs(&(&cand - &a));
            // KKT multipliers: the increments sum to (a − step·g) − proj.
            let ys: Vec<CMat> = incs.iter().map(|q| psd_part(&(-q / c(step)))).collect();
            a = cand;
            fa = fc;
            step *= 2.0;
            let lower = block_ratio(xs, &ys, p);
            if lower > best_lower {
                best_lower = lower;
                y = ys;
            }
            let upper = f(&a).powf(1.0 / p);
            if upper - best_lower <= 0.1 * opts.gap_tol * upper.max(1.0) || moved <= 1e-15 * scale {
                converged = upper - best_lower <= opts.gap_tol * upper.max(1.0);
                break;
            }
        }
        // Make `a` exactly feasible before reporting.
        let slack = xs.iter().map(|x| linalg::min_eig(&(&a - x))).fold(f64::INFINITY, f64::min);
        if slack < 0.0 {
            a += CMat::identity(n, n) * c(-slack);
        }
        let y = dual_ascent(xs, y, p, 200);
        BlockSolution {
            a,
            y,
            iterations,
            converged,
        }
    }

    fn psd_part(m: &CMat) -> CMat {
        let (vals, vecs) = linalg::herm_eig(m);
        linalg::from_eig(&vals.iter().map(|v| v.max(0.0)).collect::<Vec<_>>(), &vecs)
    }

    /// `Σ Tr(x_n y_n) / ‖Σ y_n‖_{p'}` on one block.
    pub(super) fn block_ratio(xs: &[CMat], ys: &[CMat], p: f64) -> f64 {
        let n = xs[0].nrows();
        let num: f64 = xs.iter().zip(ys).map(|(x, y)| re_trace_prod(x, y)).sum();
        let den = schatten_psd(&ys.iter().fold(CMat::zeros(n, n), |acc, y| acc + y), conjugate_exponent(p));
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Projected ascent on the ratio, started from the better of `start` and
    /// `y_n ∝ x_n`.
    fn dual_ascent(xs: &[CMat], start: Vec<CMat>, p: f64, iters: usize) -> Vec<CMat> {
        let n = xs[0].nrows();
        let pp = conjugate_exponent(p);
        let prop: Vec<CMat> = xs.to_vec();
        let mut y = if block_ratio(xs, &prop, p) > block_ratio(xs, &start, p) { prop } else { start };
        let mut val = block_ratio(xs, &y, p);
        let mut step = 1.0;
        for _ in 0..iters {
            let total = y.iter().fold(CMat::zeros(n, n), |acc, v| acc + v);
            let den = schatten_psd(&total, pp);
            if den <= 0.0 {
                break;
            }
            let num: f64 = xs.iter().zip(&y).map(|(x, v)| re_trace_prod(x, v)).sum();
            // ∂/∂y_n of num/den = x_n/den − num·(Σy)^{p'−1}/den^{p'+1}.
            let (vals, vecs) = linalg::herm_eig(&total);
            let dn = linalg::from_eig(&vals.iter().map(|v| v.max(0.0).powf(pp - 1.0)).collect::<Vec<_>>(), &vecs);
            let common = dn * c(num / den.powf(pp + 1.0));
            let mut improved = false;
            for _ in 0..30 {
                let cand: Vec<CMat> = xs
                    .iter()
                    .zip(&y)
                    .map(|(x, v)| psd_part(&(v + (x / c(den) - &common) * c(step))))
                    .collect();
                let cv = block_ratio(xs, &cand, p);
                if cv > val {
                    y = cand;
                    val = cv;
                    improved = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        y
    }
}
