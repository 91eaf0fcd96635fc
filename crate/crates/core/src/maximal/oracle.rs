//! Reference values for the maximal-norm solvers.

use serde::Serialize;

use crate::algebra::{AlgElement, FiniteVNA};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::random;

/// Exact `‖sup⁺ x_n‖_p` for commuting positive elements: the `p`-norm of the
/// entrywise maximum of the joint eigenvalue profiles.
pub fn oracle_commuting(m: &FiniteVNA, xs: &[AlgElement], p: f64, tol: f64) -> Result<f64> {
    crate::algebra::check_exponent(p)?;
    if xs.is_empty() {
        return Err(Error::Domain("maximal norm of an empty sequence".into()));
    }
    for x in xs {
        m.check(x)?;
        if !x.is_psd(tol) {
            return Err(Error::Domain("oracle inputs must be positive".into()));
        }
    }
    let scale = xs.iter().map(|x| x.norm_inf()).fold(1.0, f64::max);
    for a in xs {
        for b in xs {
            if a.commutator(b).norm_inf() > tol * scale * scale {
                return Err(Error::Domain("oracle inputs do not commute".into()));
            }
        }
    }
    // A generic positive combination has simple spectrum on the joint eigenspaces,
    // so its eigenvectors diagonalize every x_n.
    let mut g = random::rng(0x0c0c);
    let coeffs: Vec<f64> = xs.iter().map(|_| random::uniform(&mut g, 0.5, 1.5)).collect();
    let mut max_profile: Vec<Vec<f64>> = Vec::with_capacity(m.num_blocks());
    for k in 0..m.num_blocks() {
        let combo = xs
            .iter()
            .zip(&coeffs)
            .fold(CMat::zeros(m.dims()[k], m.dims()[k]), |acc, (x, &w)| acc + x.block(k) * c(w));
        let (_, u) = linalg::herm_eig(&combo);
        let mut prof = vec![0.0f64; m.dims()[k]];
        for x in xs {
            let d = u.adjoint() * x.block(k) * &u;
            let off = (0..d.nrows())
                .flat_map(|i| (0..d.ncols()).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| d[(i, j)].norm())
                .fold(0.0, f64::max);
            if off > 1e3 * tol * scale {
                return Err(Error::Domain(format!(
                    "joint diagonalization failed (off-diagonal {off:e})"
                )));
            }
            for (i, v) in prof.iter_mut().enumerate() {
                *v = v.max(d[(i, i)].re);
            }
        }
        max_profile.push(prof);
    }
    let weights = m.weights();
    if p.is_infinite() {
        return Ok(max_profile.iter().flatten().fold(0.0, |a: f64, &v| a.max(v)));
    }
    let s: f64 = max_profile
        .iter()
        .zip(&weights)
        .map(|(prof, w)| w * prof.iter().map(|v| v.max(0.0).powf(p)).sum::<f64>())
        .sum();
    Ok(s.powf(1.0 / p))
}

/// Default points per axis of the 4-parameter grid.
pub const DEFAULT_GRID: usize = 21;

#[derive(Clone, Debug, Serialize)]
pub struct GridOracleResult {
    /// Best feasible value after refinement (an upper bound on the true value).
    pub value: f64,
    /// Best value on the raw grid.
    pub grid_value: f64,
    /// Grid spacing along each parameter.
    pub spacing: f64,
    /// `2^{1/p} · 2 · spacing / w^{1/p}`: how far the raw grid value can sit above
    /// the optimum, from shifting the nearest grid point by a multiple of `1`.
    pub accuracy: f64,
    /// Best Hermitian `a` found, as `(α, δ, β, γ)` for `[[α, β+iγ], [β−iγ, δ]]`.
    pub a: [f64; 4],
}

/// Brute-force `min ‖a‖_p` over Hermitian 2×2 `a ⪰ x₁, x₂`.
///
/// `a` ranges over a box whose radius is `‖x₁ + x₂‖_p / w^{1/p}` (the optimum
/// satisfies `‖a‖_∞ ≤ ‖a‖_p / w^{1/p} ≤ ‖x₁ + x₂‖_p / w^{1/p}`). After the grid
/// the best points are refined by a compass search with random directions.
pub fn oracle_grid_2x2(m: &FiniteVNA, xs: &[AlgElement; 2], p: f64, resolution: usize) -> Result<GridOracleResult> {
    if m.num_blocks() != 1 || m.dims()[0] != 2 {
        return Err(Error::Shape("grid oracle needs a single 2×2 block".into()));
    }
    if !(p >= 1.0 && p.is_finite()) || resolution < 2 {
        return Err(Error::Domain("grid oracle needs finite p ≥ 1 and at least 2 points".into()));
    }
    for x in xs {
        m.check(x)?;
    }
    let w = m.weights()[0];
    let herm = |x: &AlgElement| {
        let b = x.block(0);
        [b[(0, 0)].re, b[(1, 1)].re, b[(0, 1)].re, b[(0, 1)].im]
    };
    let x1 = herm(&xs[0]);
    let x2 = herm(&xs[1]);
    let sum = AlgElement::from_blocks(vec![xs[0].block(0) + xs[1].block(0)]);
    let radius = m.lp_norm(&sum, p)? / w.powf(1.0 / p);

    // Eigenvalues of [[α, z],[z̄, δ]] in closed form.
    let eig = |a: &[f64; 4]| {
        let mean = 0.5 * (a[0] + a[1]);
        let half = 0.5 * (a[0] - a[1]);
        let r = (half * half + a[2] * a[2] + a[3] * a[3]).sqrt();
        (mean - r, mean + r)
    };
    let feasible = |a: &[f64; 4]| {
        [x1, x2].iter().all(|x| {
            let d = [a[0] - x[0], a[1] - x[1], a[2] - x[2], a[3] - x[3]];
            eig(&d).0 >= 0.0
        })
    };
    let objective = |a: &[f64; 4]| {
        let (l1, l2) = eig(a);
        (w * (l1.abs().powf(p) + l2.abs().powf(p))).powf(1.0 / p)
    };

    let spacing = 2.0 * radius / (resolution - 1) as f64;
    let diag_step = radius / (resolution - 1) as f64;
    let mut best: Vec<(f64, [f64; 4])> = Vec::new();
    let keep = 8;
    for i0 in 0..resolution {
        let alpha = i0 as f64 * diag_step;
        for i1 in 0..resolution {
            let delta = i1 as f64 * diag_step;
            for i2 in 0..resolution {
                let beta = -radius + i2 as f64 * spacing;
                for i3 in 0..resolution {
                    let gamma = -radius + i3 as f64 * spacing;
                    let a = [alpha, delta, beta, gamma];
                    if !feasible(&a) {
                        continue;
                    }
                    let v = objective(&a);
                    if best.len() < keep || v < best[best.len() - 1].0 {
                        best.push((v, a));
                        best.sort_by(|x, y| x.0.total_cmp(&y.0));
                        best.truncate(keep);
                    }
                }
            }
        }
    }
    // x₁ + x₂ is always feasible; include it in case the grid missed everything.
    let start = herm(&sum);
    best.push((objective(&start), start));
    best.sort_by(|x, y| x.0.total_cmp(&y.0));
    let grid_value = best[0].0;

    // Refinement runs over (α, β, γ) with δ set to the smallest feasible value:
    // a ⪰ x iff α > x₁₁ and δ ≥ x₂₂ + |z − x₁₂|² / (α − x₁₁), and ‖a‖_p increases
    // with δ on the positive cone, so the optimum sits on that surface.
    let lift = |q: &[f64; 3]| -> Option<[f64; 4]> {
        let mut delta = f64::NEG_INFINITY;
        for x in [x1, x2] {
            let gap = q[0] - x[0];
            let off = (q[1] - x[2]).powi(2) + (q[2] - x[3]).powi(2);
            if gap < 0.0 || (gap == 0.0 && off > 0.0) {
                return None;
            }
            let need = if off == 0.0 { x[1] } else { x[1] + off / gap };
            delta = delta.max(need);
        }
        Some([q[0], delta, q[1], q[2]])
    };
    let reduced = |q: &[f64; 3]| lift(q).map(|a| objective(&a));

    let mut rng = random::rng(0x9e1d);
    let mut overall = best[0];
    for &(_, a0) in &best {
        let mut q = [a0[0], a0[2], a0[3]];
        let Some(mut v) = reduced(&q) else { continue };
        let mut h = spacing;
        while h > 1e-13 * radius.max(1.0) {
            let mut dirs: Vec<[f64; 3]> = (0..3)
                .flat_map(|i| {
                    let mut e = [0.0; 3];
                    e[i] = 1.0;
                    [e, e.map(|x| -x)]
                })
                .collect();
            for _ in 0..12 {
                let mut d = [0.0; 3];
                for di in d.iter_mut() {
                    *di = random::uniform(&mut rng, -1.0, 1.0);
                }
                let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                dirs.push(d.map(|x| x / n));
            }
            let mut improved = false;
            for d in &dirs {
                let cand = [q[0] + h * d[0], q[1] + h * d[1], q[2] + h * d[2]];
                if let Some(cv) = reduced(&cand) {
                    if cv < v {
                        v = cv;
                        q = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        if v < overall.0 {
            overall = (v, lift(&q).expect("feasible"));
        }
    }
    Ok(GridOracleResult {
        value: overall.0,
        grid_value,
        spacing,
        accuracy: 2f64.powf(1.0 / p) * 2.0 * spacing * w.powf(1.0 / p),
        a: overall.1,
    })
}
