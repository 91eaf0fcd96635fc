//! Cesàro averages, the mean-ergodic projection and empirical maximal ratios.

use serde::Serialize;

use super::{maximal_norm_pos, MaximalNormResult, SolverOptions};
use crate::algebra::{AlgElement, FiniteVNA};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::operator::{falsify_positivity, LpOperator};

/// Largest condition number accepted when inverting `T`.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `A_n x = (1/(n+1)) Σ_{k=0}^{n} T^k x` for `n = 0..=n_max`.
pub fn ergodic_averages(t: &LpOperator, x: &AlgElement, n_max: usize) -> Result<Vec<AlgElement>> {
    t.algebra().check(x)?;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut power = x.clone();
    let mut sum = x.clone();
    out.push(x.clone());
    for n in 1..=n_max {
        power = t.apply_unchecked(&power);
        sum = &sum + &power;
        out.push(sum.scale_re(1.0 / (n + 1) as f64));
    }
    Ok(out)
}

/// `(1/(2n+1)) Σ_{k=−n}^{n} T^k x` for `n = 0..=n_max`, using an explicit inverse.
pub fn two_sided_averages(t: &LpOperator, x: &AlgElement, n_max: usize) -> Result<Vec<AlgElement>> {
    let m = t.algebra();
    m.check(x)?;
    let s = crate::linalg::singular_values(t.matrix());
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::Conditioning(cond));
    }
    let inv = t
        .matrix()
        .clone()
        .try_inverse()
        .ok_or(Error::Conditioning(f64::INFINITY))?;
    let t_inv = LpOperator::from_dense(m, inv)?;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut fwd = x.clone();
    let mut bwd = x.clone();
    let mut sum = x.clone();
    out.push(x.clone());
    for n in 1..=n_max {
        fwd = t.apply_unchecked(&fwd);
        bwd = t_inv.apply_unchecked(&bwd);
        sum = &(&sum + &fwd) + &bwd;
        out.push(sum.scale_re(1.0 / (2 * n + 1) as f64));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct ProjectionOptions {
    /// Singular values of `I − T` at or below this (times `max(1, ‖T‖)`) span the
    /// fixed space.
    pub null_tol: f64,
    /// Singular values strictly between `null_tol` and this are ambiguous.
    pub ambiguity: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            null_tol: 1e-9,
            ambiguity: 1e-6,
        }
    }
}

/// Projection onto `ker(I − T)` along `ran(I − T)`.
///
/// Built as `V (W* V)⁻¹ W*` from orthonormal bases `V` of `ker(I − T)` and `W` of
/// `ker(I − T)*`; then `P² = P` and `TP = PT = P` are checked.
pub fn mean_ergodic_projection(t: &LpOperator, opts: &ProjectionOptions) -> Result<LpOperator> {
    let m = t.algebra();
    let d = m.vec_dim();
    let a = CMat::identity(d, d) - t.matrix();
    let scale = crate::linalg::spectral_norm(t.matrix()).max(1.0);
    let svd = a.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut kernel = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= opts.null_tol * scale {
            kernel.push(i);
        } else if s < opts.ambiguity * scale {
            return Err(Error::SpectralCluster(format!(
                "singular value {s:e} of I − T is neither zero nor separated from zero"
            )));
        }
    }
    if kernel.is_empty() {
        return LpOperator::from_dense(m, CMat::zeros(d, d));
    }
    let k = kernel.len();
    let mut v = CMat::zeros(d, k);
    let mut w = CMat::zeros(d, k);
    for (col, &i) in kernel.iter().enumerate() {
        v.set_column(col, &vt.row(i).adjoint());
        w.set_column(col, &u.column(i));
    }
    let gram = w.adjoint() * &v;
    let gs = crate::linalg::singular_values(&gram);
    let cond = gs[0] / gs[gs.len() - 1].max(f64::MIN_POSITIVE);
    if cond > CONDITION_LIMIT {
        return Err(Error::Conditioning(cond));
    }
    let p = &v * gram.try_inverse().ok_or(Error::Conditioning(f64::INFINITY))? * w.adjoint();
    let proj = LpOperator::from_dense(m, p)?;
    let check = proj.compose(&proj)?.distance(&proj)
        .max(t.compose(&proj)?.distance(&proj))
        .max(proj.compose(t)?.distance(&proj));
    if check > 1e3 * opts.ambiguity.max(opts.null_tol) * scale {
        return Err(Error::Inconsistency(format!(
            "mean-ergodic projection fails P² = P = TP = PT by {check:e}"
        )));
    }
    Ok(proj)
}

#[derive(Clone, Debug)]
pub struct ErgodicOptions {
    pub solver: SolverOptions,
    pub two_sided: bool,
    /// Compute `ratio(n)` for every `n ≤ N`, not just `N`.
    pub profile: bool,
    /// Positivity falsification trials run before the report.
    pub positivity_trials: usize,
    pub seed: u64,
}

impl Default for ErgodicOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            two_sided: false,
            profile: true,
            positivity_trials: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfilePoint {
    pub n: usize,
    pub upper: f64,
    pub lower: f64,
    /// `upper / ‖x‖_p`.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ErgodicReport {
    pub averages: Vec<AlgElement>,
    pub maximal: MaximalNormResult,
    /// `maximal.upper / ‖x‖_p`.
    pub ratio: f64,
    /// `‖A_N x − P x‖_p`, when `P` could be computed.
    pub projection_distance: Option<f64>,
    pub profile: Vec<ProfilePoint>,
    /// Certified monotonicity: `upper(n+1) ≥ lower(n)` along the profile.
    pub profile_monotone: bool,
    pub two_sided: bool,
    /// Most negative eigenvalue over the averages.
    pub min_average_eig: f64,
}

/// Averages of `T` applied to `x` and the maximal norm of the resulting sequence.
pub fn maximal_ergodic_report(
    t: &LpOperator,
    x: &AlgElement,
    n_max: usize,
    p: f64,
    opts: &ErgodicOptions,
) -> Result<ErgodicReport> {
    let m = t.algebra();
    m.check(x)?;
    if !x.is_psd(1e-9) {
        return Err(Error::Domain("ergodic report needs a positive x".into()));
    }
    if opts.positivity_trials > 0
        && falsify_positivity(t, opts.positivity_trials, opts.seed, 1e-9)?.is_some()
    {
        return Err(Error::Domain("operator maps a positive element outside the cone".into()));
    }
    let averages = if opts.two_sided {
        two_sided_averages(t, x, n_max)?
    } else {
        ergodic_averages(t, x, n_max)?
    };
    let min_average_eig = averages
        .iter()
        .map(|a| a.hermitian_part().min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let xnorm = m.lp_norm(x, p)?;
    let ratio_of = |v: f64| if xnorm > 0.0 { v / xnorm } else { 0.0 };

    let ns: Vec<usize> = if opts.profile { (0..=n_max).collect() } else { vec![n_max] };
    let mut profile = Vec::with_capacity(ns.len());
    let mut last = None;
    for &n in &ns {
        let r = maximal_norm_pos(m, &averages[..=n], p, &opts.solver)?;
        profile.push(ProfilePoint {
            n,
            upper: r.upper,
            lower: r.lower,
            ratio: ratio_of(r.upper),
        });
        last = Some(r);
    }
    let maximal = last.expect("at least one point");
    let profile_monotone = profile
        .windows(2)
        .all(|w| w[1].upper >= w[0].lower - 1e-12 * w[0].upper.max(1.0));

    let projection_distance = match mean_ergodic_projection(t, &ProjectionOptions::default()) {
        Ok(proj) => {
            let px = proj.apply_unchecked(x);
            Some(m.lp_norm_unchecked(&(&averages[n_max] - &px), p))
        }
        Err(_) => None,
    };
    Ok(ErgodicReport {
        ratio: ratio_of(maximal.upper),
        averages,
        maximal,
        projection_distance,
        profile,
        profile_monotone,
        two_sided: opts.two_sided,
        min_average_eig,
    })
}

/// `‖A_n x − P x‖_p` for each `n` in `grid`.
pub fn projection_distances(
    t: &LpOperator,
    x: &AlgElement,
    grid: &[usize],
    p: f64,
) -> Result<Vec<f64>> {
    let m = t.algebra();
    let proj = mean_ergodic_projection(t, &ProjectionOptions::default())?;
    let px = proj.apply_unchecked(x);
    let n_max = grid.iter().copied().max().unwrap_or(0);
    let avg = ergodic_averages(t, x, n_max)?;
    Ok(grid
        .iter()
        .map(|&n| m.lp_norm_unchecked(&(&avg[n] - &px), p))
        .collect())
}

#[derive(Clone, Debug)]
pub struct LinfReport {
    pub source: MaximalNormResult,
    pub image: MaximalNormResult,
    /// `(source gap) + (image gap)`.
    pub combined_gap: f64,
    /// `image.upper ≤ source.lower + combined_gap + tol`.
    pub contraction_holds: bool,
    /// `|image.upper − source.upper| ≤ combined_gap + tol`.
    pub equality_holds: bool,
}

/// Compares `‖sup⁺ T x_n‖_p` with `‖sup⁺ x_n‖_p` for a positive operator.
pub fn linf_contraction_check(
    t: &LpOperator,
    xs: &[AlgElement],
    p: f64,
    opts: &SolverOptions,
    tol: f64,
) -> Result<LinfReport> {
    let m: &FiniteVNA = t.algebra();
    let source = maximal_norm_pos(m, xs, p, opts)?;
    let images: Vec<AlgElement> = xs.iter().map(|x| t.apply_unchecked(x).hermitian_part()).collect();
    let image = maximal_norm_pos(m, &images, p, opts)?;
    let combined_gap = source.gap() + image.gap();
    let slack = combined_gap + tol * source.upper.max(1.0);
    Ok(LinfReport {
        contraction_holds: image.upper <= source.lower + slack,
        equality_holds: (image.upper - source.upper).abs() <= slack,
        source,
        image,
        combined_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::random::{haar_unitary, random_psd, rng};

    fn example_t() -> LpOperator {
        let m = FiniteVNA::matrix(2);
        let r = AlgElement::from_blocks(vec![CMat::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(-1.0)])]);
        LpOperator::conjugation(&m, r).unwrap()
    }

    #[test]
    fn average_examples() {
        let m = FiniteVNA::matrix(2);
        let x = random_psd(&mut rng(1), &m);
        for a in ergodic_averages(&LpOperator::identity(&m), &x, 5).unwrap() {
            assert!((&a - &x).max_abs() < 1e-14);
        }
        for (n, a) in ergodic_averages(&LpOperator::zero(&m), &x, 5).unwrap().iter().enumerate() {
            assert!((a - &x.scale_re(1.0 / (n + 1) as f64)).max_abs() < 1e-14);
        }
        let t = example_t();
        let tx = t.apply(&x).unwrap();
        let half = (&x + &tx).scale_re(0.5);
        let avg = ergodic_averages(&t, &x, 9).unwrap();
        for k in 0..5 {
            assert!((&avg[2 * k + 1] - &half).max_abs() < 1e-12);
        }
    }

    #[test]
    fn two_sided_examples() {
        let m = FiniteVNA::matrix(2);
        let x = random_psd(&mut rng(2), &m);
        for a in two_sided_averages(&LpOperator::identity(&m), &x, 4).unwrap() {
            assert!((&a - &x).max_abs() < 1e-14);
        }
        let t = example_t();
        let tx = t.apply(&x).unwrap();
        for (n, a) in two_sided_averages(&t, &x, 6).unwrap().iter().enumerate() {
            // T is an involution, so T^{-k} = T^k alternates between x and Tx.
            let mut brute = x.clone();
            for k in 1..=n {
                let tk = if k % 2 == 1 { &tx } else { &x };
                brute = &(&brute + tk) + tk;
            }
            let brute = brute.scale_re(1.0 / (2 * n + 1) as f64);
            assert!((a - &brute).max_abs() < 1e-12);
        }
        // Conjugation by diag(1, i) has period 4.
        let u = AlgElement::from_blocks(vec![CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0),
            num_complex::Complex64::new(0.0, 1.0),
        ]))]);
        let t = LpOperator::conjugation(&m, u).unwrap();
        let avgs = two_sided_averages(&t, &x, 5).unwrap();
        let mut pw = vec![x.clone()];
        for _ in 0..5 {
            let last = pw.last().unwrap().clone();
            pw.push(t.apply(&last).unwrap());
        }
        let tinv = t.adjoint();
        let mut neg = vec![x.clone()];
        for _ in 0..5 {
            let last = neg.last().unwrap().clone();
            neg.push(tinv.apply(&last).unwrap());
        }
        for n in 0..=5 {
            let mut s = x.clone();
            for k in 1..=n {
                s = &(&s + &pw[k]) + &neg[k];
            }
            assert!((&avgs[n] - &s.scale_re(1.0 / (2 * n + 1) as f64)).max_abs() < 1e-12);
        }
        assert!(matches!(
            two_sided_averages(&LpOperator::zero(&m), &x, 2),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let m = FiniteVNA::matrix(2);
        let id = LpOperator::identity(&m);
        let p = mean_ergodic_projection(&id, &ProjectionOptions::default()).unwrap();
        assert!(p.distance(&id) < 1e-12);
        let p = mean_ergodic_projection(&LpOperator::zero(&m), &ProjectionOptions::default()).unwrap();
        assert!(p.matrix().iter().all(|z| z.norm() < 1e-12));
        let t = example_t();
        let p = mean_ergodic_projection(&t, &ProjectionOptions::default()).unwrap();
        let expected = id.add(&t).unwrap().scale(c(0.5));
        assert!(p.distance(&expected) < 1e-12);
        let x = random_psd(&mut rng(3), &m);
        let grid = [1, 3, 7, 15, 31];
        let d = projection_distances(&t, &x, &grid, 2.0).unwrap();
        for (n, v) in grid.iter().zip(&d) {
            assert!(*v * (*n as f64 + 1.0) < 10.0);
        }
    }

    #[test]
    fn identity_ratio_is_one() {
        let m = FiniteVNA::matrix(2);
        let x = random_psd(&mut rng(4), &m);
        let r = maximal_ergodic_report(&LpOperator::identity(&m), &x, 6, 2.0, &ErgodicOptions::default()).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-10);
        assert!(r.profile_monotone);
    }

    #[test]
    fn isometry_profile_is_monotone() {
        let m = FiniteVNA::matrix(3);
        let mut g = rng(5);
        let u = AlgElement::from_blocks(vec![haar_unitary(&mut g, 3)]);
        let t = LpOperator::conjugation(&m, u).unwrap();
        let x = random_psd(&mut g, &m);
        let r = maximal_ergodic_report(&t, &x, 12, 3.0, &ErgodicOptions::default()).unwrap();
        assert!(r.profile_monotone);
        assert!(r.ratio >= 1.0 - 1e-9 && r.ratio.is_finite());
        assert!(r.min_average_eig > -1e-10);
    }

    #[test]
    fn linf_examples() {
        let m = FiniteVNA::from_dims(&[2, 2]).unwrap();
        let mut g = rng(6);
        let xs = vec![random_psd(&mut g, &m), random_psd(&mut g, &m)];
        let opts = SolverOptions::default();
        let id = LpOperator::identity(&m);
        let r = linf_contraction_check(&id, &xs, 2.0, &opts, 1e-9).unwrap();
        assert!(r.contraction_holds && r.equality_holds);
        let half = id.scale(c(0.5));
        let r = linf_contraction_check(&half, &xs, 2.0, &opts, 1e-9).unwrap();
        assert!((r.image.upper - 0.5 * r.source.upper).abs() <= r.combined_gap + 1e-9);
        assert!(r.contraction_holds && !r.equality_holds);
    }
}
