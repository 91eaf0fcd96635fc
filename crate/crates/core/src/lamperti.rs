//! Lamperti (support-separating) operators.
//!
//! A bounded `T` on `L_p(M)` is Lamperti when `(Te)*Tf = Te(Tf)* = 0` for all
//! projections with `ef = 0`. Such maps factor uniquely as `T(x) = w b J(x)` with
//! `J` a Jordan *-homomorphism, `b ≥ 0` commuting with `J(M)` and `w*w = J(1) = s(b)`;
//! conversely any such triple defines a Lamperti map. [`decompose`] recovers the
//! triple from `T(1) = w b` and certifies it, or returns a pair of orthogonal
//! projections whose images fail to separate.

use crate::algebra::{conjugate_exponent, AlgElement, FiniteVNA, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::operator::{opnorm_lower, JordanMap, LpOperator};
use crate::random;

/// Residual tolerance (relative to the operator's scale).
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// `J` is a *-homomorphism: `T` is completely Lamperti.
    Hom,
    /// `J` is a *-anti-homomorphism (and not multiplicative).
    Antihom,
    /// A genuine direct sum of both kinds.
    MixedJordan,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct DecompositionResiduals {
    /// `max ‖T(e) − w b J(e)‖_∞` over matrix units.
    pub reconstruction: f64,
    /// `max ‖b J(e) − J(e) b‖_∞`.
    pub commutation: f64,
    /// Worst of the `*`-preservation and Jordan polarization residuals of `J`.
    pub jordan: f64,
    /// `max(‖w*w − J(1)‖_∞, ‖J(1) − s(b)‖_∞)`.
    pub support_identity: f64,
}

#[derive(Clone, Debug)]
pub struct LampertiDecomposition {
    pub w: AlgElement,
    pub b: AlgElement,
    pub j: JordanMap,
    pub residuals: DecompositionResiduals,
    pub classification: Classification,
    /// `τ(b^p J(z_k)) / τ(z_k)` for each minimal central projection `z_k`.
    pub density: Vec<f64>,
    pub p: f64,
    /// Absolute tolerance the residuals were judged against.
    pub tol_abs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LampertiWitness {
    pub e: AlgElement,
    pub f: AlgElement,
    /// `max(‖(Te)*Tf‖_∞, ‖Te(Tf)*‖_∞)`.
    pub violation: f64,
}

#[derive(Clone, Debug)]
pub enum LampertiAnalysis {
    Lamperti(Box<LampertiDecomposition>),
    NotLamperti(LampertiWitness),
    /// Residuals failed but no witness was located; usually a tolerance problem.
    Indeterminate {
        partial: Option<Box<LampertiDecomposition>>,
        reason: String,
    },
}

impl LampertiAnalysis {
    pub fn decomposition(&self) -> Option<&LampertiDecomposition> {
        match self {
            LampertiAnalysis::Lamperti(d) => Some(d),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&LampertiWitness> {
        match self {
            LampertiAnalysis::NotLamperti(w) => Some(w),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            LampertiAnalysis::Lamperti(_) => "lamperti",
            LampertiAnalysis::NotLamperti(_) => "not_lamperti",
            LampertiAnalysis::Indeterminate { .. } => "indeterminate",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecomposeOptions {
    pub tol: f64,
    pub rank_tol: f64,
    /// Random Hermitian spectral splittings tried after the coordinate projections.
    pub witness_trials: usize,
    pub seed: u64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            witness_trials: 200,
            seed: 0,
        }
    }
}

/// Decides whether `T` is Lamperti by recovering and checking `(w, b, J)`.
pub fn decompose(t: &LpOperator, p: f64, opts: &DecomposeOptions) -> Result<LampertiAnalysis> {
    crate::algebra::check_exponent(p)?;
    let m = t.algebra();
    let scale = t.basis_scale().max(1.0);
    let tol_abs = opts.tol * scale;

    if linalg::max_abs(t.matrix()) == 0.0 {
        let zero = m.zeros();
        let j = JordanMap::from_operator(&LpOperator::zero(m), opts.tol);
        return Ok(LampertiAnalysis::Lamperti(Box::new(LampertiDecomposition {
            w: zero.clone(),
            b: zero,
            j,
            residuals: DecompositionResiduals::default(),
            classification: Classification::Hom,
            density: vec![0.0; m.num_blocks()],
            p,
            tol_abs,
        })));
    }

    let t1 = t.apply_unchecked(&m.identity());
    if t1.norm_inf() <= tol_abs {
        // T(1) = 0 with T ≠ 0: the canonical w cannot be read off T(1).
        return Ok(match find_witness(t, opts, tol_abs * scale)? {
            Some(w) => LampertiAnalysis::NotLamperti(w),
            None => LampertiAnalysis::Indeterminate {
                partial: None,
                reason: "T(1) = 0 but T ≠ 0; recovery of w from T(1) is unsupported".into(),
            },
        });
    }

    let d = certify(t, p, opts, tol_abs)?;
    let r = &d.residuals;
    let j_scale = d.j.as_operator().basis_scale().max(1.0);
    let ok = r.reconstruction <= tol_abs
        && r.commutation <= tol_abs
        && r.jordan <= opts.tol * j_scale
        && r.support_identity <= opts.tol * j_scale;
    if ok {
        return Ok(LampertiAnalysis::Lamperti(Box::new(d)));
    }
    Ok(match find_witness(t, opts, tol_abs * scale)? {
        Some(w) => LampertiAnalysis::NotLamperti(w),
        None => LampertiAnalysis::Indeterminate {
            reason: format!(
                "residuals {:?} exceed tolerance {tol_abs:e} but no separating pair was found",
                d.residuals
            ),
            partial: Some(Box::new(d)),
        },
    })
}

/// Builds `(w, b, J)` from `T(1)` and measures every residual.
fn certify(
    t: &LpOperator,
    p: f64,
    opts: &DecomposeOptions,
    tol_abs: f64,
) -> Result<LampertiDecomposition> {
    let m = t.algebra();
    let t1 = t.apply_unchecked(&m.identity());
    let (w, b) = m.polar_tol(&t1, opts.rank_tol)?;
    let binv = m.funcalc_tol(&b, |x| if x > 0.0 { 1.0 / x } else { 0.0 }, opts.rank_tol)?;
    let left = &binv * &w.adjoint();
    let j_op = LpOperator::left_mul(m, &left)?.compose(t)?;
    let j = JordanMap::from_operator(&j_op, opts.tol);

    let wb = &w * &b;
    let images = t.basis_images();
    let j_images = j_op.basis_images();
    let mut reconstruction: f64 = 0.0;
    let mut commutation: f64 = 0.0;
    for (te, je) in images.iter().zip(&j_images) {
        reconstruction = reconstruction.max((te - &(&wb * je)).norm_inf());
        commutation = commutation.max(b.commutator(je).norm_inf());
    }
    let j1 = j.apply_unchecked(&m.identity());
    let sb = m.support_tol(&b, opts.rank_tol)?;
    let support_identity = (&(&w.adjoint() * &w) - &j1)
        .norm_inf()
        .max((&j1 - &sb).norm_inf());
    let jordan = j.residuals.star.max(j.residuals.jordan);

    let classification = classify(&j);
    let density = density_values(m, &b, &j, p)?;
    Ok(LampertiDecomposition {
        w,
        b,
        j,
        residuals: DecompositionResiduals {
            reconstruction,
            commutation,
            jordan,
            support_identity,
        },
        classification,
        density,
        p,
        tol_abs,
    })
}

fn classify(j: &JordanMap) -> Classification {
    if j.is_hom {
        Classification::Hom
    } else if j.is_antihom {
        Classification::Antihom
    } else {
        Classification::MixedJordan
    }
}

/// `τ(b^p J(z_k)) / τ(z_k)` per block.
fn density_values(m: &FiniteVNA, b: &AlgElement, j: &JordanMap, p: f64) -> Result<Vec<f64>> {
    let bp = m.funcalc(b, |x| if x > 0.0 { x.powf(p) } else { 0.0 })?;
    Ok(m
        .center_basis()
        .iter()
        .map(|z| {
            let num = m.trace_unchecked(&(&bp * &j.apply_unchecked(z))).re;
            num / m.trace_unchecked(z).re
        })
        .collect())
}

fn separation_violation(t: &LpOperator, e: &AlgElement, f: &AlgElement) -> f64 {
    let te = t.apply_unchecked(e);
    let tf = t.apply_unchecked(f);
    (&te.adjoint() * &tf)
        .norm_inf()
        .max((&te * &tf.adjoint()).norm_inf())
}

/// Searches orthogonal projection pairs `(e, f)` with `violation > threshold`.
///
/// Order: pairs of diagonal matrix units, pairs of central projections, then
/// splittings of the spectral projections of random Hermitian elements.
pub fn find_witness(
    t: &LpOperator,
    opts: &DecomposeOptions,
    threshold: f64,
) -> Result<Option<LampertiWitness>> {
    let m = t.algebra();
    let mut diag_units = Vec::new();
    for (k, n) in m.dims().into_iter().enumerate() {
        for i in 0..n {
            diag_units.push(m.unit(k, i, i));
        }
    }
    let try_pair = |e: &AlgElement, f: &AlgElement| -> Option<LampertiWitness> {
        let v = separation_violation(t, e, f);
        (v > threshold).then(|| LampertiWitness {
            e: e.clone(),
            f: f.clone(),
            violation: v,
        })
    };
    for a in 0..diag_units.len() {
        for b in a + 1..diag_units.len() {
            if let Some(w) = try_pair(&diag_units[a], &diag_units[b]) {
                return Ok(Some(w));
            }
        }
    }
    let central = m.center_basis();
    for a in 0..central.len() {
        for b in a + 1..central.len() {
            if let Some(w) = try_pair(&central[a], &central[b]) {
                return Ok(Some(w));
            }
        }
    }
    let mut rng = random::rng(opts.seed);
    for _ in 0..opts.witness_trials {
        let h = random::random_hermitian(&mut rng, m);
        // Rank-one spectral projections of h, tagged with their block.
        let mut projs: Vec<AlgElement> = Vec::new();
        for (k, blk) in h.blocks().iter().enumerate() {
            let (_, vecs) = linalg::herm_eig(blk);
            for col in 0..vecs.ncols() {
                let v = vecs.column(col);
                let mut x = m.zeros();
                x.blocks_mut()[k] = &v * v.adjoint();
                projs.push(x);
            }
        }
        if projs.len() < 2 {
            break;
        }
        let mut e = m.zeros();
        let mut f = m.zeros();
        let (mut ne, mut nf) = (0, 0);
        for pr in &projs {
            match random::uniform(&mut rng, 0.0, 3.0) as usize {
                0 => {
                    e = &e + pr;
                    ne += 1;
                }
                1 => {
                    f = &f + pr;
                    nf += 1;
                }
                _ => {}
            }
        }
        if ne == 0 || nf == 0 {
            continue;
        }
        if let Some(w) = try_pair(&e, &f) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// `J` is multiplicative on all pairs of matrix units.
pub fn is_completely_lamperti(d: &LampertiDecomposition, tol: f64) -> bool {
    let scale = d.j.as_operator().basis_scale().max(1.0);
    d.j.residuals.star <= tol * scale && d.j.residuals.hom <= tol * scale
}

fn require_decomposition(t: &LpOperator, p: f64, opts: &DecomposeOptions) -> Result<LampertiDecomposition> {
    match decompose(t, p, opts)? {
        LampertiAnalysis::Lamperti(d) => Ok(*d),
        LampertiAnalysis::NotLamperti(w) => Err(Error::Hypothesis {
            reason: format!("operator is not Lamperti (violation {:e})", w.violation),
            witness: Some(Box::new(w)),
        }),
        LampertiAnalysis::Indeterminate { reason, .. } => Err(Error::Hypothesis {
            reason: format!("Lamperti property undecided: {reason}"),
            witness: None,
        }),
    }
}

/// Central density `ρ` with `‖T(x)‖_p^p = τ(ρ|x|^p)`.
#[derive(Clone, Debug)]
pub struct Density {
    pub rho: AlgElement,
    /// `ρ` restricted to each block.
    pub values: Vec<f64>,
    /// Worst relative mismatch of `‖Tx‖_p^p` against `τ(ρ|x|^p)` on the samples.
    pub verification: f64,
}

/// Samples used by [`rho_of`] to verify the density identity.
pub const RHO_SAMPLES: usize = 12;

pub fn rho_of(t: &LpOperator, p: f64, opts: &DecomposeOptions) -> Result<Density> {
    if !(p.is_finite()) {
        return Err(Error::Domain("rho needs a finite exponent".into()));
    }
    let d = require_decomposition(t, p, opts)?;
    density_from(t, &d, p, opts)
}

fn density_from(
    t: &LpOperator,
    d: &LampertiDecomposition,
    p: f64,
    opts: &DecomposeOptions,
) -> Result<Density> {
    let m = t.algebra();
    let values = d.density.clone();
    let rho = m.central_from(&values);
    let mut rng = random::rng(opts.seed ^ 0x5eed);
    let mut verification: f64 = 0.0;
    for _ in 0..RHO_SAMPLES {
        let x = random::random_element(&mut rng, m);
        let lhs = m.lp_norm_unchecked(&t.apply_unchecked(&x), p).powf(p);
        let (_, absx) = m.polar(&x)?;
        let absp = m.funcalc(&absx, |s| if s > 0.0 { s.powf(p) } else { 0.0 })?;
        let rhs = m.trace_unchecked(&(&rho * &absp)).re;
        verification = verification.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    if verification > 1e3 * opts.tol.max(1e-12) {
        return Err(Error::Inconsistency(format!(
            "‖Tx‖_p^p and τ(ρ|x|^p) differ by {verification:e}"
        )));
    }
    Ok(Density {
        rho,
        values,
        verification,
    })
}

#[derive(Clone, Debug)]
pub struct KernelProjections {
    /// `1 − s(ρ)`: `T` vanishes on `p0 M p0`.
    pub p0: AlgElement,
    /// `s(ρ)`.
    pub p1: AlgElement,
    /// `1 − s(1 − ρ)`: `T` is isometric on `p̃0 M p̃0`.
    pub p0_tilde: AlgElement,
    /// `max ‖T(e)‖_∞` over matrix units inside `p0 M p0`.
    pub vanish_residual: f64,
    /// Worst `|‖Tx‖_p − ‖x‖_p|` over samples in `p̃0 M p̃0`.
    pub isometry_residual: f64,
}

/// Blocks where `ρ` vanishes or equals one, judged with the rank cutoff.
fn kernel_masks(values: &[f64], rank_tol: f64) -> (Vec<bool>, Vec<bool>) {
    let vmax = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let cut = rank_tol * vmax;
    let in_p1: Vec<bool> = values.iter().map(|&v| v > cut).collect();
    let in_tilde: Vec<bool> = values.iter().map(|&v| (1.0 - v).abs() <= cut).collect();
    (in_p1, in_tilde)
}

pub fn kernel_projections(t: &LpOperator, p: f64, opts: &DecomposeOptions) -> Result<KernelProjections> {
    let dens = rho_of(t, p, opts)?;
    kernel_from_density(t, &dens, p, opts)
}

fn kernel_from_density(
    t: &LpOperator,
    dens: &Density,
    p: f64,
    opts: &DecomposeOptions,
) -> Result<KernelProjections> {
    let m = t.algebra();
    let (in_p1, in_tilde) = kernel_masks(&dens.values, opts.rank_tol);
    let ind = |mask: &[bool], want: bool| {
        m.central_from(&mask.iter().map(|&b| if b == want { 1.0 } else { 0.0 }).collect::<Vec<_>>())
    };
    let p1 = ind(&in_p1, true);
    let p0 = ind(&in_p1, false);
    let p0_tilde = ind(&in_tilde, true);

    let mut vanish_residual: f64 = 0.0;
    let mut isometry_residual: f64 = 0.0;
    for (k, n) in m.dims().into_iter().enumerate() {
        if !in_p1[k] {
            for i in 0..n {
                for j in 0..n {
                    let img = t.apply_unchecked(&m.unit(k, i, j));
                    vanish_residual = vanish_residual.max(img.norm_inf());
                }
            }
        }
    }
    let mut rng = random::rng(opts.seed ^ 0xca11);
    if in_tilde.iter().any(|&b| b) {
        for _ in 0..RHO_SAMPLES {
            let x = random::random_element(&mut rng, m);
            let x = &(&p0_tilde * &x) * &p0_tilde;
            let dev = (m.lp_norm_unchecked(&t.apply_unchecked(&x), p) - m.lp_norm_unchecked(&x, p)).abs();
            isometry_residual = isometry_residual.max(dev);
        }
    }
    Ok(KernelProjections {
        p0,
        p1,
        p0_tilde,
        vanish_residual,
        isometry_residual,
    })
}

/// Per-power diagnostics of `T^n = θ_n S^n`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PowerCheck {
    pub n: usize,
    /// `max ‖T^n(e) − θ_n S^n(e)‖_∞` over matrix units.
    pub residual: f64,
    /// `max ‖θ_n S^n(e) − S^n(e) θ_n‖_∞`.
    pub commutation: f64,
    pub theta_norm: f64,
    /// Lower bound on `‖T^n‖_{p→p}`.
    pub opnorm_lower: f64,
}

#[derive(Clone, Debug)]
pub struct DoublyLampertiFactorization {
    pub theta: AlgElement,
    /// `θ_n = θ J(θ) ⋯ J^{n−1}(θ)` for `n = 1..=n_check`.
    pub theta_powers: Vec<AlgElement>,
    pub s: LpOperator,
    pub p0: AlgElement,
    pub p1: AlgElement,
    pub rho: AlgElement,
    pub powers: Vec<PowerCheck>,
    /// `max ‖S(e)‖_∞` on matrix units of `p0 M p0`.
    pub s_vanish_residual: f64,
    /// Worst `|‖Sx‖_p − ‖x‖_p|` on samples from `p1 M p1`.
    pub s_isometry_residual: f64,
    /// Whether `J(M)` equals the corner `J(1) M J(1)` (compared by dimension).
    pub range_is_corner: bool,
}

/// Norm-iteration budget used for the `‖T^n‖` lower bounds.
pub const FACTOR_NORM_ITERATIONS: usize = 60;

/// Factorizes a positive Lamperti `T` with Lamperti adjoint as `T^n = θ_n S^n`.
pub fn doubly_lamperti_factor(
    t: &LpOperator,
    p: f64,
    n_check: usize,
    opts: &DecomposeOptions,
) -> Result<DoublyLampertiFactorization> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("factorization needs 1 < p < ∞, got {p}")));
    }
    let m = t.algebra();
    let d = require_decomposition(t, p, opts)?;
    let j1 = d.j.apply_unchecked(&m.identity());
    if (&d.w - &j1).norm_inf() > opts.tol * t.basis_scale().max(1.0) {
        return Err(Error::Domain("factorization needs a positive Lamperti operator (w ≠ J(1))".into()));
    }
    let pp = conjugate_exponent(p);
    match decompose(&t.adjoint(), pp, opts)? {
        LampertiAnalysis::Lamperti(_) => {}
        LampertiAnalysis::NotLamperti(w) => {
            return Err(Error::Hypothesis {
                reason: format!("adjoint is not Lamperti (violation {:e})", w.violation),
                witness: Some(Box::new(w)),
            })
        }
        LampertiAnalysis::Indeterminate { reason, .. } => {
            return Err(Error::Hypothesis {
                reason: format!("adjoint Lamperti property undecided: {reason}"),
                witness: None,
            })
        }
    }

    let dens = density_from(t, &d, p, opts)?;
    let kp = kernel_from_density(t, &dens, p, opts)?;
    let (in_p1, _) = kernel_masks(&dens.values, opts.rank_tol);
    let inv_root: Vec<f64> = dens
        .values
        .iter()
        .zip(&in_p1)
        .map(|(&v, &on)| if on { v.powf(-1.0 / p) } else { 0.0 })
        .collect();
    let rho_tilde = d.j.apply_unchecked(&m.central_from(&inv_root));
    let b_tilde = &d.b * &rho_tilde;
    let s = LpOperator::from_wbj(j1.clone(), b_tilde, d.j.clone())?;

    let j_rho = d.j.apply_unchecked(&dens.rho);
    let theta = m.funcalc(&j_rho.hermitian_part(), |x| if x > 0.0 { x.powf(1.0 / p) } else { 0.0 })?;

    // J^k(θ) for k = 0..n_check-1, and the running products θ_n.
    let mut theta_powers = Vec::with_capacity(n_check);
    let mut jk = theta.clone();
    let mut prod = theta.clone();
    for n in 1..=n_check {
        if n > 1 {
            jk = d.j.apply_unchecked(&jk);
            prod = &prod * &jk;
        }
        theta_powers.push(prod.clone());
    }

    let mut powers = Vec::with_capacity(n_check);
    let mut tn = LpOperator::identity(m);
    let mut sn = LpOperator::identity(m);
    for (idx, th) in theta_powers.iter().enumerate() {
        tn = t.compose(&tn)?;
        sn = s.compose(&sn)?;
        let mut residual: f64 = 0.0;
        let mut commutation: f64 = 0.0;
        for (te, se) in tn.basis_images().iter().zip(sn.basis_images()) {
            let ts = th * &se;
            residual = residual.max((te - &ts).norm_inf());
            commutation = commutation.max((&ts - &(&se * th)).norm_inf());
        }
        let lower = opnorm_lower(&tn, p, FACTOR_NORM_ITERATIONS, opts.seed)?.value;
        powers.push(PowerCheck {
            n: idx + 1,
            residual,
            commutation,
            theta_norm: th.norm_inf(),
            opnorm_lower: lower,
        });
    }

    let mut s_vanish_residual: f64 = 0.0;
    for (k, n) in m.dims().into_iter().enumerate() {
        if !in_p1[k] {
            for i in 0..n {
                for jj in 0..n {
                    s_vanish_residual =
                        s_vanish_residual.max(s.apply_unchecked(&m.unit(k, i, jj)).norm_inf());
                }
            }
        }
    }
    let mut rng = random::rng(opts.seed ^ 0x1505);
    let mut s_isometry_residual: f64 = 0.0;
    for _ in 0..RHO_SAMPLES {
        let x = random::random_element(&mut rng, m);
        let x = &(&kp.p1 * &x) * &kp.p1;
        let dev = (m.lp_norm_unchecked(&s.apply_unchecked(&x), p) - m.lp_norm_unchecked(&x, p)).abs();
        s_isometry_residual = s_isometry_residual.max(dev / m.lp_norm_unchecked(&x, p).max(1.0));
    }

    let range_is_corner = {
        let rank_j = numerical_rank(d.j.matrix(), opts.rank_tol);
        let corner: usize = j1
            .blocks()
            .iter()
            .map(|blk| {
                let r = numerical_rank(blk, opts.rank_tol);
                r * r
            })
            .sum();
        rank_j == corner
    };

    Ok(DoublyLampertiFactorization {
        theta,
        theta_powers,
        s,
        p0: kp.p0,
        p1: kp.p1,
        rho: dens.rho,
        powers,
        s_vanish_residual,
        s_isometry_residual,
        range_is_corner,
    })
}

fn numerical_rank(m: &CMat, rank_tol: f64) -> usize {
    let s = linalg::singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > rank_tol * top && v > 0.0).count()
}

/// Decomposes `T1 ∘ T2` and returns its classification.
///
/// Each factor must be Lamperti and either completely Lamperti or positive; those
/// are the classes closed under products.
pub fn lamperti_product_check(
    t1: &LpOperator,
    t2: &LpOperator,
    p: f64,
    opts: &DecomposeOptions,
) -> Result<Classification> {
    for (name, t) in [("first", t1), ("second", t2)] {
        let d = require_decomposition(t, p, opts)?;
        let j1 = d.j.apply_unchecked(&t.algebra().identity());
        let positive = (&d.w - &j1).norm_inf() <= opts.tol * t.basis_scale().max(1.0);
        if d.classification != Classification::Hom && !positive {
            return Err(Error::Domain(format!(
                "{name} factor is neither completely Lamperti nor positive"
            )));
        }
    }
    let prod = t1.compose(t2)?;
    Ok(require_decomposition(&prod, p, opts)?.classification)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::random::{haar_unitary, rng};

    fn example_t() -> LpOperator {
        let m = FiniteVNA::matrix(2);
        let r = AlgElement::from_blocks(vec![CMat::from_row_slice(
            2,
            2,
            &[c(1.0), c(1.0), c(0.0), c(-1.0)],
        )]);
        LpOperator::conjugation(&m, r).unwrap()
    }

    fn l2_op(f: impl Fn(f64, f64) -> (f64, f64)) -> LpOperator {
        let m = FiniteVNA::abelian(2);
        LpOperator::from_fn(&m, |x| {
            let (a, b) = (x.block(0)[(0, 0)], x.block(1)[(0, 0)]);
            // Linear maps only: evaluate on real and imaginary parts separately.
            let (r0, r1) = f(a.re, b.re);
            let (i0, i1) = f(a.im, b.im);
            AlgElement::from_blocks(vec![
                CMat::from_element(1, 1, num_complex::Complex64::new(r0, i0)),
                CMat::from_element(1, 1, num_complex::Complex64::new(r1, i1)),
            ])
        })
    }

    #[test]
    fn unitary_conjugation_is_hom() {
        let m = FiniteVNA::matrix(2);
        let u = AlgElement::from_blocks(vec![haar_unitary(&mut rng(1), 2)]);
        let t = LpOperator::conjugation(&m, u.clone()).unwrap();
        let d = decompose(&t, 2.0, &DecomposeOptions::default()).unwrap();
        let d = d.decomposition().expect("lamperti");
        assert_eq!(d.classification, Classification::Hom);
        assert!((&d.w - &m.identity()).max_abs() < 1e-10);
        assert!((&d.b - &m.identity()).max_abs() < 1e-10);
        assert!(d.j.as_operator().distance(&t) < 1e-10);
        assert!(is_completely_lamperti(d, 1e-8));
    }

    #[test]
    fn example_conjugation_is_refuted() {
        let a = decompose(&example_t(), 2.0, &DecomposeOptions::default()).unwrap();
        let w = a.witness().expect("witness");
        let m = FiniteVNA::matrix(2);
        assert_eq!(w.e, m.unit(0, 0, 0));
        assert_eq!(w.f, m.unit(0, 1, 1));
        assert!((w.violation - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn transpose_is_antihom() {
        let m = FiniteVNA::matrix(2);
        let t = LpOperator::transpose_map(&m);
        let a = decompose(&t, 3.0, &DecomposeOptions::default()).unwrap();
        let d = a.decomposition().expect("lamperti");
        assert_eq!(d.classification, Classification::Antihom);
        assert!(d.residuals.jordan < 1e-14);
        assert!(!is_completely_lamperti(d, 1e-8));
        // J(e12 e21) = e11 while J(e12)J(e21) = e22.
        let j = &d.j;
        let lhs = j.apply(&m.unit(0, 0, 0)).unwrap();
        let rhs = &j.apply(&m.unit(0, 0, 1)).unwrap() * &j.apply(&m.unit(0, 1, 0)).unwrap();
        assert!((&lhs - &m.unit(0, 0, 0)).max_abs() < 1e-14);
        assert!((&rhs - &m.unit(0, 1, 1)).max_abs() < 1e-14);
    }

    #[test]
    fn abelian_maps_are_hom() {
        let t = l2_op(|a, b| (b, 0.5 * a));
        let d = decompose(&t, 2.0, &DecomposeOptions::default()).unwrap();
        assert_eq!(d.decomposition().unwrap().classification, Classification::Hom);
    }

    #[test]
    fn rho_examples() {
        let opts = DecomposeOptions::default();
        let m = FiniteVNA::matrix(2);
        let u = AlgElement::from_blocks(vec![haar_unitary(&mut rng(2), 2)]);
        let iso = LpOperator::conjugation(&m, u).unwrap();
        let r = rho_of(&iso, 3.0, &opts).unwrap();
        assert!((&r.rho - &m.identity()).max_abs() < 1e-10);
        let r = rho_of(&LpOperator::zero(&m), 3.0, &opts).unwrap();
        assert_eq!(r.rho.max_abs(), 0.0);
        let shift = l2_op(|_, b| (b, 0.0));
        let r = rho_of(&shift, 1.5, &opts).unwrap();
        assert!((r.values[0] - 0.0).abs() < 1e-12 && (r.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_rejects_non_lamperti() {
        assert!(matches!(
            rho_of(&example_t(), 2.0, &DecomposeOptions::default()),
            Err(Error::Hypothesis { .. })
        ));
    }

    #[test]
    fn kernel_projection_examples() {
        let opts = DecomposeOptions::default();
        let m = FiniteVNA::matrix(2);
        let kp = kernel_projections(&LpOperator::identity(&m), 2.0, &opts).unwrap();
        assert_eq!(kp.p0.max_abs(), 0.0);
        assert_eq!(kp.p1, m.identity());
        assert_eq!(kp.p0_tilde, m.identity());

        let l2 = FiniteVNA::abelian(2);
        let kp = kernel_projections(&l2_op(|_, b| (b, 0.0)), 2.0, &opts).unwrap();
        assert_eq!(kp.p0, l2.diagonal(&[1.0, 0.0]).unwrap());
        assert_eq!(kp.p1, l2.diagonal(&[0.0, 1.0]).unwrap());
        assert_eq!(kp.p0_tilde, l2.diagonal(&[0.0, 1.0]).unwrap());
        assert!(kp.vanish_residual < 1e-15 && kp.isometry_residual < 1e-12);

        // ρ = (½, 1) at p = 1: T(x1, x2) = (x2 + ½ x1 ... ) built as weights on a swap.
        let t = l2_op(|a, b| (b, 0.5 * a));
        let kp = kernel_projections(&t, 1.0, &opts).unwrap();
        assert_eq!(kp.p0.max_abs(), 0.0);
        assert_eq!(kp.p0_tilde, l2.diagonal(&[0.0, 1.0]).unwrap());
    }

    #[test]
    fn factorization_of_isometry_collapses() {
        let m = FiniteVNA::matrix(2);
        let u = AlgElement::from_blocks(vec![haar_unitary(&mut rng(3), 2)]);
        let t = LpOperator::conjugation(&m, u).unwrap();
        let f = doubly_lamperti_factor(&t, 2.5, 3, &DecomposeOptions::default()).unwrap();
        assert!((&f.theta - &m.identity()).max_abs() < 1e-10);
        assert!(f.s.distance(&t) < 1e-10);
        assert!(f.powers.iter().all(|pc| pc.residual < 1e-10));
        assert!(f.range_is_corner);
    }

    #[test]
    fn factorization_scaling_case() {
        let m = FiniteVNA::matrix(2);
        let u = AlgElement::from_blocks(vec![haar_unitary(&mut rng(4), 2)]);
        let t = LpOperator::conjugation(&m, u).unwrap().scale(c(2.0));
        let f = doubly_lamperti_factor(&t, 3.0, 3, &DecomposeOptions::default()).unwrap();
        for pc in &f.powers {
            // Oracle: the direct power 2^n T0^n has norm exactly 2^n.
            let direct = (t.power(pc.n).basis_scale()).max(0.0);
            assert!((pc.theta_norm - 2f64.powi(pc.n as i32)).abs() < 1e-9);
            assert!((direct - 2f64.powi(pc.n as i32)).abs() < 1e-9);
            assert!(pc.residual < 1e-9);
        }
    }

    #[test]
    fn factorization_weighted_swap() {
        // T(x1, x2) = (x2, ¼^{1/p} x1) has ρ = (¼, 1).
        let p = 2.0;
        let c2 = 0.25f64.powf(1.0 / p);
        let t = l2_op(move |a, b| (b, c2 * a));
        let f = doubly_lamperti_factor(&t, p, 4, &DecomposeOptions::default()).unwrap();
        assert!((f.rho.block(0)[(0, 0)].re - 0.25).abs() < 1e-12);
        assert!((f.rho.block(1)[(0, 0)].re - 1.0).abs() < 1e-12);
        // Brute-force powers against θ_n S^n.
        let m = FiniteVNA::abelian(2);
        for (n, th) in f.theta_powers.iter().enumerate() {
            let tn = t.power(n + 1);
            let sn = f.s.power(n + 1);
            for e in m.basis() {
                let lhs = tn.apply(&e).unwrap();
                let rhs = th * &sn.apply(&e).unwrap();
                assert!((&lhs - &rhs).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn factorization_rejects_non_lamperti_adjoint() {
        // T(x1, x2) = (x1, x1): the adjoint merges both coordinates into one.
        let t = l2_op(|a, _| (a, a));
        let err = doubly_lamperti_factor(&t, 2.0, 2, &DecomposeOptions::default()).unwrap_err();
        match err {
            Error::Hypothesis { witness, .. } => assert!(witness.is_some()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn product_examples() {
        let opts = DecomposeOptions::default();
        let m = FiniteVNA::matrix(2);
        let mut g = rng(5);
        let u1 = AlgElement::from_blocks(vec![haar_unitary(&mut g, 2)]);
        let u2 = AlgElement::from_blocks(vec![haar_unitary(&mut g, 2)]);
        let t1 = LpOperator::conjugation(&m, u1).unwrap();
        let t2 = LpOperator::conjugation(&m, u2).unwrap();
        assert_eq!(lamperti_product_check(&t1, &t2, 2.0, &opts).unwrap(), Classification::Hom);
        let tr = LpOperator::transpose_map(&m);
        assert_eq!(lamperti_product_check(&tr, &tr, 2.0, &opts).unwrap(), Classification::Hom);
        assert!(lamperti_product_check(&example_t(), &t1, 2.0, &opts).is_err());
    }
}
