//! Worked examples together with the checks they are expected to pass.
//!
//! A [`GalleryCase`] is data: an operator, the algebra it acts on and a list of
//! [`Check`]s. [`run_case`] evaluates the checks with the rest of the crate, so the
//! same case drives unit tests, the acceptance suite and `nclp gallery run`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgElement, Block, FiniteVNA};
use crate::error::{Error, Result};
use crate::io::ElementDesc;
use crate::lamperti::{decompose, is_completely_lamperti, rho_of, Classification, DecomposeOptions, LampertiAnalysis};
use crate::linalg::{c, CMat};
use crate::maximal::{maximal_ergodic_report, ErgodicOptions, SolverOptions};
use crate::operator::{choi_cp_check, falsify_positivity, opnorm_lower, JordanMap, LpOperator, DEFAULT_JORDAN_TOL};
use crate::random::{self, SeededRng};
use crate::Complex64;

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// Follows from the definitions in a line or two.
    Definition,
    /// Worked out by hand or by an independent computation.
    Computation,
    /// A published property of the construction.
    Literature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum CheckKind {
    /// `decompose` rejects `T` with exactly this witness pair (in either order).
    Witness { e: ElementDesc, f: ElementDesc, violation: f64 },
    /// `decompose` succeeds with this classification and residuals within `tol`.
    Classification { expected: Classification },
    CompletelyLamperti { expected: bool },
    /// The recovered modulus `b` is the identity.
    UnitModulus,
    /// `T^n` equals the identity.
    PowerIsIdentity { n: usize },
    /// Randomized search finds no positive `x` with `T(x)` outside the cone.
    Positive { trials: usize },
    /// `‖T(x)‖_p` for a fixed `x`.
    ImageNorm { x: ElementDesc, p: f64, expected: f64 },
    /// `T(x)` for a fixed `x`.
    Image { x: ElementDesc, expected: ElementDesc },
    /// Choi matrix is positive semidefinite.
    CompletelyPositive,
    /// Off-diagonal entries of `T(x)` vanish for random positive `x`.
    DiagonalRange { samples: usize },
    /// The norming power iteration finds no ratio above `1 + tol`.
    Contraction { p: f64 },
    /// `‖T(x)‖_p = ‖x‖_p` on random `x` for each listed `p`.
    Isometry { ps: Vec<f64>, samples: usize },
    /// The density `ρ` is at most `1 + tol`.
    DensityBounded { p: f64 },
    /// For random positive `x` the ratio profile of the ergodic maximal norm is
    /// non-decreasing and its last increment is at most `increment`.
    ErgodicStabilization { p: f64, n_max: usize, samples: usize, increment: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub tol: f64,
    pub origin: Origin,
}

impl Check {
    fn new(name: &str, kind: CheckKind, tol: f64, origin: Origin) -> Self {
        Self {
            name: name.to_string(),
            kind,
            tol,
            origin,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GalleryCase {
    pub name: String,
    pub description: String,
    pub algebra: FiniteVNA,
    pub operator: LpOperator,
    pub checks: Vec<Check>,
    pub params: CaseParams,
}

/// Conjugation by `r = [[1, 1], [0, −1]]` on `M_2`.
///
/// `r² = 1`, so `T` is a positive involution, but `T(e₁₁)T(e₂₂) ≠ 0`: it does not
/// separate supports.
pub fn triangular_involution() -> GalleryCase {
    let m = FiniteVNA::matrix(2);
    let r = AlgElement::from_blocks(vec![CMat::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(-1.0)])]);
    let t = LpOperator::conjugation(&m, r).expect("shapes match");
    let e11 = ElementDesc::from_element(&m.unit(0, 0, 0));
    let e22 = ElementDesc::from_element(&m.unit(0, 1, 1));
    let mut checks = vec![
        Check::new(
            "not-lamperti",
            CheckKind::Witness {
                e: e11,
                f: e22.clone(),
                violation: 2f64.sqrt(),
            },
            1e-10,
            Origin::Computation,
        ),
        Check::new("involution", CheckKind::PowerIsIdentity { n: 2 }, 1e-12, Origin::Literature),
        Check::new("positive", CheckKind::Positive { trials: 200 }, 1e-10, Origin::Definition),
        Check::new("completely-positive", CheckKind::CompletelyPositive, 1e-10, Origin::Definition),
    ];
    for p in [1.5, 2.0, 3.0] {
        checks.push(Check::new(
            &format!("image-norm-e22-p{p}"),
            CheckKind::ImageNorm {
                x: e22.clone(),
                p,
                expected: 2.0,
            },
            1e-10,
            Origin::Literature,
        ));
    }
    GalleryCase {
        name: "triangular-involution".into(),
        description: "x ↦ r x r* with r = [[1, 1], [0, −1]]: a positive involution that is not Lamperti".into(),
        algebra: m,
        operator: t,
        checks,
        params: CaseParams::default(),
    }
}

/// Largest `k` accepted by [`jlm_operator`]; the Choi matrix has `k⁴` entries.
pub const JLM_MAX_K: usize = 8;

/// The Junge–Le Merdy average `T = ¼ Σ_i (a_i + b_i)* x (a_i + b_i)` on `M_k`, with
/// `a_i = e_ii` and `b_i = k^{−1/(2p)} e_{1i}`.
///
/// `T` is completely positive, contractive on `S_p^k` and maps everything to
/// diagonal matrices. It is a known example of a positive contraction without a
/// dilation once `k` is large enough; that threshold is not explicit, so the case
/// records the construction only.
pub fn jlm_operator(k: usize, p: f64) -> Result<GalleryCase> {
    if !(2..=JLM_MAX_K).contains(&k) {
        return Err(Error::Domain(format!("JLM operator needs 2 ≤ k ≤ {JLM_MAX_K}, got {k}")));
    }
    crate::algebra::check_exponent(p)?;
    if p.is_infinite() {
        return Err(Error::Domain("JLM operator needs finite p".into()));
    }
    let m = FiniteVNA::matrix(k);
    let scale = (k as f64).powf(-1.0 / (2.0 * p));
    let a: Vec<AlgElement> = (0..k).map(|i| m.unit(0, i, i)).collect();
    let b: Vec<AlgElement> = (0..k).map(|i| m.unit(0, 0, i).scale_re(scale)).collect();
    // ¼(T₁ + T₂ + T₃ + T₄) as one Kraus list, the ¼ split as ½ on each side.
    let half = |v: &[AlgElement]| v.iter().map(|x| x.scale_re(0.5)).collect::<Vec<_>>();
    let left = [half(&a), half(&b), half(&a), half(&b)].concat();
    let right = [half(&b), half(&a), half(&a), half(&b)].concat();
    let t = LpOperator::kraus(&m, left, right)?;

    let mut checks = vec![
        Check::new("completely-positive", CheckKind::CompletelyPositive, 1e-10, Origin::Literature),
        Check::new("diagonal-range", CheckKind::DiagonalRange { samples: 50 }, 1e-12, Origin::Literature),
        Check::new("contraction", CheckKind::Contraction { p }, 1e-6, Origin::Literature),
        Check::new(
            "ergodic-stabilization",
            CheckKind::ErgodicStabilization {
                p,
                n_max: 16,
                samples: 3,
                increment: 1e-2,
            },
            1e-8,
            Origin::Computation,
        ),
    ];
    if k == 2 {
        let s = 2f64.powf(-0.5 / p);
        let e11 = m.unit(0, 0, 0);
        let expected = m
            .diagonal(&[0.25 * (1.0 + s) * (1.0 + s), 0.25 * s * s])
            .expect("two diagonal entries");
        checks.push(Check::new(
            "image-e11",
            CheckKind::Image {
                x: ElementDesc::from_element(&e11),
                expected: ElementDesc::from_element(&expected),
            },
            1e-14,
            Origin::Computation,
        ));
    }
    Ok(GalleryCase {
        name: format!("jlm-k{k}-p{p}"),
        description: format!("Junge–Le Merdy diagonal average on M_{k} at p = {p}"),
        algebra: m,
        operator: t,
        checks,
        params: CaseParams {
            k: Some(k),
            p: Some(p),
            seed: None,
        },
    })
}

/// Schur multiplier by `m_ij = z_i z̄_j`, which is conjugation by `diag(z)`.
pub fn schur_mixed_unitary(z: &[Complex64]) -> Result<GalleryCase> {
    if z.is_empty() {
        return Err(Error::Domain("empty phase vector".into()));
    }
    if let Some(bad) = z.iter().find(|zi| (zi.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::Domain(format!("phase {bad} is not unimodular")));
    }
    let n = z.len();
    let m = FiniteVNA::matrix(n);
    let mult = AlgElement::from_blocks(vec![CMat::from_fn(n, n, |i, j| z[i] * z[j].conj())]);
    let t = LpOperator::schur(&m, mult)?;
    let checks = vec![
        Check::new(
            "hom",
            CheckKind::Classification {
                expected: Classification::Hom,
            },
            1e-10,
            Origin::Definition,
        ),
        Check::new("unit-modulus", CheckKind::UnitModulus, 1e-10, Origin::Definition),
        Check::new(
            "isometry",
            CheckKind::Isometry {
                ps: vec![1.5, 2.0, 3.0],
                samples: 20,
            },
            1e-10,
            Origin::Definition,
        ),
        Check::new("completely-positive", CheckKind::CompletelyPositive, 1e-10, Origin::Definition),
    ];
    let label: Vec<String> = z
        .iter()
        .map(|zi| match (zi.re.round() as i64, zi.im.round() as i64) {
            (1, 0) => "1".to_string(),
            (-1, 0) => "-1".to_string(),
            (0, 1) => "i".to_string(),
            (0, -1) => "-i".to_string(),
            _ => format!("{:.3}", zi.arg()),
        })
        .collect();
    Ok(GalleryCase {
        name: format!("schur-phases-{}", label.join("_")),
        description: "Schur multiplier by a rank-one unimodular matrix (a unitary conjugation)".into(),
        algebra: m,
        operator: t,
        checks,
        params: CaseParams::default(),
    })
}

/// What [`random_lamperti`] should produce.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LampertiRequest {
    pub classification: Classification,
    /// Exponent used for the contractive and isometric scalings.
    pub p: f64,
    /// Scale `b` so that `ρ ⪯ 1`.
    pub contractive: bool,
    /// Scale `b` so that `ρ = 1`; needs `injective`.
    pub isometric: bool,
    /// `w = J(1)`, so that `T` is positive.
    pub positive: bool,
    /// Every block of `M` is mapped somewhere, so `J` is injective.
    pub injective: bool,
    /// No two blocks are mapped from the same block, so the adjoint is Lamperti too.
    pub doubly: bool,
}

impl Default for LampertiRequest {
    fn default() -> Self {
        Self {
            classification: Classification::Hom,
            p: 2.0,
            contractive: false,
            isometric: false,
            positive: false,
            injective: false,
            doubly: false,
        }
    }
}

/// The pieces of a generated Lamperti operator.
#[derive(Clone, Debug)]
pub struct LampertiParts {
    pub w: AlgElement,
    pub b: AlgElement,
    pub j: JordanMap,
    /// `source[l]`: the block feeding block `l` of the image, if any.
    pub source: Vec<Option<usize>>,
    pub transposed: Vec<bool>,
}

/// Samples `T = w b J` directly from its structure.
///
/// `J` sends block `source[l]` to block `l` by a Haar-random unitary conjugation,
/// preceded by a transpose where `transposed[l]`. `b` is a positive scalar on each
/// image block (so it commutes with `J(M)`), and `w` is `J(1)` or a random unitary
/// on the image blocks.
pub fn random_lamperti_parts(m: &FiniteVNA, seed: u64, req: &LampertiRequest) -> Result<LampertiParts> {
    crate::algebra::check_exponent(req.p)?;
    if !req.p.is_finite() && (req.contractive || req.isometric) {
        return Err(Error::Unsupported("contractive scaling needs finite p".into()));
    }
    if req.isometric && !req.injective {
        return Err(Error::Unsupported("an isometry needs an injective J".into()));
    }
    let dims = m.dims();
    let nb = dims.len();
    let big: Vec<usize> = (0..nb).filter(|&l| dims[l] >= 2).collect();
    match req.classification {
        Classification::Antihom if big.is_empty() => {
            return Err(Error::Unsupported(
                "an abelian algebra has no anti-homomorphism that is not also a homomorphism".into(),
            ))
        }
        Classification::MixedJordan if big.len() < 2 => {
            return Err(Error::Unsupported(
                "a mixed Jordan map needs at least two blocks of size ≥ 2".into(),
            ))
        }
        _ => {}
    }

    let mut g = random::rng(seed);
    let mut source: Vec<Option<usize>> = vec![None; nb];
    let mut classes: Vec<usize> = dims.clone();
    classes.sort_unstable();
    classes.dedup();
    for &dim in &classes {
        let members: Vec<usize> = (0..nb).filter(|&l| dims[l] == dim).collect();
        let must_cover = req.injective || (dim >= 2 && req.classification != Classification::Hom);
        if must_cover || req.doubly {
            let mut perm = members.clone();
            perm.shuffle(&mut g);
            for (&l, &k) in members.iter().zip(&perm) {
                if must_cover || g.random::<f64>() >= 0.3 {
                    source[l] = Some(k);
                }
            }
        } else {
            for &l in &members {
                if g.random::<f64>() >= 0.25 {
                    source[l] = Some(members[g.random_range(0..members.len())]);
                }
            }
        }
    }
    if source.iter().all(Option::is_none) {
        let l = g.random_range(0..nb);
        source[l] = Some(l);
    }

    let mut transposed = vec![false; nb];
    match req.classification {
        Classification::Hom => {}
        Classification::Antihom => transposed.iter_mut().for_each(|t| *t = true),
        Classification::MixedJordan => {
            let mut order = big.clone();
            order.shuffle(&mut g);
            transposed[order[0]] = true;
            for &l in &order[2..] {
                transposed[l] = g.random::<bool>();
            }
        }
    }

    let unitaries: Vec<CMat> = dims.iter().map(|&n| random::haar_unitary(&mut g, n)).collect();
    let jmap = LpOperator::from_fn(m, |x| {
        AlgElement::from_blocks(
            (0..nb)
                .map(|l| match source[l] {
                    Some(k) => {
                        let xk = if transposed[l] { x.block(k).transpose() } else { x.block(k).clone() };
                        &unitaries[l] * xk * unitaries[l].adjoint()
                    }
                    None => CMat::zeros(dims[l], dims[l]),
                })
                .collect(),
        )
    });
    let j = JordanMap::from_operator(&jmap, DEFAULT_JORDAN_TOL);

    let mut beta: Vec<f64> = source
        .iter()
        .map(|s| if s.is_some() { random::uniform(&mut g, 0.5, 2.0) } else { 0.0 })
        .collect();
    if req.contractive || req.isometric {
        let weights = m.weights();
        for k in 0..nb {
            let feeds: Vec<usize> = (0..nb).filter(|&l| source[l] == Some(k)).collect();
            if feeds.is_empty() {
                continue;
            }
            let rho: f64 = feeds.iter().map(|&l| weights[l] * beta[l].powf(req.p)).sum::<f64>() / weights[k];
            let target = if req.isometric { 1.0 } else { random::uniform(&mut g, 0.4, 1.0) };
            let factor = (target / rho).powf(1.0 / req.p);
            for &l in &feeds {
                beta[l] *= factor;
            }
        }
    }
    let support = |l: usize| if source[l].is_some() { 1.0 } else { 0.0 };
    let b = AlgElement::from_blocks(
        (0..nb)
            .map(|l| CMat::identity(dims[l], dims[l]) * c(beta[l]))
            .collect(),
    );
    let w = AlgElement::from_blocks(
        (0..nb)
            .map(|l| {
                if req.positive || source[l].is_none() {
                    CMat::identity(dims[l], dims[l]) * c(support(l))
                } else {
                    random::haar_unitary(&mut g, dims[l])
                }
            })
            .collect(),
    );
    Ok(LampertiParts {
        w,
        b,
        j,
        source,
        transposed,
    })
}

/// A random Lamperti operator built from `(w, b, J)` with checks that `decompose`
/// recovers what was generated.
pub fn random_lamperti(m: &FiniteVNA, seed: u64, req: &LampertiRequest) -> Result<GalleryCase> {
    let parts = random_lamperti_parts(m, seed, req)?;
    let t = LpOperator::from_wbj(parts.w, parts.b, parts.j)?;
    let mut checks = vec![
        Check::new(
            "classification",
            CheckKind::Classification {
                expected: req.classification,
            },
            1e-8,
            Origin::Definition,
        ),
        Check::new(
            "completely-lamperti",
            CheckKind::CompletelyLamperti {
                expected: req.classification == Classification::Hom,
            },
            1e-8,
            Origin::Definition,
        ),
    ];
    if req.positive {
        checks.push(Check::new("positive", CheckKind::Positive { trials: 50 }, 1e-10, Origin::Definition));
    }
    if req.p.is_finite() && (req.contractive || req.isometric) {
        checks.push(Check::new("density-bounded", CheckKind::DensityBounded { p: req.p }, 1e-10, Origin::Definition));
        if req.p > 1.0 {
            checks.push(Check::new("contraction", CheckKind::Contraction { p: req.p }, 1e-8, Origin::Definition));
        }
    }
    if req.isometric {
        checks.push(Check::new(
            "isometry",
            CheckKind::Isometry {
                ps: vec![req.p],
                samples: 20,
            },
            1e-10,
            Origin::Definition,
        ));
    }
    let kind = match req.classification {
        Classification::Hom => "hom",
        Classification::Antihom => "antihom",
        Classification::MixedJordan => "mixed",
    };
    Ok(GalleryCase {
        name: format!("random-lamperti-{kind}-{seed}"),
        description: format!("random {kind} Lamperti operator on blocks {:?}", m.dims()),
        algebra: m.clone(),
        operator: t,
        checks,
        params: CaseParams {
            k: None,
            p: Some(req.p),
            seed: Some(seed),
        },
    })
}

/// Every named case shipped with the crate.
pub fn builtin_cases() -> Vec<GalleryCase> {
    let i = Complex64::new(0.0, 1.0);
    let mut cases = vec![triangular_involution()];
    for k in 2..=4 {
        cases.push(jlm_operator(k, 2.0).expect("k in range"));
    }
    cases.push(jlm_operator(2, 3.0).expect("k in range"));
    for z in [vec![c(1.0); 3], vec![c(1.0), c(-1.0)], vec![c(1.0), i]] {
        cases.push(schur_mixed_unitary(&z).expect("unimodular"));
    }
    let iso = LampertiRequest {
        isometric: true,
        injective: true,
        positive: true,
        ..Default::default()
    };
    let mut conj = random_lamperti(&FiniteVNA::matrix(2), 1, &iso).expect("hom on M_2");
    conj.name = "random-unitary-conjugation-m2".into();
    cases.push(conj);
    let two_by_two = FiniteVNA::from_dims(&[2, 2]).expect("valid dims");
    let mixed = LampertiRequest {
        classification: Classification::MixedJordan,
        injective: true,
        doubly: true,
        ..Default::default()
    };
    let mut swap = random_lamperti(&two_by_two, 2, &mixed).expect("mixed on M_2 ⊕ M_2");
    swap.name = "random-mixed-m2m2".into();
    cases.push(swap);
    let contractive = LampertiRequest {
        contractive: true,
        positive: true,
        p: 3.0,
        ..Default::default()
    };
    let mut l4 = random_lamperti(&FiniteVNA::abelian(4), 3, &contractive).expect("hom on ℓ⁴");
    l4.name = "random-contraction-l4".into();
    cases.push(l4);
    let weighted = FiniteVNA::new(vec![Block { dim: 2, weight: 0.5 }, Block { dim: 1, weight: 2.0 }]).expect("valid");
    let anti = LampertiRequest {
        classification: Classification::Antihom,
        contractive: true,
        p: 1.5,
        ..Default::default()
    };
    let mut a = random_lamperti(&weighted, 4, &anti).expect("antihom");
    a.name = "random-antihom-weighted".into();
    cases.push(a);
    cases
}

pub fn case_by_name(name: &str) -> Option<GalleryCase> {
    builtin_cases().into_iter().find(|c| c.name == name)
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    /// Replaces every check's own tolerance when set.
    pub tol: Option<f64>,
    pub solver: SolverOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: None,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// The quantity compared against the target, when there is one.
    pub measured: Option<f64>,
    pub detail: String,
    pub origin: Origin,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

pub fn run_case(case: &GalleryCase, opts: &RunOptions) -> CaseReport {
    let checks: Vec<CheckOutcome> = case.checks.iter().map(|ch| run_check(case, ch, opts)).collect();
    CaseReport {
        name: case.name.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Runs the cases in parallel; reports come back in input order.
pub fn run_cases(cases: &[GalleryCase], opts: &RunOptions) -> Vec<CaseReport> {
    cases.par_iter().map(|c| run_case(c, opts)).collect()
}

pub fn run_check(case: &GalleryCase, check: &Check, opts: &RunOptions) -> CheckOutcome {
    let tol = opts.tol.unwrap_or(check.tol);
    let (passed, measured, detail) = match evaluate(case, &check.kind, tol, opts) {
        Ok(v) => v,
        Err(e) => (false, None, e.to_string()),
    };
    CheckOutcome {
        name: check.name.clone(),
        passed,
        measured,
        detail,
        origin: check.origin,
    }
}

type Evaluation = (bool, Option<f64>, String);

fn within(measured: f64, expected: f64, tol: f64, what: &str) -> Evaluation {
    let err = (measured - expected).abs();
    (err <= tol, Some(measured), format!("{what} = {measured:.12} (expected {expected}, error {err:.2e})"))
}

fn below(measured: f64, bound: f64, what: &str) -> Evaluation {
    (measured <= bound, Some(measured), format!("{what} = {measured:.3e} (bound {bound:.3e})"))
}

fn evaluate(case: &GalleryCase, kind: &CheckKind, tol: f64, opts: &RunOptions) -> Result<Evaluation> {
    let m = &case.algebra;
    let t = &case.operator;
    let dopts = DecomposeOptions {
        seed: opts.seed,
        ..Default::default()
    };
    let mut g = random::rng(opts.seed ^ 0x6a11);
    Ok(match kind {
        CheckKind::Witness { e, f, violation } => {
            let (e, f) = (e.to_element(m)?, f.to_element(m)?);
            match decompose(t, 2.0, &dopts)? {
                LampertiAnalysis::NotLamperti(w) => {
                    let same = |a: &AlgElement, b: &AlgElement| (a - b).max_abs() <= 1e-12;
                    let pair = (same(&w.e, &e) && same(&w.f, &f)) || (same(&w.e, &f) && same(&w.f, &e));
                    let (ok, measured, detail) = within(w.violation, *violation, tol, "violation");
                    (ok && pair, measured, format!("{detail}; expected pair found: {pair}"))
                }
                other => (false, None, format!("decompose returned {}", other.status())),
            }
        }
        CheckKind::Classification { expected } => match decompose(t, 2.0, &dopts)? {
            LampertiAnalysis::Lamperti(d) => {
                let r = d.residuals;
                let worst = r.reconstruction.max(r.commutation).max(r.jordan).max(r.support_identity);
                (
                    d.classification == *expected && worst <= tol,
                    Some(worst),
                    format!("classification {:?}, worst residual {worst:.2e}", d.classification),
                )
            }
            other => (false, None, format!("decompose returned {}", other.status())),
        },
        CheckKind::CompletelyLamperti { expected } => match decompose(t, 2.0, &dopts)? {
            LampertiAnalysis::Lamperti(d) => {
                let got = is_completely_lamperti(&d, tol);
                (got == *expected, None, format!("completely Lamperti: {got}"))
            }
            other => (false, None, format!("decompose returned {}", other.status())),
        },
        CheckKind::UnitModulus => match decompose(t, 2.0, &dopts)? {
            LampertiAnalysis::Lamperti(d) => below((&d.b - &m.identity()).max_abs(), tol, "‖b − 1‖"),
            other => (false, None, format!("decompose returned {}", other.status())),
        },
        CheckKind::PowerIsIdentity { n } => below(t.power(*n).distance(&LpOperator::identity(m)), tol, "‖T^n − I‖"),
        CheckKind::Positive { trials } => match falsify_positivity(t, *trials, opts.seed, tol)? {
            None => (true, None, format!("no counterexample in {trials} trials")),
            Some(_) => (false, None, "found a positive x with T(x) not positive".into()),
        },
        CheckKind::ImageNorm { x, p, expected } => {
            let x = x.to_element(m)?;
            within(m.lp_norm(&t.apply(&x)?, *p)?, *expected, tol, "‖T(x)‖_p")
        }
        CheckKind::Image { x, expected } => {
            let (x, y) = (x.to_element(m)?, expected.to_element(m)?);
            below((&t.apply(&x)? - &y).max_abs(), tol, "‖T(x) − expected‖")
        }
        CheckKind::CompletelyPositive => {
            let r = choi_cp_check(t, tol);
            (r.is_cp, Some(r.min_eig), format!("Choi minimum eigenvalue {:.3e}", r.min_eig))
        }
        CheckKind::DiagonalRange { samples } => {
            let mut worst = 0.0f64;
            for _ in 0..*samples {
                let y = t.apply(&random::random_psd(&mut g, m))?;
                for blk in y.blocks() {
                    for i in 0..blk.nrows() {
                        for j in 0..blk.ncols() {
                            if i != j {
                                worst = worst.max(blk[(i, j)].norm());
                            }
                        }
                    }
                }
            }
            below(worst, tol, "max off-diagonal")
        }
        CheckKind::Contraction { p } => {
            let lb = opnorm_lower(t, *p, 50, opts.seed)?;
            below(lb.value, 1.0 + tol, "‖T‖ lower bound")
        }
        CheckKind::Isometry { ps, samples } => {
            let mut worst = 0.0f64;
            for &p in ps {
                for _ in 0..*samples {
                    let x = random::random_element(&mut g, m);
                    let nx = m.lp_norm(&x, p)?;
                    worst = worst.max((m.lp_norm(&t.apply(&x)?, p)? - nx).abs() / nx);
                }
            }
            below(worst, tol, "relative norm change")
        }
        CheckKind::DensityBounded { p } => {
            let rho = rho_of(t, *p, &dopts)?;
            let max = rho.values.iter().copied().fold(0.0, f64::max);
            below(max, 1.0 + tol, "max ρ")
        }
        CheckKind::ErgodicStabilization {
            p,
            n_max,
            samples,
            increment,
        } => {
            let eopts = ErgodicOptions {
                solver: opts.solver,
                seed: opts.seed,
                ..Default::default()
            };
            let mut monotone = true;
            let mut worst = 0.0f64;
            for _ in 0..*samples {
                let x = random::random_psd(&mut g, m);
                let r = maximal_ergodic_report(t, &x, *n_max, *p, &eopts)?;
                monotone &= profile_monotone(&r.profile, tol);
                if let [.., a, b] = r.profile.as_slice() {
                    worst = worst.max(b.ratio - a.ratio);
                }
            }
            (
                monotone && worst <= *increment,
                Some(worst),
                format!("monotone: {monotone}, last increment {worst:.3e} (bound {increment:.1e})"),
            )
        }
    })
}

/// `upper(n+1) ≥ lower(n) − tol·max(1, upper(n))` along the profile.
pub fn profile_monotone(profile: &[crate::maximal::ProfilePoint], tol: f64) -> bool {
    profile
        .windows(2)
        .all(|w| w[1].upper >= w[0].lower - tol * w[0].upper.max(1.0))
}

/// Random positive Lamperti contractions, as used by the dilation checks.
pub fn random_positive_contraction(m: &FiniteVNA, g: &mut SeededRng, p: f64) -> Result<LpOperator> {
    let req = LampertiRequest {
        classification: if g.random::<bool>() && m.dims().iter().any(|&d| d >= 2) {
            Classification::Antihom
        } else {
            Classification::Hom
        },
        p,
        contractive: true,
        positive: true,
        ..Default::default()
    };
    Ok(random_lamperti(m, g.random(), &req)?.operator)
}
