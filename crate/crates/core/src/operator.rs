//! Linear operators on `L_p(M)` stored as dense matrices in the matrix-unit basis.
//!
//! A `D×D` matrix (with `D = Σ n_k²`) acts on vectorized elements; see
//! [`FiniteVNA::vectorize`] for the index convention. Operators built from a
//! structured recipe (Kraus pairs, a conjugation, a Schur multiplier, a `wbJ`
//! triple) remember it in [`StructuredForm`], but every computation goes through
//! the dense matrix.


use crate::algebra::{conjugate_exponent, AlgElement, FiniteVNA};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::random;

/// Default tolerance for the Jordan/multiplicativity flags of a [`JordanMap`].
pub const DEFAULT_JORDAN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum StructuredForm {
    Generic,
    /// `T(x) = Σ a_i* x b_i`.
    Kraus {
        a: Vec<AlgElement>,
        b: Vec<AlgElement>,
    },
    /// `T(x) = r x r*`.
    Conjugation { r: AlgElement },
    /// Entrywise multiplication by `m`, block by block.
    Schur { m: AlgElement },
    /// `T(x) = w b J(x)`.
    WbJ {
        w: AlgElement,
        b: AlgElement,
        j: Box<JordanMap>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOperator {
    algebra: FiniteVNA,
    matrix: CMat,
    form: StructuredForm,
}

impl LpOperator {
    pub fn from_dense(algebra: &FiniteVNA, matrix: CMat) -> Result<Self> {
        let d = algebra.vec_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Shape(format!(
                "operator matrix is {}x{}, algebra needs {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("operator matrix has non-finite entries".into()));
        }
        Ok(Self {
            algebra: algebra.clone(),
            matrix,
            form: StructuredForm::Generic,
        })
    }

    /// Tabulates a linear map on the matrix-unit basis.
    pub fn from_fn(algebra: &FiniteVNA, f: impl Fn(&AlgElement) -> AlgElement) -> Self {
        let d = algebra.vec_dim();
        let mut matrix = CMat::zeros(d, d);
        for (col, e) in algebra.basis().iter().enumerate() {
            matrix.set_column(col, &algebra.vectorize(&f(e)));
        }
        Self {
            algebra: algebra.clone(),
            matrix,
            form: StructuredForm::Generic,
        }
    }

    pub fn identity(algebra: &FiniteVNA) -> Self {
        let d = algebra.vec_dim();
        Self {
            algebra: algebra.clone(),
            matrix: CMat::identity(d, d),
            form: StructuredForm::Generic,
        }
    }

    pub fn zero(algebra: &FiniteVNA) -> Self {
        let d = algebra.vec_dim();
        Self {
            algebra: algebra.clone(),
            matrix: CMat::zeros(d, d),
            form: StructuredForm::Generic,
        }
    }

    pub fn conjugation(algebra: &FiniteVNA, r: AlgElement) -> Result<Self> {
        algebra.check(&r)?;
        let rs = r.adjoint();
        let mut op = Self::from_fn(algebra, |x| &(&r * x) * &rs);
        op.form = StructuredForm::Conjugation { r };
        Ok(op)
    }

    pub fn kraus(algebra: &FiniteVNA, a: Vec<AlgElement>, b: Vec<AlgElement>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Shape(format!(
                "{} left and {} right Kraus factors",
                a.len(),
                b.len()
            )));
        }
        for x in a.iter().chain(&b) {
            algebra.check(x)?;
        }
        let astar: Vec<AlgElement> = a.iter().map(AlgElement::adjoint).collect();
        let mut op = Self::from_fn(algebra, |x| {
            let mut acc = algebra.zeros();
            for (ai, bi) in astar.iter().zip(&b) {
                acc = &acc + &(&(ai * x) * bi);
            }
            acc
        });
        op.form = StructuredForm::Kraus { a, b };
        Ok(op)
    }

    pub fn schur(algebra: &FiniteVNA, m: AlgElement) -> Result<Self> {
        algebra.check(&m)?;
        let mut op = Self::from_fn(algebra, |x| {
            AlgElement::from_blocks(
                x.blocks()
                    .iter()
                    .zip(m.blocks())
                    .map(|(xb, mb)| xb.component_mul(mb))
                    .collect(),
            )
        });
        op.form = StructuredForm::Schur { m };
        Ok(op)
    }

    /// `T(x) = w b J(x)`; no Lamperti conditions are checked here.
    pub fn from_wbj(w: AlgElement, b: AlgElement, j: JordanMap) -> Result<Self> {
        let algebra = j.algebra.clone();
        algebra.check(&w)?;
        algebra.check(&b)?;
        let wb = &w * &b;
        let left = left_multiplication(&algebra, &wb);
        Ok(Self {
            matrix: left * &j.matrix,
            algebra,
            form: StructuredForm::WbJ { w, b, j: Box::new(j) },
        })
    }

    /// Blockwise transpose `x ↦ xᵀ`, a *-anti-automorphism.
    pub fn transpose_map(algebra: &FiniteVNA) -> Self {
        Self::from_fn(algebra, AlgElement::transpose)
    }

    /// Left multiplication `x ↦ a x`.
    pub fn left_mul(algebra: &FiniteVNA, a: &AlgElement) -> Result<Self> {
        algebra.check(a)?;
        Ok(Self {
            algebra: algebra.clone(),
            matrix: left_multiplication(algebra, a),
            form: StructuredForm::Generic,
        })
    }

    pub fn algebra(&self) -> &FiniteVNA {
        &self.algebra
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn form(&self) -> &StructuredForm {
        &self.form
    }

    pub fn apply(&self, x: &AlgElement) -> Result<AlgElement> {
        self.algebra.check(x)?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &AlgElement) -> AlgElement {
        let v = &self.matrix * self.algebra.vectorize(x);
        self.algebra.devectorize(&v)
    }

    /// Images of the matrix units.
    pub fn basis_images(&self) -> Vec<AlgElement> {
        (0..self.matrix.ncols())
            .map(|j| self.algebra.devectorize(&self.matrix.column(j).into_owned()))
            .collect()
    }

    /// Max entrywise deviation between the dense matrix and the structured recipe.
    pub fn structured_residual(&self) -> f64 {
        let rebuilt = match &self.form {
            StructuredForm::Generic => return 0.0,
            StructuredForm::Kraus { a, b } => Self::kraus(&self.algebra, a.clone(), b.clone()),
            StructuredForm::Conjugation { r } => Self::conjugation(&self.algebra, r.clone()),
            StructuredForm::Schur { m } => Self::schur(&self.algebra, m.clone()),
            StructuredForm::WbJ { w, b, j } => {
                let wb = w * b;
                let jm = j.as_ref().clone();
                Ok(Self::from_fn(&self.algebra, |x| &wb * &jm.apply_unchecked(x)))
            }
        };
        match rebuilt {
            Ok(op) => linalg::max_abs(&(&op.matrix - &self.matrix)),
            Err(_) => f64::INFINITY,
        }
    }

    fn same_algebra(&self, other: &Self) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::Shape("operators act on different algebras".into()));
        }
        Ok(())
    }

    /// Trace-duality adjoint: `τ(T(x) y) = τ(x T*(y))`.
    pub fn adjoint(&self) -> Self {
        let m = &self.algebra;
        let d = m.vec_dim();
        // Bilinear form of τ(xy) in the vectorized basis: B = W Π with Π the in-block
        // transposition permutation. Then T* = B⁻¹ Tᵀ B.
        let mut perm = vec![0usize; d];
        let mut weight = vec![0.0; d];
        for (idx, (p, w)) in perm.iter_mut().zip(weight.iter_mut()).enumerate() {
            let (k, i, j) = m.basis_position(idx);
            *p = m.basis_index(k, j, i);
            *w = m.blocks()[k].weight;
        }
        let t = &self.matrix;
        // (B⁻¹ Tᵀ B)[a][b] = w_{π a}⁻¹ T[π b][π a] w_{π b}
        let matrix = CMat::from_fn(d, d, |a, b| {
            let (pa, pb) = (perm[a], perm[b]);
            t[(pb, pa)] * (weight[pb] / weight[pa])
        });
        let form = match &self.form {
            StructuredForm::Conjugation { r } => StructuredForm::Conjugation { r: r.adjoint() },
            StructuredForm::Kraus { a, b } => StructuredForm::Kraus {
                a: b.iter().map(AlgElement::adjoint).collect(),
                b: a.iter().map(AlgElement::adjoint).collect(),
            },
            StructuredForm::Schur { m } => StructuredForm::Schur { m: m.transpose() },
            _ => StructuredForm::Generic,
        };
        Self {
            algebra: m.clone(),
            matrix,
            form,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        let form = match (&self.form, &other.form) {
            (StructuredForm::Conjugation { r: r1 }, StructuredForm::Conjugation { r: r2 }) => {
                StructuredForm::Conjugation { r: r1 * r2 }
            }
            _ => StructuredForm::Generic,
        };
        Ok(Self {
            algebra: self.algebra.clone(),
            matrix: &self.matrix * &other.matrix,
            form,
        })
    }

    pub fn scale(&self, alpha: C64) -> Self {
        let form = match &self.form {
            StructuredForm::Conjugation { r } if alpha.im == 0.0 && alpha.re >= 0.0 => {
                StructuredForm::Conjugation {
                    r: r.scale_re(alpha.re.sqrt()),
                }
            }
            _ => StructuredForm::Generic,
        };
        Self {
            algebra: self.algebra.clone(),
            matrix: &self.matrix * alpha,
            form,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        Ok(Self {
            algebra: self.algebra.clone(),
            matrix: &self.matrix + &other.matrix,
            form: StructuredForm::Generic,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        Ok(Self {
            algebra: self.algebra.clone(),
            matrix: &self.matrix - &other.matrix,
            form: StructuredForm::Generic,
        })
    }

    /// `T^n` (`T^0` is the identity).
    pub fn power(&self, n: usize) -> Self {
        let mut acc = Self::identity(&self.algebra);
        for _ in 0..n {
            acc = self.compose(&acc).expect("same algebra");
        }
        if n == 1 {
            return self.clone();
        }
        acc
    }

    /// Max entrywise distance between the dense matrices.
    pub fn distance(&self, other: &Self) -> f64 {
        linalg::max_abs(&(&self.matrix - &other.matrix))
    }

    /// Max over matrix units `e` of `‖T(e)‖_∞`; the scale used for relative tolerances.
    pub fn basis_scale(&self) -> f64 {
        self.basis_images()
            .iter()
            .map(AlgElement::norm_inf)
            .fold(0.0, f64::max)
    }
}

/// `Σ λ_i T_i` with `λ_i ≥ 0`, `Σ λ_i = 1`.
pub fn convex_combine(weights: &[f64], ops: &[LpOperator]) -> Result<LpOperator> {
    if weights.len() != ops.len() || ops.is_empty() {
        return Err(Error::Domain(format!(
            "{} weights for {} operators",
            weights.len(),
            ops.len()
        )));
    }
    if weights.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::Domain("convex weights must be non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("convex weights sum to {total}, not 1")));
    }
    let first = &ops[0];
    let mut matrix = CMat::zeros(first.matrix.nrows(), first.matrix.ncols());
    for (l, op) in weights.iter().zip(ops) {
        first.same_algebra(op)?;
        matrix += op.matrix.scale(*l);
    }
    if ops.len() == 1 {
        return Ok(first.clone());
    }
    Ok(LpOperator {
        algebra: first.algebra.clone(),
        matrix,
        form: StructuredForm::Generic,
    })
}

fn left_multiplication(algebra: &FiniteVNA, a: &AlgElement) -> CMat {
    let d = algebra.vec_dim();
    let mut matrix = CMat::zeros(d, d);
    for (col, e) in algebra.basis().iter().enumerate() {
        matrix.set_column(col, &algebra.vectorize(&(a * e)));
    }
    matrix
}

/// Result of the Choi-matrix test.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiReport {
    pub is_cp: bool,
    /// Smallest eigenvalue of the Hermitian part of the Choi matrix.
    pub min_eig: f64,
    /// `‖C − C*‖_∞`; non-zero means `T` does not preserve adjoints.
    pub hermitian_defect: f64,
}

/// Choi matrix of `T∘E` where `E` is the block-diagonal compression of `M_N`,
/// `N = Σ n_k`. Entry `((a,c),(b,d))` is `T(E(E_ab))_{cd}` in ambient coordinates.
pub fn choi_matrix(t: &LpOperator) -> CMat {
    let m = t.algebra();
    let dims = m.dims();
    let mut start = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for &n in &dims {
        start.push(acc);
        acc += n;
    }
    let n = acc;
    let mut choi = CMat::zeros(n * n, n * n);
    let images = t.basis_images();
    for (k, &dk) in dims.iter().enumerate() {
        for i in 0..dk {
            for j in 0..dk {
                let img = &images[m.basis_index(k, i, j)];
                let (a, b) = (start[k] + i, start[k] + j);
                for (l, &dl) in dims.iter().enumerate() {
                    let blk = img.block(l);
                    for r in 0..dl {
                        for s in 0..dl {
                            let (cc, dd) = (start[l] + r, start[l] + s);
                            choi[(a * n + cc, b * n + dd)] = blk[(r, s)];
                        }
                    }
                }
            }
        }
    }
    choi
}

pub fn choi_cp_check(t: &LpOperator, tol: f64) -> ChoiReport {
    let choi = choi_matrix(t);
    let hermitian_defect = linalg::spectral_norm(&(&choi - choi.adjoint()));
    let min_eig = linalg::min_eig(&choi);
    let scale = linalg::spectral_norm(&choi).max(1.0);
    ChoiReport {
        is_cp: min_eig >= -tol * scale && hermitian_defect <= tol * scale,
        min_eig,
        hermitian_defect,
    }
}

/// Randomized search for a positive `x` with `T(x)` not positive.
///
/// Samples alternate between full-rank Wishart elements and rank-one elements.
/// `None` is evidence of positivity, not a proof.
pub fn falsify_positivity(
    t: &LpOperator,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<Option<AlgElement>> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let m = t.algebra();
    let mut rng = random::rng(seed);
    for trial in 0..trials {
        let x = if trial % 2 == 0 {
            random::random_psd(&mut rng, m)
        } else {
            random::random_rank_one_psd(&mut rng, m)
        };
        let y = t.apply_unchecked(&x);
        let scale = y.norm_inf().max(x.norm_inf()).max(1e-300);
        let herm_defect = (&y - &y.adjoint()).norm_inf();
        if herm_defect > tol * scale || y.min_eigenvalue() < -tol * scale {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug)]
pub struct NormLowerBound {
    /// `‖T x‖_p / ‖x‖_p` at the witness; a certified lower bound on `‖T‖_{p→p}`.
    pub value: f64,
    pub witness: AlgElement,
}

/// Element `x` with `‖x‖_{q'} = 1` and `τ(x v) = ‖v‖_q` (the norming functional of `v`).
fn norming_dual(m: &FiniteVNA, v: &AlgElement, q: f64) -> Option<AlgElement> {
    let nv = m.lp_norm_unchecked(v, q);
    if !(nv > 0.0) {
        return None;
    }
    let (w, b) = m.polar(v).ok()?;
    let bp = m.funcalc(&b, |t| if t > 0.0 { t.powf(q - 1.0) } else { 0.0 }).ok()?;
    Some((&bp * &w.adjoint()).scale_re(1.0 / nv.powf(q - 1.0)))
}

/// Lower bound on `‖T‖_{L_p→L_p}` by the norming-functional power iteration
/// `x ← dual_{p'}(T*(dual_p(T x)))`, which never decreases `‖Tx‖_p`.
///
/// Starts from every matrix unit, every central projection and `restarts` random
/// elements; the best ratio seen is returned together with its witness.
pub fn opnorm_lower(t: &LpOperator, p: f64, iterations: usize, seed: u64) -> Result<NormLowerBound> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("opnorm_lower needs 1 < p < ∞, got {p}")));
    }
    let m = t.algebra();
    let tstar = t.adjoint();
    let pp = conjugate_exponent(p);
    let mut starts: Vec<AlgElement> = m.basis();
    starts.extend(m.center_basis());
    starts.push(m.identity());
    let mut rng = random::rng(seed);
    for _ in 0..4 {
        starts.push(random::random_element(&mut rng, m));
    }

    let mut best = NormLowerBound {
        value: 0.0,
        witness: starts[0].clone(),
    };
    let ratio = |x: &AlgElement| {
        let nx = m.lp_norm_unchecked(x, p);
        if nx > 0.0 {
            m.lp_norm_unchecked(&t.apply_unchecked(x), p) / nx
        } else {
            0.0
        }
    };
    for start in starts {
        let mut x = start;
        let r = ratio(&x);
        if r > best.value {
            best = NormLowerBound { value: r, witness: x.clone() };
        }
        for _ in 0..iterations {
            let Some(z) = norming_dual(m, &t.apply_unchecked(&x), p) else { break };
            let Some(next) = norming_dual(m, &tstar.apply_unchecked(&z), pp) else { break };
            x = next;
            let r = ratio(&x);
            if r > best.value {
                best = NormLowerBound { value: r, witness: x.clone() };
            }
        }
    }
    Ok(best)
}

/// A linear map `M → M` together with its Jordan-structure residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct JordanMap {
    algebra: FiniteVNA,
    matrix: CMat,
    pub residuals: JordanResiduals,
    pub is_hom: bool,
    pub is_antihom: bool,
    pub is_jordan: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct JordanResiduals {
    /// `max ‖J(x*) − J(x)*‖_∞` over matrix units.
    pub star: f64,
    /// `max ‖J(xy + yx) − J(x)J(y) − J(y)J(x)‖_∞` over pairs of matrix units.
    pub jordan: f64,
    /// `max ‖J(xy) − J(x)J(y)‖_∞`.
    pub hom: f64,
    /// `max ‖J(xy) − J(y)J(x)‖_∞`.
    pub antihom: f64,
}

impl JordanMap {
    pub fn new(algebra: &FiniteVNA, matrix: CMat, tol: f64) -> Result<Self> {
        let op = LpOperator::from_dense(algebra, matrix)?;
        Ok(Self::from_operator(&op, tol))
    }

    pub fn from_operator(op: &LpOperator, tol: f64) -> Self {
        let m = op.algebra();
        let images = op.basis_images();
        let residuals = jordan_residuals(m, &images);
        let scale = images.iter().map(AlgElement::norm_inf).fold(1.0, f64::max);
        let t = tol * scale;
        let star_ok = residuals.star <= t;
        Self {
            algebra: m.clone(),
            matrix: op.matrix().clone(),
            is_jordan: star_ok && residuals.jordan <= t,
            is_hom: star_ok && residuals.hom <= t,
            is_antihom: star_ok && residuals.antihom <= t,
            residuals,
        }
    }

    pub fn algebra(&self) -> &FiniteVNA {
        &self.algebra
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, x: &AlgElement) -> Result<AlgElement> {
        self.algebra.check(x)?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &AlgElement) -> AlgElement {
        self.algebra
            .devectorize(&(&self.matrix * self.algebra.vectorize(x)))
    }

    pub fn as_operator(&self) -> LpOperator {
        LpOperator {
            algebra: self.algebra.clone(),
            matrix: self.matrix.clone(),
            form: StructuredForm::Generic,
        }
    }

    /// `J^n` as a Jordan map (flags recomputed).
    pub fn power(&self, n: usize, tol: f64) -> Self {
        Self::from_operator(&self.as_operator().power(n), tol)
    }
}

/// Residuals of the Jordan identities on all pairs of matrix units.
///
/// Products of matrix units are matrix units or zero, so `J(e_a e_b)` is read
/// from the tabulated images.
pub(crate) fn jordan_residuals(m: &FiniteVNA, images: &[AlgElement]) -> JordanResiduals {
    let d = m.vec_dim();
    let zero = m.zeros();
    let mut r = JordanResiduals::default();
    let prod_index = |a: usize, b: usize| -> Option<usize> {
        let (k1, i1, j1) = m.basis_position(a);
        let (k2, i2, j2) = m.basis_position(b);
        (k1 == k2 && j1 == i2).then(|| m.basis_index(k1, i1, j2))
    };
    for a in 0..d {
        let (k, i, j) = m.basis_position(a);
        let adj = images[m.basis_index(k, j, i)].clone();
        r.star = r.star.max((&adj - &images[a].adjoint()).norm_inf());
        for b in 0..d {
            let jab = prod_index(a, b).map_or(&zero, |ix| &images[ix]);
            let jba = prod_index(b, a).map_or(&zero, |ix| &images[ix]);
            let xy = &images[a] * &images[b];
            let yx = &images[b] * &images[a];
            r.hom = r.hom.max((jab - &xy).norm_inf());
            r.antihom = r.antihom.max((jab - &yx).norm_inf());
            let lhs = jab + jba;
            r.jordan = r.jordan.max((&lhs - &(&xy + &yx)).norm_inf());
        }
    }
    r
}
