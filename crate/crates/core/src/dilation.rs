//! Dilations of Lamperti contractions.
//!
//! Two constructions are provided.
//!
//! * Shift dilation: for a Lamperti contraction `T` with density `ρ`, the map
//!   `U_T(x₀, x₁, …) = (T x₀, S_T x₀, x₁, …)` with `S_T x = (1 − ρ)^{1/p} x` is an
//!   isometry of `ℓ_p(L_p(M))` and `j U_{T₁} ⋯ U_{T_m} i = T₁ ⋯ T_m`. Sequences are
//!   kept with finite, growing support, so nothing is truncated.
//! * Tensor N-dilation of `Σ λ_i T_i`: on `Y = ℓ_p^{#I}(ℓ_p^N(·))` with
//!   `I = {1..n}^N`, `J x = ((λ_i/N)^{1/p}(x, …, x))_i`,
//!   `Q((x_{k,i})) = Σ_i (λ_i/N)^{1/p'} Σ_k x_{k,i}` and
//!   `U((x_{k,i})) = (T_{i_k} x_{σ(k),i})` with `σ` the `N`-cycle, one has
//!   `(Σ λ_i T_i)^m = Q U^m J` for `m ≤ N`. Non-isometric `T_i` are first replaced
//!   by their shift dilations.
//!
//! `Q`, `J` and `U` are applied structurally (index arithmetic over the tensor
//! coordinates) rather than materialized as dense matrices.

use crate::algebra::{conjugate_exponent, AlgElement, FiniteVNA};
use crate::error::{Error, Result};
use crate::lamperti::{self, DecomposeOptions, LampertiAnalysis};
use crate::operator::{convex_combine, opnorm_lower, LpOperator};
use crate::random::{self, SeededRng};

/// Default ceiling on `n^N · N · slots · D` for tensor dilations.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Iterations of the norm lower bound used in the contraction precondition.
const NORM_ITERATIONS: usize = 40;

/// Finitely supported element of `ℓ_p(L_p(M))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqElement {
    slots: Vec<AlgElement>,
}

impl SeqElement {
    pub fn new(slots: Vec<AlgElement>) -> Self {
        Self { slots }
    }

    /// `i(x) = (x, 0, 0, …)`.
    pub fn embed(x: AlgElement) -> Self {
        Self { slots: vec![x] }
    }

    /// `j((x₀, x₁, …)) = x₀`; zero if the support is empty.
    pub fn head(&self, m: &FiniteVNA) -> AlgElement {
        self.slots.first().cloned().unwrap_or_else(|| m.zeros())
    }

    pub fn slots(&self) -> &[AlgElement] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// `(Σ_n ‖x_n‖_p^p)^{1/p}`.
    pub fn norm(&self, m: &FiniteVNA, p: f64) -> f64 {
        self.slots
            .iter()
            .map(|x| m.lp_norm_unchecked(x, p).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    fn norm_pow(&self, m: &FiniteVNA, p: f64) -> f64 {
        self.slots.iter().map(|x| m.lp_norm_unchecked(x, p).powf(p)).sum()
    }

}

/// One contraction together with its defect `S_T = (1 − ρ)^{1/p}`.
#[derive(Clone, Debug)]
pub struct ShiftComponent {
    pub t: LpOperator,
    /// Central multiplier `(1 − ρ)^{1/p}`.
    pub defect: AlgElement,
    /// `ρ` per block.
    pub rho: Vec<f64>,
    /// `ρ = 1` within tolerance, so `S_T = 0`.
    pub isometric: bool,
}

impl ShiftComponent {
    pub fn apply_defect(&self, x: &AlgElement) -> AlgElement {
        &self.defect * x
    }

    /// `U_T(x₀, x₁, …) = (T x₀, S_T x₀, x₁, …)`.
    pub fn apply(&self, v: &SeqElement) -> SeqElement {
        let Some((x0, rest)) = v.slots.split_first() else {
            return v.clone();
        };
        let mut slots = Vec::with_capacity(v.len() + 1);
        slots.push(self.t.apply_unchecked(x0));
        slots.push(self.apply_defect(x0));
        slots.extend(rest.iter().cloned());
        SeqElement { slots }
    }
}

/// Simultaneous shift dilation of a family of Lamperti contractions.
#[derive(Clone, Debug)]
pub struct ShiftSystem {
    algebra: FiniteVNA,
    p: f64,
    components: Vec<ShiftComponent>,
}

/// Absolute tolerance on `ρ ≤ 1` and `‖T‖ ≤ 1`.
pub const CONTRACTION_TOL: f64 = 1e-9;

/// Builds the shift dilation of a single Lamperti contraction.
pub fn shift_dilation(t: &LpOperator, p: f64, opts: &DecomposeOptions) -> Result<ShiftSystem> {
    shift_dilation_family(std::slice::from_ref(t), p, opts)
}

/// Builds one shift dilation per operator on a common sequence space.
pub fn shift_dilation_family(
    ops: &[LpOperator],
    p: f64,
    opts: &DecomposeOptions,
) -> Result<ShiftSystem> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("shift dilation needs 1 ≤ p < ∞, got {p}")));
    }
    let Some(first) = ops.first() else {
        return Err(Error::Shape("empty operator family".into()));
    };
    let m = first.algebra().clone();
    let mut components = Vec::with_capacity(ops.len());
    for (idx, t) in ops.iter().enumerate() {
        if !t.algebra().same_shape(&m) {
            return Err(Error::Shape(format!("operator {idx} acts on a different algebra")));
        }
        components.push(shift_component(t, p, opts).map_err(|e| match e {
            Error::Domain(s) => Error::Domain(format!("operator {idx}: {s}")),
            other => other,
        })?);
    }
    Ok(ShiftSystem {
        algebra: m,
        p,
        components,
    })
}

fn shift_component(t: &LpOperator, p: f64, opts: &DecomposeOptions) -> Result<ShiftComponent> {
    let m = t.algebra();
    let dens = lamperti::rho_of(t, p, opts)?;
    let worst = dens.values.iter().cloned().fold(0.0f64, f64::max);
    if worst > 1.0 + CONTRACTION_TOL {
        return Err(Error::Domain(format!(
            "not a contraction: max ρ = {worst} (‖T‖ = {})",
            worst.powf(1.0 / p)
        )));
    }
    if p > 1.0 {
        let lower = opnorm_lower(t, p, NORM_ITERATIONS, opts.seed)?.value;
        if lower > 1.0 + CONTRACTION_TOL.max(opts.tol) {
            return Err(Error::Domain(format!("not a contraction: ‖T‖ ≥ {lower}")));
        }
    }
    let defect_vals: Vec<f64> = dens
        .values
        .iter()
        .map(|&r| (1.0 - r).max(0.0).powf(1.0 / p))
        .collect();
    let isometric = dens
        .values
        .iter()
        .all(|&r| (1.0 - r).abs() <= CONTRACTION_TOL);
    Ok(ShiftComponent {
        t: t.clone(),
        defect: m.central_from(&defect_vals),
        rho: dens.values,
        isometric,
    })
}

/// `j U_{w₁} ⋯ U_{w_m} i (x)` next to the direct product `T_{w₁} ⋯ T_{w_m} x`.
#[derive(Clone, Debug)]
pub struct WordResult {
    pub value: AlgElement,
    pub direct: AlgElement,
    /// `‖value − direct‖_∞`.
    pub residual: f64,
}

impl ShiftSystem {
    pub fn algebra(&self) -> &FiniteVNA {
        &self.algebra
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn components(&self) -> &[ShiftComponent] {
        &self.components
    }

    /// `U_T` of the `index`-th operator.
    pub fn apply(&self, index: usize, v: &SeqElement) -> Result<SeqElement> {
        let c = self.component(index)?;
        for x in &v.slots {
            self.algebra.check(x)?;
        }
        Ok(c.apply(v))
    }

    fn component(&self, index: usize) -> Result<&ShiftComponent> {
        self.components.get(index).ok_or_else(|| {
            Error::Shape(format!(
                "operator index {index} out of range (family of {})",
                self.components.len()
            ))
        })
    }

    /// `‖Tx‖_p^p + ‖S_T x‖_p^p − ‖x‖_p^p`, which vanishes exactly.
    pub fn balance(&self, index: usize, x: &AlgElement) -> Result<f64> {
        let c = self.component(index)?;
        self.algebra.check(x)?;
        let m = &self.algebra;
        let p = self.p;
        Ok(m.lp_norm_unchecked(&c.t.apply_unchecked(x), p).powf(p)
            + m.lp_norm_unchecked(&c.apply_defect(x), p).powf(p)
            - m.lp_norm_unchecked(x, p).powf(p))
    }

    /// `(‖Tx‖_p^p − ‖x‖_p^p) − τ((ρ − 1)|x|^p)`, which vanishes exactly.
    pub fn trace_identity_residual(&self, index: usize, x: &AlgElement) -> Result<f64> {
        let c = self.component(index)?;
        self.algebra.check(x)?;
        let m = &self.algebra;
        let p = self.p;
        let lhs = m.lp_norm_unchecked(&c.t.apply_unchecked(x), p).powf(p) - m.lp_norm_unchecked(x, p).powf(p);
        let (_, absx) = m.polar(x)?;
        let absp = m.funcalc(&absx, |s| if s > 0.0 { s.powf(p) } else { 0.0 })?;
        let shifted: Vec<f64> = c.rho.iter().map(|r| r - 1.0).collect();
        let rhs = m.trace_unchecked(&(&m.central_from(&shifted) * &absp)).re;
        Ok(lhs - rhs)
    }

    /// Applies the word right-to-left through the dilation and directly.
    pub fn simultaneous_apply(&self, word: &[usize], x: &AlgElement) -> Result<WordResult> {
        self.algebra.check(x)?;
        for &w in word {
            self.component(w)?;
        }
        let mut v = SeqElement::embed(x.clone());
        let mut direct = x.clone();
        for &w in word.iter().rev() {
            let c = &self.components[w];
            v = c.apply(&v);
            direct = c.t.apply_unchecked(&direct);
        }
        let value = v.head(&self.algebra);
        let residual = (&value - &direct).norm_inf();
        Ok(WordResult {
            value,
            direct,
            residual,
        })
    }

    /// Max of `|‖U_T v‖_p − ‖v‖_p|` over random sequences and all operators.
    pub fn verify_isometry(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = random::rng(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let len = 1 + (random::uniform(&mut rng, 0.0, 4.0) as usize);
            let v = random_seq(&mut rng, &self.algebra, len);
            let n0 = v.norm(&self.algebra, self.p);
            for c in &self.components {
                let n1 = c.apply(&v).norm(&self.algebra, self.p);
                worst = worst.max((n1 - n0).abs());
            }
        }
        worst
    }
}

fn random_seq(rng: &mut SeededRng, m: &FiniteVNA, len: usize) -> SeqElement {
    SeqElement::new((0..len).map(|_| random::random_element(rng, m)).collect())
}

fn random_psd_seq(rng: &mut SeededRng, m: &FiniteVNA, len: usize) -> SeqElement {
    SeqElement::new((0..len).map(|_| random::random_psd(rng, m)).collect())
}

/// An element of the tensor dilation space: `coords[i][k]` for tuple `i`, copy `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorVec {
    coords: Vec<Vec<SeqElement>>,
}

impl TensorVec {
    pub fn coords(&self) -> &[Vec<SeqElement>] {
        &self.coords
    }

    pub fn norm(&self, m: &FiniteVNA, p: f64) -> f64 {
        self.coords
            .iter()
            .flatten()
            .map(|s| s.norm_pow(m, p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// How each `T_i` enters the tensor construction.
#[derive(Clone, Debug)]
enum Factor {
    /// `T` acts slotwise; used when `T` is isometric or lifting is disabled.
    Plain(LpOperator),
    /// The shift dilation `U_T`.
    Shift(ShiftComponent),
}

impl Factor {
    fn apply(&self, v: &SeqElement) -> SeqElement {
        match self {
            Factor::Plain(t) => SeqElement::new(v.slots.iter().map(|x| t.apply_unchecked(x)).collect()),
            Factor::Shift(c) => c.apply(v),
        }
    }
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TensorDimensions {
    /// `#I = n^N`.
    pub index_set: usize,
    pub copies: usize,
    /// Sequence slots needed per coordinate (1 without lifting, `N + 1` with).
    pub slots: usize,
    /// `dim_C M`.
    pub element_dim: usize,
    /// Product of the above.
    pub total: usize,
}

#[derive(Clone, Debug)]
pub struct TensorSystem {
    algebra: FiniteVNA,
    p: f64,
    lambda: Vec<f64>,
    factors: Vec<Factor>,
    ops: Vec<LpOperator>,
    n_copies: usize,
    /// `λ_i` of each tuple, tuples ordered with the first copy varying fastest.
    tuple_weights: Vec<f64>,
    lifted: bool,
    dims: TensorDimensions,
}

#[derive(Clone, Debug)]
pub struct TensorOptions {
    /// Replace non-isometric operators by their shift dilations.
    pub lift: bool,
    pub budget: usize,
    pub decompose: DecomposeOptions,
}

impl Default for TensorOptions {
    fn default() -> Self {
        Self {
            lift: true,
            budget: DEFAULT_BUDGET,
            decompose: DecomposeOptions::default(),
        }
    }
}

/// Builds the tensor N-dilation of `Σ λ_i T_i`.
///
/// With `lift = false` the operators are used as given, which keeps the
/// factorization but loses the isometry of `U` for strict contractions.
pub fn convex_n_dilation(
    lambda: &[f64],
    ops: &[LpOperator],
    n_copies: usize,
    p: f64,
    opts: &TensorOptions,
) -> Result<TensorSystem> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("tensor dilation needs 1 < p < ∞, got {p}")));
    }
    if n_copies == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    if lambda.len() != ops.len() || ops.is_empty() {
        return Err(Error::Shape(format!(
            "{} weights for {} operators",
            lambda.len(),
            ops.len()
        )));
    }
    // Validates weights and shapes.
    convex_combine(lambda, ops)?;
    let m = ops[0].algebra().clone();
    let n = ops.len();

    let index_set = checked_pow(n, n_copies);
    let mut comps = Vec::with_capacity(n);
    for (idx, t) in ops.iter().enumerate() {
        comps.push(shift_component(t, p, &opts.decompose).map_err(|e| match e {
            Error::Domain(s) => Error::Domain(format!("operator {idx}: {s}")),
            other => other,
        })?);
    }
    let lifted = opts.lift && comps.iter().any(|c| !c.isometric);
    let slots = if lifted { n_copies + 1 } else { 1 };
    let total = index_set
        .and_then(|a| a.checked_mul(n_copies))
        .and_then(|a| a.checked_mul(slots))
        .and_then(|a| a.checked_mul(m.vec_dim()));
    let Some(total) = total.filter(|&t| t <= opts.budget) else {
        return Err(Error::Resource {
            required: total.unwrap_or(usize::MAX),
            budget: opts.budget,
        });
    };
    let index_set = index_set.unwrap_or(usize::MAX);

    let factors = comps
        .into_iter()
        .map(|c| if lifted { Factor::Shift(c) } else { Factor::Plain(c.t) })
        .collect();
    let tuple_weights = (0..index_set)
        .map(|i| {
            digits(i, n, n_copies)
                .map(|d| lambda[d])
                .product::<f64>()
        })
        .collect();
    Ok(TensorSystem {
        algebra: m.clone(),
        p,
        lambda: lambda.to_vec(),
        factors,
        ops: ops.to_vec(),
        n_copies,
        tuple_weights,
        lifted,
        dims: TensorDimensions {
            index_set,
            copies: n_copies,
            slots,
            element_dim: m.vec_dim(),
            total,
        },
    })
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Base-`n` digits of `i`, least significant first, `len` of them.
fn digits(mut i: usize, n: usize, len: usize) -> impl Iterator<Item = usize> {
    (0..len).map(move |_| {
        let d = i % n;
        i /= n;
        d
    })
}

/// Verification data for a tensor dilation.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TensorReport {
    /// `max_e ‖(Σλ_iT_i)^m e − Q U^m J e‖_∞` over matrix units, for `m = 0..=N`.
    pub residuals: Vec<f64>,
    /// `max_e ‖Q J e − e‖_∞`.
    pub qj_residual: f64,
    /// Worst `|‖Jx‖_p − ‖x‖_p|` on samples.
    pub j_isometry_deviation: f64,
    /// Worst `‖Qv‖_p − ‖v‖_p` on samples (non-positive for a contraction).
    pub q_contraction_excess: f64,
    /// Worst `|‖Uv‖_p − ‖v‖_p|` on samples.
    pub isometry_deviation: f64,
    /// Smallest eigenvalue seen in `J`, `U`, `Q` images of positive inputs, when
    /// every operator is positive.
    pub positivity_min_eig: Option<f64>,
    pub lifted: bool,
    pub dimensions: TensorDimensions,
}

impl TensorSystem {
    pub fn algebra(&self) -> &FiniteVNA {
        &self.algebra
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn n_copies(&self) -> usize {
        self.n_copies
    }

    pub fn is_lifted(&self) -> bool {
        self.lifted
    }

    pub fn dimensions(&self) -> TensorDimensions {
        self.dims
    }

    /// `Σ λ_i T_i`.
    pub fn combination(&self) -> LpOperator {
        convex_combine(&self.lambda, &self.ops).expect("validated at construction")
    }

    fn tuple(&self, i: usize) -> impl Iterator<Item = usize> {
        digits(i, self.ops.len(), self.n_copies)
    }

    pub fn embed(&self, x: &AlgElement) -> Result<TensorVec> {
        self.algebra.check(x)?;
        Ok(self.embed_unchecked(x))
    }

    fn embed_unchecked(&self, x: &AlgElement) -> TensorVec {
        let nn = self.n_copies as f64;
        let coords = self
            .tuple_weights
            .iter()
            .map(|&li| {
                let s = SeqElement::embed(x.scale_re((li / nn).powf(1.0 / self.p)));
                vec![s; self.n_copies]
            })
            .collect();
        TensorVec { coords }
    }

    pub fn compress(&self, v: &TensorVec) -> Result<AlgElement> {
        self.check_vec(v)?;
        Ok(self.compress_unchecked(v))
    }

    fn compress_unchecked(&self, v: &TensorVec) -> AlgElement {
        let nn = self.n_copies as f64;
        let pp = conjugate_exponent(self.p);
        let mut out = self.algebra.zeros();
        for (li, row) in self.tuple_weights.iter().zip(&v.coords) {
            let c = (li / nn).powf(1.0 / pp);
            for s in row {
                if let Some(x0) = s.slots.first() {
                    out = &out + &x0.scale_re(c);
                }
            }
        }
        out
    }

    /// `U((x_{k,i})) = (T_{i_k} x_{σ(k),i})` with `σ(k) = k + 1 mod N`.
    pub fn apply_u(&self, v: &TensorVec) -> Result<TensorVec> {
        self.check_vec(v)?;
        Ok(self.apply_u_unchecked(v))
    }

    fn apply_u_unchecked(&self, v: &TensorVec) -> TensorVec {
        let nn = self.n_copies;
        let coords = v
            .coords
            .iter()
            .enumerate()
            .map(|(i, row)| {
                self.tuple(i)
                    .enumerate()
                    .map(|(k, ik)| self.factors[ik].apply(&row[(k + 1) % nn]))
                    .collect()
            })
            .collect();
        TensorVec { coords }
    }

    fn check_vec(&self, v: &TensorVec) -> Result<()> {
        if v.coords.len() != self.dims.index_set || v.coords.iter().any(|r| r.len() != self.n_copies) {
            return Err(Error::Shape("tensor vector does not match the dilation space".into()));
        }
        for s in v.coords.iter().flatten() {
            for x in &s.slots {
                self.algebra.check(x)?;
            }
        }
        Ok(())
    }

    fn random_vec(&self, rng: &mut SeededRng, psd: bool) -> TensorVec {
        let coords = (0..self.dims.index_set)
            .map(|_| {
                (0..self.n_copies)
                    .map(|_| {
                        let len = 1 + (random::uniform(rng, 0.0, self.dims.slots as f64) as usize)
                            .min(self.dims.slots - 1);
                        if psd {
                            random_psd_seq(rng, &self.algebra, len)
                        } else {
                            random_seq(rng, &self.algebra, len)
                        }
                    })
                    .collect()
            })
            .collect();
        TensorVec { coords }
    }

    /// `max_e ‖(Σλ_iT_i)^m e − Q U^m J e‖_∞` for `m = 0..=max_power`.
    pub fn power_residuals(&self, max_power: usize) -> Vec<f64> {
        let m = &self.algebra;
        let comb = self.combination();
        let mut res = vec![0.0f64; max_power + 1];
        for e in m.basis() {
            let mut v = self.embed_unchecked(&e);
            let mut direct = e.clone();
            for (pow, r) in res.iter_mut().enumerate() {
                if pow > 0 {
                    v = self.apply_u_unchecked(&v);
                    direct = comb.apply_unchecked(&direct);
                }
                let got = self.compress_unchecked(&v);
                *r = r.max((&got - &direct).norm_inf());
            }
        }
        res
    }

    /// Max of `|‖Uv‖_p − ‖v‖_p|` on random vectors with at most `slots` terms.
    pub fn verify_isometry(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = random::rng(seed);
        (0..samples)
            .map(|_| {
                let v = self.random_vec(&mut rng, false);
                let n0 = v.norm(&self.algebra, self.p);
                (self.apply_u_unchecked(&v).norm(&self.algebra, self.p) - n0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Full verification: powers `0..=N`, `QJ = 1`, norms of `J`, `Q`, `U`, positivity.
    pub fn verify(&self, samples: usize, seed: u64) -> Result<TensorReport> {
        let m = &self.algebra;
        let p = self.p;
        let residuals = self.power_residuals(self.n_copies);
        let qj_residual = m
            .basis()
            .iter()
            .map(|e| (&self.compress_unchecked(&self.embed_unchecked(e)) - e).norm_inf())
            .fold(0.0, f64::max);

        let mut rng = random::rng(seed);
        let mut j_dev: f64 = 0.0;
        let mut q_excess = f64::NEG_INFINITY;
        for _ in 0..samples {
            let x = random::random_element(&mut rng, m);
            let jx = self.embed_unchecked(&x);
            j_dev = j_dev.max((jx.norm(m, p) - m.lp_norm_unchecked(&x, p)).abs());
            let v = self.random_vec(&mut rng, false);
            q_excess = q_excess.max(m.lp_norm_unchecked(&self.compress_unchecked(&v), p) - v.norm(m, p));
        }
        let isometry_deviation = self.verify_isometry(samples, seed ^ 0x150);

        let all_positive = self
            .ops
            .iter()
            .map(|t| lamperti::decompose(t, p, &DecomposeOptions::default()))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .all(|a| match a {
                LampertiAnalysis::Lamperti(d) => {
                    let j1 = d.j.apply_unchecked(&m.identity());
                    (&d.w - &j1).norm_inf() <= 1e-8
                }
                _ => false,
            });
        let positivity_min_eig = all_positive.then(|| {
            let mut worst = f64::INFINITY;
            for _ in 0..samples.max(1) {
                let x = random::random_psd(&mut rng, m);
                let v = self.random_vec(&mut rng, true);
                let jx = self.embed_unchecked(&x);
                let uv = self.apply_u_unchecked(&v);
                let images = jx.coords.iter().chain(&uv.coords).flatten().flat_map(|s| &s.slots);
                for y in images {
                    worst = worst.min(y.min_eigenvalue());
                }
                worst = worst.min(self.compress_unchecked(&v).min_eigenvalue());
            }
            worst
        });

        Ok(TensorReport {
            residuals,
            qj_residual,
            j_isometry_deviation: j_dev,
            q_contraction_excess: q_excess.max(0.0),
            isometry_deviation,
            positivity_min_eig,
            lifted: self.lifted,
            dimensions: self.dims,
        })
    }
}

/// Either dilation, as produced by the CLI.
#[derive(Clone, Debug)]
pub enum DilationSystem {
    Shift(ShiftSystem),
    Tensor(TensorSystem),
}

impl DilationSystem {
    pub fn verify_isometry(&self, samples: usize, seed: u64) -> f64 {
        match self {
            DilationSystem::Shift(s) => s.verify_isometry(samples, seed),
            DilationSystem::Tensor(t) => t.verify_isometry(samples, seed),
        }
    }
}
