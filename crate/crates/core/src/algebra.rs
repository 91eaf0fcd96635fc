//! Finite von Neumann algebras `M = M_{n_1} ⊕ ... ⊕ M_{n_m}` with the weighted
//! trace `τ(x) = Σ_k λ_k Tr(x_k)`, and the noncommutative `L_p` norms built on it.
//!
//! Elements are stored block by block as dense complex matrices. The vectorized
//! form used by operators is block-major and row-major inside each block, so the
//! matrix unit `e_ij` of block `k` sits at index `offset_k + i * n_k + j`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};

/// Relative eigenvalue / singular value cutoff used for supports, pseudo-inverses
/// and polar decompositions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Tolerance for membership predicates (Hermitian, PSD, projection, ...), relative
/// to `max(1, ‖x‖_∞)`.
pub const DEFAULT_PREDICATE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

/// A direct sum of full matrix algebras carrying a faithful finite trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAlgebra")]
pub struct FiniteVNA {
    blocks: Vec<Block>,
}

#[derive(Deserialize)]
struct RawAlgebra {
    blocks: Vec<Block>,
}

impl TryFrom<RawAlgebra> for FiniteVNA {
    type Error = Error;
    fn try_from(raw: RawAlgebra) -> Result<Self> {
        FiniteVNA::new(raw.blocks)
    }
}

impl FiniteVNA {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Domain("an algebra needs at least one block".into()));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::Domain(format!("block {k} has dimension 0")));
            }
            if !(b.weight.is_finite() && b.weight > 0.0) {
                return Err(Error::Domain(format!(
                    "block {k} has weight {} (trace must be faithful and finite)",
                    b.weight
                )));
            }
        }
        Ok(Self { blocks })
    }

    /// `M_n` with the standard trace.
    pub fn matrix(n: usize) -> Self {
        Self::new(vec![Block { dim: n, weight: 1.0 }]).expect("n >= 1")
    }

    /// The commutative algebra `ℓ^n_∞` (all blocks 1×1, unit weights).
    pub fn abelian(n: usize) -> Self {
        Self::new(vec![Block { dim: 1, weight: 1.0 }; n]).expect("n >= 1")
    }

    /// Blocks of the given dimensions, all with weight 1.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        Self::new(dims.iter().map(|&dim| Block { dim, weight: 1.0 }).collect())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.weight).collect()
    }

    /// `Σ n_k²`, the length of a vectorized element.
    pub fn vec_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim * b.dim).sum()
    }

    /// `Σ n_k`, the size of the full matrix algebra containing `M` block-diagonally.
    pub fn ambient_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// `τ(1)`.
    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.dim as f64).sum()
    }

    pub fn is_abelian(&self) -> bool {
        self.blocks.iter().all(|b| b.dim == 1)
    }

    /// Same block dimensions (weights may differ).
    pub fn same_shape(&self, other: &FiniteVNA) -> bool {
        self.dims() == other.dims()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.dim * b.dim;
                o
            })
            .collect()
    }

    /// Index of the matrix unit `e_ij` of block `k` in the vectorized basis.
    pub fn basis_index(&self, k: usize, i: usize, j: usize) -> usize {
        self.offsets()[k] + i * self.blocks[k].dim + j
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn basis_position(&self, mut idx: usize) -> (usize, usize, usize) {
        for (k, b) in self.blocks.iter().enumerate() {
            let n2 = b.dim * b.dim;
            if idx < n2 {
                return (k, idx / b.dim, idx % b.dim);
            }
            idx -= n2;
        }
        panic!("basis index out of range")
    }

    pub fn check(&self, x: &AlgElement) -> Result<()> {
        if x.blocks.len() != self.blocks.len() {
            return Err(Error::Shape(format!(
                "element has {} blocks, algebra has {}",
                x.blocks.len(),
                self.blocks.len()
            )));
        }
        for (k, (m, b)) in x.blocks.iter().zip(&self.blocks).enumerate() {
            if m.nrows() != b.dim || m.ncols() != b.dim {
                return Err(Error::Shape(format!(
                    "block {k} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    b.dim,
                    b.dim
                )));
            }
        }
        Ok(())
    }

    pub fn element(&self, blocks: Vec<CMat>) -> Result<AlgElement> {
        let x = AlgElement { blocks };
        self.check(&x)?;
        Ok(x)
    }

    pub fn zeros(&self) -> AlgElement {
        AlgElement {
            blocks: self.blocks.iter().map(|b| CMat::zeros(b.dim, b.dim)).collect(),
        }
    }

    pub fn identity(&self) -> AlgElement {
        AlgElement {
            blocks: self
                .blocks
                .iter()
                .map(|b| CMat::identity(b.dim, b.dim))
                .collect(),
        }
    }

    /// Matrix unit `e_ij` in block `k`.
    pub fn unit(&self, k: usize, i: usize, j: usize) -> AlgElement {
        let mut x = self.zeros();
        x.blocks[k][(i, j)] = c(1.0);
        x
    }

    /// All matrix units in vectorization order.
    pub fn basis(&self) -> Vec<AlgElement> {
        (0..self.vec_dim())
            .map(|idx| {
                let (k, i, j) = self.basis_position(idx);
                self.unit(k, i, j)
            })
            .collect()
    }

    /// A real diagonal element; `diag` lists the diagonal of every block in order.
    pub fn diagonal(&self, diag: &[f64]) -> Result<AlgElement> {
        if diag.len() != self.ambient_dim() {
            return Err(Error::Shape(format!(
                "diagonal has {} entries, expected {}",
                diag.len(),
                self.ambient_dim()
            )));
        }
        let mut x = self.zeros();
        let mut it = diag.iter();
        for m in &mut x.blocks {
            for i in 0..m.nrows() {
                m[(i, i)] = c(*it.next().unwrap());
            }
        }
        Ok(x)
    }

    pub fn vectorize(&self, x: &AlgElement) -> DVector<C64> {
        let mut v = DVector::zeros(self.vec_dim());
        let mut idx = 0;
        for m in &x.blocks {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    v[idx] = m[(i, j)];
                    idx += 1;
                }
            }
        }
        v
    }

    pub fn devectorize(&self, v: &DVector<C64>) -> AlgElement {
        assert_eq!(v.len(), self.vec_dim(), "vector length");
        let mut x = self.zeros();
        let mut idx = 0;
        for m in &mut x.blocks {
            let n = m.nrows();
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = v[idx];
                    idx += 1;
                }
            }
        }
        x
    }

    /// `τ(x) = Σ_k λ_k Tr(x_k)`.
    pub fn trace(&self, x: &AlgElement) -> Result<C64> {
        self.check(x)?;
        Ok(self.trace_unchecked(x))
    }

    pub(crate) fn trace_unchecked(&self, x: &AlgElement) -> C64 {
        x.blocks
            .iter()
            .zip(&self.blocks)
            .map(|(m, b)| m.trace() * b.weight)
            .sum()
    }

    /// `‖x‖_p = τ(|x|^p)^{1/p}` for `1 ≤ p < ∞`, the largest singular value for `p = ∞`.
    pub fn lp_norm(&self, x: &AlgElement, p: f64) -> Result<f64> {
        check_exponent(p)?;
        self.check(x)?;
        Ok(self.lp_norm_unchecked(x, p))
    }

    pub(crate) fn lp_norm_unchecked(&self, x: &AlgElement, p: f64) -> f64 {
        if p.is_infinite() {
            return x.norm_inf();
        }
        let mut acc = 0.0;
        for (m, b) in x.blocks.iter().zip(&self.blocks) {
            let s: f64 = linalg::singular_values(m).iter().map(|s| s.powf(p)).sum();
            acc += b.weight * s;
        }
        acc.powf(1.0 / p)
    }

    /// Applies `f` to the spectrum of a Hermitian element, block by block.
    ///
    /// Eigenvalues below `DEFAULT_RANK_TOL` times the spectral radius are snapped to 0
    /// before `f` is evaluated, so rules like `t ↦ t⁻¹·1{t>0}` act on the numerical
    /// support only.
    pub fn funcalc(&self, x: &AlgElement, f: impl Fn(f64) -> f64) -> Result<AlgElement> {
        self.funcalc_tol(x, f, DEFAULT_RANK_TOL)
    }

    pub fn funcalc_tol(
        &self,
        x: &AlgElement,
        f: impl Fn(f64) -> f64,
        rank_tol: f64,
    ) -> Result<AlgElement> {
        self.check(x)?;
        if !x.is_hermitian(DEFAULT_PREDICATE_TOL) {
            return Err(Error::Domain("functional calculus needs a Hermitian element".into()));
        }
        let eigs: Vec<(Vec<f64>, CMat)> = x.blocks.iter().map(linalg::herm_eig).collect();
        let radius = eigs
            .iter()
            .flat_map(|(v, _)| v.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let cutoff = rank_tol * radius;
        let blocks = eigs
            .into_iter()
            .map(|(vals, vecs)| {
                let fv: Vec<f64> = vals
                    .iter()
                    .map(|&v| f(if v.abs() <= cutoff { 0.0 } else { v }))
                    .collect();
                linalg::from_eig(&fv, &vecs)
            })
            .collect();
        Ok(AlgElement { blocks })
    }

    /// Support projection `s(x)` of a positive element.
    pub fn support(&self, x: &AlgElement) -> Result<AlgElement> {
        self.support_tol(x, DEFAULT_RANK_TOL)
    }

    pub fn support_tol(&self, x: &AlgElement, rank_tol: f64) -> Result<AlgElement> {
        self.check(x)?;
        if !x.is_psd(DEFAULT_PREDICATE_TOL) {
            return Err(Error::Domain("support needs a positive element".into()));
        }
        self.funcalc_tol(x, |t| if t > 0.0 { 1.0 } else { 0.0 }, rank_tol)
    }

    /// Moore–Penrose inverse of a positive element: `t ↦ t⁻¹·1{t>0}`.
    pub fn pinv_psd(&self, x: &AlgElement) -> Result<AlgElement> {
        self.funcalc(x, |t| if t > 0.0 { 1.0 / t } else { 0.0 })
    }

    /// Polar decomposition `x = w·b` with `b = |x|` and `w*w = s(b)`.
    pub fn polar(&self, x: &AlgElement) -> Result<(AlgElement, AlgElement)> {
        self.polar_tol(x, DEFAULT_RANK_TOL)
    }

    pub fn polar_tol(&self, x: &AlgElement, rank_tol: f64) -> Result<(AlgElement, AlgElement)> {
        self.check(x)?;
        let cutoff = rank_tol * x.norm_inf();
        let mut ws = Vec::with_capacity(x.blocks.len());
        let mut bs = Vec::with_capacity(x.blocks.len());
        for m in &x.blocks {
            let n = m.nrows();
            let svd = SVD::new(m.clone(), true, true);
            let u = svd.u.expect("u requested");
            let vt = svd.v_t.expect("v_t requested");
            let mut w = CMat::zeros(n, n);
            let mut b = CMat::zeros(n, n);
            for (i, &s) in svd.singular_values.iter().enumerate() {
                let ui = u.column(i);
                let vi = vt.row(i).adjoint();
                if s > cutoff && s > 0.0 {
                    w += &ui * vi.adjoint();
                    b += (&vi * vi.adjoint()).scale(s);
                }
            }
            ws.push(w);
            bs.push(linalg::hermitian_part(&b));
        }
        Ok((AlgElement { blocks: ws }, AlgElement { blocks: bs }))
    }

    /// Minimal central projections `z_k` (the unit of block `k`); they sum to 1.
    pub fn center_basis(&self) -> Vec<AlgElement> {
        (0..self.num_blocks()).map(|k| self.central(k)).collect()
    }

    pub fn central(&self, k: usize) -> AlgElement {
        let mut x = self.zeros();
        x.blocks[k] = CMat::identity(self.blocks[k].dim, self.blocks[k].dim);
        x
    }

    /// Central element `Σ_k values[k]·z_k`.
    pub fn central_from(&self, values: &[f64]) -> AlgElement {
        assert_eq!(values.len(), self.num_blocks());
        let mut x = self.zeros();
        for (k, v) in values.iter().enumerate() {
            let n = self.blocks[k].dim;
            x.blocks[k] = CMat::identity(n, n).scale(*v);
        }
        x
    }

    /// Bilinear trace pairing `τ(xy)`.
    pub fn pairing(&self, x: &AlgElement, y: &AlgElement) -> C64 {
        self.trace_unchecked(&(x * y))
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("exponent p = {p} must satisfy p >= 1")));
    }
    Ok(())
}

/// The conjugate exponent `p' = p/(p-1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// A block-diagonal complex matrix tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgElement {
    blocks: Vec<CMat>,
}

impl AlgElement {
    /// Wraps blocks without checking them against an algebra.
    pub fn from_blocks(blocks: Vec<CMat>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [CMat] {
        &mut self.blocks
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    pub fn adjoint(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|m| m.adjoint()).collect(),
        }
    }

    /// Entrywise transpose (no conjugation) of every block.
    pub fn transpose(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|m| m.transpose()).collect(),
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|m| m * a).collect(),
        }
    }

    pub fn scale_re(&self, a: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|m| m.scale(a)).collect(),
        }
    }

    /// Largest singular value over all blocks.
    pub fn norm_inf(&self) -> f64 {
        self.blocks
            .iter()
            .map(linalg::spectral_norm)
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    pub fn hermitian_part(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(linalg::hermitian_part).collect(),
        }
    }

    /// Smallest eigenvalue of the Hermitian part over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(linalg::min_eig)
            .fold(f64::INFINITY, f64::min)
    }

    fn scale_of(&self) -> f64 {
        self.norm_inf().max(1.0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self - &self.adjoint()).norm_inf() <= tol * self.scale_of()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol * self.scale_of()
    }

    /// `p² = p = p*`.
    pub fn is_projection(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && (&(self * self) - self).norm_inf() <= tol
    }

    /// `w*w` is a projection.
    pub fn is_partial_isometry(&self, tol: f64) -> bool {
        (&self.adjoint() * self).is_projection(tol)
    }

    /// `xy − yx`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }
}

impl Add for &AlgElement {
    type Output = AlgElement;
    fn add(self, rhs: &AlgElement) -> AlgElement {
        AlgElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &AlgElement {
    type Output = AlgElement;
    fn sub(self, rhs: &AlgElement) -> AlgElement {
        AlgElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Blockwise matrix product.
impl Mul for &AlgElement {
    type Output = AlgElement;
    fn mul(self, rhs: &AlgElement) -> AlgElement {
        AlgElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a * b).collect(),
        }
    }
}

impl Neg for &AlgElement {
    type Output = AlgElement;
    fn neg(self) -> AlgElement {
        self.scale_re(-1.0)
    }
}

impl Add for AlgElement {
    type Output = AlgElement;
    fn add(self, rhs: AlgElement) -> AlgElement {
        &self + &rhs
    }
}

impl Sub for AlgElement {
    type Output = AlgElement;
    fn sub(self, rhs: AlgElement) -> AlgElement {
        &self - &rhs
    }
}

impl Mul for AlgElement {
    type Output = AlgElement;
    fn mul(self, rhs: AlgElement) -> AlgElement {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> FiniteVNA {
        FiniteVNA::matrix(2)
    }

    fn mat(rows: &[[f64; 2]; 2]) -> CMat {
        CMat::from_row_slice(2, 2, &[c(rows[0][0]), c(rows[0][1]), c(rows[1][0]), c(rows[1][1])])
    }

    fn close(a: &AlgElement, b: &AlgElement, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn trace_examples() {
        assert!((m2().trace(&m2().identity()).unwrap().re - 2.0).abs() < 1e-15);
        let m = FiniteVNA::new(vec![
            Block { dim: 1, weight: 0.5 },
            Block { dim: 1, weight: 2.0 },
        ])
        .unwrap();
        let x = m.diagonal(&[3.0, 1.0]).unwrap();
        assert!((m.trace(&x).unwrap().re - 3.5).abs() < 1e-15);
        assert!((m2().trace(&m2().unit(0, 0, 0)).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_shape_mismatch() {
        let x = FiniteVNA::matrix(3).identity();
        assert!(matches!(m2().trace(&x), Err(Error::Shape(_))));
    }

    #[test]
    fn lp_norm_examples() {
        let x = m2().diagonal(&[1.0, -1.0]).unwrap();
        assert!((m2().lp_norm(&x, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let y = m2().element(vec![mat(&[[1.0, -1.0], [-1.0, 1.0]])]).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0, 7.0] {
            assert!((m2().lp_norm(&y, p).unwrap() - 2.0).abs() < 1e-12);
        }
        let w3 = FiniteVNA::new(vec![Block { dim: 2, weight: 3.0 }]).unwrap();
        assert!((w3.lp_norm(&w3.unit(0, 0, 0), 1.0).unwrap() - 3.0).abs() < 1e-14);
        assert!(matches!(m2().lp_norm(&x, 0.5), Err(Error::Domain(_))));
        assert!((m2().lp_norm(&y, f64::INFINITY).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn funcalc_examples() {
        let x = m2().diagonal(&[4.0, 9.0]).unwrap();
        let r = m2().funcalc(&x, f64::sqrt).unwrap();
        assert!(close(&r, &m2().diagonal(&[2.0, 3.0]).unwrap(), 1e-13));

        let x = m2().diagonal(&[2.0, 0.0]).unwrap();
        let r = m2().pinv_psd(&x).unwrap();
        assert!(close(&r, &m2().diagonal(&[0.5, 0.0]).unwrap(), 1e-14));

        let ones = m2().element(vec![mat(&[[1.0, 1.0], [1.0, 1.0]])]).unwrap();
        let r = m2().funcalc(&ones, |t| if t > 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert!(close(&r, &ones.scale_re(0.5), 1e-13));

        let nonherm = m2().unit(0, 0, 1);
        assert!(matches!(m2().funcalc(&nonherm, |t| t), Err(Error::Domain(_))));
    }

    #[test]
    fn support_examples() {
        let s = m2().support(&m2().diagonal(&[5.0, 0.0]).unwrap()).unwrap();
        assert!(close(&s, &m2().unit(0, 0, 0), 1e-14));
        let s = m2().support(&m2().zeros()).unwrap();
        assert!(close(&s, &m2().zeros(), 0.0));
        let ones = m2().element(vec![mat(&[[1.0, 1.0], [1.0, 1.0]])]).unwrap();
        let s = m2().support(&ones).unwrap();
        assert!(close(&s, &ones.scale_re(0.5), 1e-13));
        let indefinite = m2().diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(m2().support(&indefinite), Err(Error::Domain(_))));
    }

    #[test]
    fn polar_examples() {
        let x = m2().element(vec![mat(&[[2.0, 1.0], [1.0, 1.0]])]).unwrap();
        let (w, b) = m2().polar(&x).unwrap();
        assert!(close(&w, &m2().identity(), 1e-12));
        assert!(close(&b, &x, 1e-12));

        let x = m2().unit(0, 0, 1);
        let (w, b) = m2().polar(&x).unwrap();
        assert!(close(&w, &x, 1e-14));
        assert!(close(&b, &m2().diagonal(&[0.0, 1.0]).unwrap(), 1e-14));

        let (w, b) = m2().polar(&m2().zeros()).unwrap();
        assert_eq!(w.max_abs(), 0.0);
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn center_basis_examples() {
        let m = FiniteVNA::from_dims(&[2, 3]).unwrap();
        let z = m.center_basis();
        assert_eq!(z.len(), 2);
        assert!(close(&(&z[0] + &z[1]), &m.identity(), 0.0));
        assert_eq!(linalg::max_abs(z[0].block(1)), 0.0);
        assert_eq!(FiniteVNA::matrix(4).center_basis(), vec![FiniteVNA::matrix(4).identity()]);
        let weighted = FiniteVNA::new(vec![
            Block { dim: 2, weight: 7.0 },
            Block { dim: 3, weight: 0.1 },
        ])
        .unwrap();
        assert_eq!(weighted.center_basis(), z);
    }

    #[test]
    fn rejects_degenerate_algebras() {
        assert!(FiniteVNA::new(vec![]).is_err());
        assert!(FiniteVNA::new(vec![Block { dim: 0, weight: 1.0 }]).is_err());
        assert!(FiniteVNA::new(vec![Block { dim: 2, weight: 0.0 }]).is_err());
        assert!(FiniteVNA::new(vec![Block { dim: 2, weight: f64::NAN }]).is_err());
    }

    #[test]
    fn vectorization_is_block_major_row_major() {
        let m = FiniteVNA::from_dims(&[1, 2]).unwrap();
        assert_eq!(m.basis_index(1, 0, 1), 2);
        assert_eq!(m.basis_position(3), (1, 1, 0));
        let b = m.basis();
        assert_eq!(b[2], m.unit(1, 0, 1));
        let x = m.diagonal(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.devectorize(&m.vectorize(&x)), x);
    }
}
