//! Seeded samplers for test inputs and randomized searches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgElement, FiniteVNA};
use crate::linalg::{CMat, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rng: &mut SeededRng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase fix on R's diagonal).
pub fn haar_unitary(rng: &mut SeededRng, n: usize) -> CMat {
    let qr = ginibre(rng, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_element(rng: &mut SeededRng, m: &FiniteVNA) -> AlgElement {
    AlgElement::from_blocks(m.dims().into_iter().map(|n| ginibre(rng, n)).collect())
}

pub fn random_hermitian(rng: &mut SeededRng, m: &FiniteVNA) -> AlgElement {
    random_element(rng, m).hermitian_part()
}

/// Wishart-style positive element `g* g`, blockwise.
pub fn random_psd(rng: &mut SeededRng, m: &FiniteVNA) -> AlgElement {
    let g = random_element(rng, m);
    &g.adjoint() * &g
}

/// Positive element of rank at most one per block.
pub fn random_rank_one_psd(rng: &mut SeededRng, m: &FiniteVNA) -> AlgElement {
    AlgElement::from_blocks(
        m.dims()
            .into_iter()
            .map(|n| {
                let v = ginibre(rng, n).column(0).into_owned();
                &v * v.adjoint()
            })
            .collect(),
    )
}

/// Random element normalized to `‖x‖_p = 1` (returned unnormalized if zero).
pub fn random_unit(rng: &mut SeededRng, m: &FiniteVNA, p: f64) -> AlgElement {
    let x = random_element(rng, m);
    let n = m.lp_norm_unchecked(&x, p);
    if n > 0.0 {
        x.scale_re(1.0 / n)
    } else {
        x
    }
}

pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}
