//! Lamperti operators, dilations and maximal inequalities on noncommutative
//! `L_p` spaces of finite-dimensional von Neumann algebras.
//!
//! The algebra is a direct sum of weighted matrix blocks ([`FiniteVNA`]) and every
//! operator is stored as a dense matrix on the block-vectorized space
//! ([`LpOperator`]). On top of that sit
//!
//! * [`lamperti`]: recovery and certification of `T = w b J(·)`,
//! * [`dilation`]: shift and convex-combination dilations with verification,
//! * [`maximal`]: certified bounds for `‖sup⁺ x_n‖_p` and ergodic averages,
//! * [`gallery`]: worked examples with their expected outcomes.

pub mod algebra;
pub mod dilation;
pub mod error;
pub mod gallery;
pub mod io;
pub mod lamperti;
pub mod maximal;
pub(crate) mod linalg;
pub mod operator;
pub mod random;

pub use algebra::{conjugate_exponent, AlgElement, Block, FiniteVNA};
pub use error::{Error, Result};
pub use lamperti::{decompose, Classification, DecomposeOptions, LampertiAnalysis};
pub use operator::{JordanMap, LpOperator};

/// Complex scalar used throughout.
pub use num_complex::Complex64;
/// Dense complex matrix used for blocks and operators.
pub type CMat = nalgebra::DMatrix<Complex64>;

// The guide's snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/algebra.md")]
    mod algebra {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/lamperti.md")]
    mod lamperti {}
    #[doc = include_str!("../../../book/src/dilations.md")]
    mod dilations {}
    #[doc = include_str!("../../../book/src/maximal.md")]
    mod maximal {}
    #[doc = include_str!("../../../book/src/gallery.md")]
    mod gallery {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
