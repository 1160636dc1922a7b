//! Fermionic unitary circuits contracted locally through their causal cones.
//!
//! Local observables are carried backwards through a circuit of
//! parity-preserving gates while the Jordan-Wigner order of the modes in play
//! is chosen anew at every step. Modes enter the description when a gate first
//! touches them and leave it through a partial projection as soon as no
//! earlier gate acts on them, so no string operator outside the causal cone is
//! ever built.
//!
//! The crate is organised bottom-up:
//!
//! - [`fermion`]: mode orders, occupation basis, polynomials and their local
//!   Jordan-Wigner matrices;
//! - [`reorder`]: the reordering primitives (swap, prepend, conjugate, align,
//!   partial trace, partial projection);
//! - [`circuit`]: gates, circuits, causal cones, expectation values and reduced
//!   density matrices;
//! - [`model`]: the 2D lattice Hamiltonian, MERA-style circuits, variational
//!   optimization and lower bounds;
//! - [`oracle`]: a dense global-order reference used to check everything above.

pub mod circuit;
pub mod error;
pub mod fermion;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod reorder;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/modes.md")]
    mod modes {}
    #[doc = include_str!("../../../book/src/reordering.md")]
    mod reordering {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/mera.md")]
    mod mera {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
