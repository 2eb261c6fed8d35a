//! Rational approximation and interpolation on the polydisk.
//!
//! The crate is organised bottom-up:
//!
//! * [`polyseries`]: multi-index boxes, truncated power series, Cayley
//!   transforms and Taylor extraction from black-box evaluators.
//! * [`takagi`]: the anti-linear (con-)eigenvalue problem `A·conj(q) = σq`
//!   for truncated Toeplitz compressions, plus Hankel-form checks.
//! * [`cf_interp`]: Carathéodory–Fejér interpolation by an Agler certificate,
//!   unitary realization and rational evaluation.
//! * [`k11`]: closed-form geometry of the bidisk coefficient body for
//!   `n = (1, 1)`.
//! * [`pade`]: Padé-type approximation loops, remainder bounds, pole probing
//!   and Pfister's inner approximation scheme.

pub mod cf_interp;
pub mod error;
pub mod k11;
mod linalg;
pub mod pade;
pub mod polyseries;
pub mod takagi;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use polyseries::{c64, FourierTable, MultiIndex, MultiIndexBox, TruncatedPoly};
