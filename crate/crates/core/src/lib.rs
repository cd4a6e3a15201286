//! Ginzburg–Landau energies with prescribed boundary degrees on the circular
//! annulus `A = B(0,1) \ B(0,R)` under semi-stiff boundary conditions
//! (`|u| = 1` on both rings, phase free).
//!
//! The crate is organised by the objects it computes:
//!
//! * [`grid`]: the annulus, its polar discretisation and complex fields on it.
//! * [`radial`]: radial moduli `ρ_{ε,p}` (closed form for `ε = ∞`, Newton
//!   solve otherwise) and the integral capacity criterion.
//! * [`energy`]: discrete `E_ε`, boundary degrees and the Jacobian identity.
//! * [`flow`]: boundary bubbles, test fields and the projected descent of
//!   `E_ε` (the descent needs `std`).
//! * [`spectral`]: Fourier-mode lower bounds `m̃_k` and the lower-bound ledger.
//! * [`thresholds`]: `Q_p`, its root, `β_p` and the closed-form gap check.
//!
//! Without the default `std` feature the crate is `no_std` + `alloc`; the
//! descent flow, which relies on an FFT, is then unavailable.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod linalg;

pub mod energy;
pub mod flow;
pub mod grid;
pub mod quadrature;
pub mod radial;
pub mod spectral;
pub mod thresholds;

pub use error::{Error, Result};
pub use num_complex::Complex64;
