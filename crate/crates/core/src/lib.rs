//! Fourier-spectral machinery for nonlocal wave equations
//!
//! ```text
//! u_tt − a∗Δu + A∗u = Δ[g∗f(u)],   u(·,0) = φ,  u_t(·,0) = ψ
//! ```
//!
//! posed on a periodic box `[−L, L)ⁿ` with `n ∈ {1, 2}` and `N` field
//! components. Every convolution is diagonal in Fourier space, so each
//! mode is an oscillator with frequency `η_j(ξ) = (â(ξ)|ξ|² + Â_j(ξ))^{1/2}`
//! driven by the nonlinear forcing `−|ξ|² ĝ(ξ) DFT(f(u))`.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO. Modules:
//!
//! - [`spectral`]: grid, field containers and the unitary transform pair.
//! - [`symbols`]: kernel families, symbol tables and the admissibility audit.
//! - [`propagator`]: exact trigonometric weights, the Picard midpoint
//!   stepper and the time loop.
//! - [`nonlinearity`]: power nonlinearities, potentials and composition audits.
//! - [`diagnostics`]: norms, the smoothing operator `B`, energies and the
//!   concavity blow-up monitor/certifier.
#![no_std]
// `!(x > 0.0)` style checks are intended to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod diagnostics;
mod error;
pub mod fft;
pub mod nonlinearity;
pub mod propagator;
pub mod spectral;
pub mod sum;
pub mod symbols;

pub use error::{Error, Result};
pub use num_complex::Complex64;
