//! Spectral laboratory for banded Hessenberg/Toeplitz symbols
//! `a(z) = 1/z + a_0 + a_1 z + ... + a_p z^p`.
//!
//! Starting from the coefficients alone the crate computes the branch
//! system of `a(z) = lambda`, the spectral cuts, the polynomial sequence
//! generated by the banded recurrence, the Nikishin measure system,
//! second-type functions with their Widom closed forms, and generalized
//! spectra of Toeplitz sections.
//!
//! Modules are layered bottom-up: [`symbol`] -> [`branches`] ->
//! [`polyseq`] / [`quadrature`] -> [`nikishin`] -> [`asymptotics`];
//! [`cubic`] is an independent closed-form oracle for `p = 2`.

pub mod asymptotics;
pub mod banded;
pub mod branches;
pub mod cubic;
pub mod error;
pub mod nikishin;
pub mod polyseq;
pub mod quadrature;
pub mod roots;
pub mod symbol;
pub mod verify;
pub mod xprec;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use symbol::{build_symbol, critical_structure, CriticalStructure, Cut, SymbolCoeffs};
