//! Exact spectra of the quantum Rabi model `H = ω a†a + g σx (a + a†) + Δ σz`
//! and its broken-parity generalization with an extra `ε σx`.
//!
//! Eigenvalues are located as zeros of transcendental spectral functions built
//! from a three-term recurrence, and every result can be cross-checked against
//! a truncated Fock-space diagonalization in [`oracle`].

mod bracket;
pub mod error;
pub mod gfunction;
pub mod model;
pub mod oracle;
pub mod real;
pub mod recurrence;
pub mod spectrum;
pub mod sum;
pub mod sweep;
pub mod wavefunction;

pub use error::{RabiError, Result};
pub use model::{baseline_energy, ModelParams, NormalizedParams, Parity};
pub use recurrence::{Branch, Precision, Tolerances};
