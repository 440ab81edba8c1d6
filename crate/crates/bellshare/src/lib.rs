//! Simulator and verification toolkit for CHSH nonlocality sharing under
//! bilateral sequential measurements.
//!
//! A bipartite pure state in Schmidt form is measured by a first observer
//! pair — B's side first, then A's — with uniformly random inputs; the
//! unconditional post-measurement state is handed to a second pair. The
//! crate builds the measurement families (a tilted sharp pair on the A side,
//! one sharp and one unsharp input on the B side, for qubits and for their
//! d ≥ 3 block generalization), evolves the state through the input-averaged
//! Lüders channels, and checks the resulting second-pair CHSH value against
//! closed-form predictions and the classical bound of 2, which this
//! measurement family never beats.
//!
//! Modules:
//! - [`linalg`]: dense complex matrices, Hermitian eigendecomposition
//!   (cyclic Jacobi), PSD square roots.
//! - [`quantum`]: Schmidt states, POVM families, validation, correlations.
//! - [`protocol`]: the averaged Lüders rounds, the bilateral evolution and
//!   its Heisenberg-picture dual.
//! - [`chsh`]: CHSH operators and values, correlation tensor, the
//!   correlation-tensor optimum over qubit settings.
//! - [`predictions`]: closed-form predictors and the discrepancy report
//!   between the compact d ≥ 3 closed form and the exact channel.
//! - [`search`]: deterministic parameter sweeps and a multistart
//!   Nelder-Mead maximizer probing the ≤ 2 bound.

pub mod chsh;
pub mod error;
pub mod linalg;
pub mod predictions;
pub mod protocol;
pub mod quantum;
pub mod search;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use protocol::ProtocolParams;
pub use quantum::SchmidtVector;
