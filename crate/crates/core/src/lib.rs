//! Desk-scale simulation of super-Heisenberg phase-space metrology with
//! indefinite gate order.
//!
//! Two groups of displacements are placed in a quantum SWITCH: the control
//! qubit picks up the commutator phase `2 Im[(Σα)(Σβ)*]`, which grows as
//! `N²` in the number of displacements per group. The crate provides
//!
//! * [`phase_algebra`]: exact composition of displacements with phase
//!   tracking, commutator-loop phases and enclosed areas,
//! * [`fock_oracle`]: an independent truncated Fock-space check of that
//!   algebra,
//! * [`switch_protocol`]: the photonic SWITCH measurement model (physical
//!   parameters, outcome probabilities, loss, seeded sampling),
//! * [`estimation`]: maximum-likelihood estimation, RMSE, Cramér–Rao bounds,
//!   the fixed-order homodyne baseline and curve fits,
//! * [`experiment`]: configuration-driven runners that reproduce the figure
//!   data sets and write CSV/JSON outputs.

pub mod error;
pub mod estimation;
pub mod experiment;
pub mod fock_oracle;
pub mod phase_algebra;
pub mod seed;
pub mod switch_protocol;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use phase_algebra::{Displacement, DisplacementSequence, LoopGeometry, PhasedDisplacement};
