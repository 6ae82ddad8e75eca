//! Exact unitary dynamics of small interacting spin-1/2 systems.
//!
//! The crate builds the secular dipolar Hamiltonian (Zeeman term, flip-flop
//! term and optional double-quantum term) on the product basis of `I_z`
//! eigenstates, integrates the amplitude equations with fixed-step RK4, and
//! provides the analysis layers built on top of those trajectories:
//!
//! - [`observables`]: per-spin `<I_z^i>(t)`, time averages and an exact
//!   infinite-time oracle via eigendecomposition.
//! - [`surfaces`]: degeneracy classes of basis states, reachability scans and
//!   the coupling graph of the Hamiltonian.
//! - [`jumps`]: energy-conserving random state replacement within a
//!   degeneracy class, and a single-spin thermal fit of the resulting
//!   averages.
//!
//! Basis states use 1-based numbering everywhere in the public API; for three
//! spins `Φ1 = ↑↑↑`, `Φ2 = ↓↑↑`, `Φ3 = ↑↓↑`, ..., `Φ8 = ↓↓↓`, with spin 1 the
//! fastest-varying position.

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod hamiltonian;
pub mod jumps;
pub mod observables;
pub mod surfaces;

pub use basis::{Basis, BasisState, HalfInt, MAX_SPINS};
pub use dynamics::{evolve, rk4_step, IntegratorConfig, StateVector, Trajectory};
pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianMatrix, SpinSystem};
pub use jumps::{JumpConfig, JumpEnsemble, ThermalComparison, ThermalPrediction};
pub use observables::{AverageReport, AveragingMethod, SpinExpectationSeries};
pub use surfaces::{DegeneracyClass, SeparabilityReport};

pub use num_complex::Complex64;
