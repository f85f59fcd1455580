//! Classical evaluation, approximation and optimization of the depth-1
//! QAOA mean value for shortest-vector lattice Hamiltonians.
//!
//! The problem Hamiltonian is `H_P = sum_ij G_ij Q_i Q_j` over integer
//! qudits `Q_i` carried by `k + 1` qubits each ([`encoding`]). The
//! [`analytic`] module evaluates `mu(gamma) = <psi|H_P|psi>` in closed form,
//! [`simulator`] provides an exact statevector oracle, [`optimize`] locates
//! minima over `gamma`, and [`stats`] aggregates ensembles of lattices.

pub mod analytic;
pub mod cli;
pub mod encoding;
pub mod error;
pub mod lattice;
pub mod optimize;
pub mod simulator;
pub mod stats;

pub use analytic::{ApproxOrder, Evaluator, ExpectationResult};
pub use encoding::QuditLayout;
pub use error::{Error, Result};
pub use lattice::{GramMatrix, Lattice, LatticeBasis};
pub use optimize::{MinimaReport, SweepCurve};
pub use simulator::{AngleParams, StateVector};
pub use stats::{EnsembleConfig, EnsembleStats};
