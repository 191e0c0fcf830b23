//! Worst-case fidelity certificates for approximate invariant-based inverse
//! engineering.
//!
//! A control schedule is designed from a dynamical invariant of a simplified
//! Hamiltonian `H2`, then applied to the true Hamiltonian `H1`. The overlap
//! between the true and the designed final states is bounded from below by
//! a quantum speed limit that only needs the designed trajectory:
//!
//! ```text
//! |<psi1(T)|psi2(T)>|  >=  cos( integral_0^T sigma[H1 - H2, psi2(t)] dt )
//! ```
//!
//! [`qsl`] evaluates that bound numerically and checks it against direct
//! propagation ([`propagator`]). [`stirap`] and [`anneal`] are the two
//! worked models.

pub mod anneal;
pub mod error;
pub mod propagator;
pub mod qsl;
pub mod quantum;
pub mod report;
pub mod selftest;
pub mod stirap;

pub use error::{Error, Result};
pub use propagator::{TimeGrid, Trajectory};
pub use qsl::BoundReport;
pub use quantum::{HermitianOperator, QuantumState};
