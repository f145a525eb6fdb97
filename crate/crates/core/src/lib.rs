//! Bifurcation-based quantum annealing (BQA) on spin-1 qutrits, standard
//! transverse-field quantum annealing (QA) on qubits, and the realization
//! of each qutrit as the triplet sector of two nested qubits.
//!
//! Module map:
//!
//! - [`spinops`]: spin-1 / Pauli matrices and tensor-product embedding.
//! - [`instances`]: Ising instances and the brute-force ground-state oracle.
//! - [`schedules`]: `A(t)`, `B(t)` and the linear QA interpolation.
//! - [`hamiltonians`]: factored time-dependent Hamiltonians.
//! - [`nested`]: two-qubit realization of qutrits.
//! - [`evolve`]: adaptive Schrödinger integration and spectra.
//! - [`analysis`]: success probabilities, sampling statistics, benchmarks.
//! - [`meanfield`]: self-consistent mean-field phase diagram.

pub mod analysis;
pub mod error;
pub mod evolve;
pub mod hamiltonians;
pub mod instances;
pub mod meanfield;
pub mod nested;
pub mod schedules;
pub mod spinops;

pub use error::{Error, Result};
