//! DC optimal transmission switching (OTS) with every line switchable.
//!
//! The crate is organised bottom-up:
//!
//! * [`network`] parses case files, samples demand scenarios and projects the
//!   grid onto a [`graph::WeightedMultigraph`] with edge weights `F/b`.
//! * [`graph`] holds the combinatorial kernels: leaf pruning, biconnected
//!   decomposition, shortest paths and exhaustive longest-path oracles.
//! * [`bigm`] turns those kernels into per-line big-M sets (naive, simplified
//!   relaxed longest path, exact longest path, shortest path on a topology).
//! * [`model`] builds solver-agnostic MILP models (full switching model,
//!   restricted heuristic model, longest-path models, dispatch LP).
//! * [`solver`] drives an external engine (HiGHS) behind a uniform contract and
//!   provides a brute-force topology enumeration oracle.
//! * [`iterative`] alternates full and restricted solves under a time ledger.
//! * [`harness`] runs the solve methodologies over scenario batches and
//!   writes CSV reports.

pub mod bigm;
pub mod error;
pub mod graph;
pub mod harness;
pub mod iterative;
pub mod model;
pub mod network;
pub mod solver;

pub use error::{OtsError, Result};
