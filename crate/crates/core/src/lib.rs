//! Controllability of networked LTI systems with heterogeneous node
//! dynamics.
//!
//! A network of `N` nodes `ẋ_i = A_i x_i + Σ_j c_ij H x_j + d_i B u_i`
//! lifts to the pair `F = blockdiag(A_i) + C ⊗ H`, `G = D ⊗ B`. The
//! structural test in [`network`] decides controllability from node-level
//! data via an admissible transform `T C T⁻¹ = J`; [`classical`] provides
//! the Kalman and PBH tests on `(F, G)`, and [`oracle`] cross-checks them
//! on generated instances.

pub mod error;
pub mod jordan;
pub mod matrix;
pub mod rational;
pub mod spectral;
pub mod system;
pub mod classical;
pub mod network;
pub mod oracle;
pub mod io;

pub use classical::{kalman_controllable, kalman_rank, pbh_controllable, Method, Status, Verdict, Witness};
pub use error::{Error, Result};
pub use matrix::{Matrix, Tolerances, C64};
pub use network::{corollary_etd, homogeneous_verdict, sink_node_check, source_node_check, theorem1_verdict, TheoremReport};
pub use oracle::{cross_validate, generate, run_batch, CrossReport, GenSpec};
pub use system::{AssembledPair, Dims, NetworkedSystem};
