//! Tucker decomposition of incomplete N-way tensors with automatic
//! multilinear-rank determination.
//!
//! The solver fits a core tensor and per-mode factor matrices to the
//! observed entries of a tensor while a group log-sum penalty drives whole
//! sub-tensors of the core to zero. Removing those zero sub-tensors shrinks
//! the core, so the surviving dimensions estimate the multilinear rank
//! without it being specified up front. The heavy core subproblem is solved
//! by a few over-relaxed monotone FISTA steps per outer iteration instead of
//! a direct Kronecker-system inverse.
//!
//! Entry points: [`solve`] for decomposition/completion, [`datagen`] for
//! synthetic experiment data, [`io`] for the DTF1/DMF1/PPM file formats.

pub mod datagen;
pub mod error;
pub mod io;
mod linalg;
pub mod mask;
pub mod mfista;
pub mod model;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{kron, kron_reversed};
pub use mask::ObservationMask;
pub use model::{hosvd_init, TuckerModel};
pub use solver::{
    build_weights, core_update_direct, factor_row_update, objective, prune, prune_detailed,
    solve, update_factor, SolveReport, SolverConfig,
};
pub use tensor::{DenseTensor, Matrix};
