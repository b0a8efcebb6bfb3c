//! Mechanics of n-player differentiable games.
//!
//! A game is a set of players, each minimizing its own twice-differentiable
//! loss over its own slice of a shared parameter vector. The crate computes
//! the simultaneous gradient and its Jacobian (the game Hessian), splits the
//! Hessian into symmetric (potential) and antisymmetric (Hamiltonian) parts,
//! classifies games and fixed points, and implements the update rules built
//! on top of that split: symplectic gradient adjustment (SGA) with and without
//! sign alignment, consensus optimization, Hamiltonian descent and optimistic
//! mirror descent.
//!
//! For quadratic games every non-aligned update rule is a linear iteration;
//! [`oracle::spectral_oracle`] gives its exact spectral radius, which serves as
//! ground truth for simulated runs.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adjusters;
pub mod catalog;
pub mod differentiation;
mod error;
pub mod game;
pub mod linalg;
pub mod mechanics;
pub mod oracle;

pub use adjusters::{
    AdjusterKind, AdjusterSpec, Outcome, StepDiagnostics, StopCriteria, Trajectory,
};
pub use catalog::{catalog_game, CatalogGame};
pub use differentiation::{DifferentiationConfig, FieldEvaluation, HvpMode};
pub use error::{Error, Result};
pub use game::{make_game, FnGame, Game, PlayerFns, PlayerPartition, QuadraticGame};
pub use linalg::Matrix;
pub use mechanics::{Decomposition, FixedPointReport, GameClass, GameKind, Stability};
pub use oracle::{spectral_oracle, OracleReport};
