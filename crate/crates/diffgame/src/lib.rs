//! Sweeps, figure presets, file formats and the command line for
//! [`diffgame_core`].
//!
//! [`experiments::sweep`] runs a grid of (game, update rule, learning rate,
//! start) cells on a thread pool and attaches the spectral oracle's
//! prediction to every cell it applies to. Results are deterministic for a
//! given seed regardless of the thread count.

pub mod cli;
mod error;
pub mod experiments;
pub mod format;

pub use diffgame_core as core;
pub use error::{ExperimentError, Result};
pub use experiments::{
    analyze_point, sweep, EtaGrid, GameSelection, InitialPoints, PointAnalysis, Preset,
    SweepCell, SweepConfig, SweepResult,
};
pub use format::Format;
