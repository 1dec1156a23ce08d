//! Online multiclass U-calibration.
//!
//! Forecasters emit a distribution over `K` outcomes each round and are
//! judged by their regret, simultaneously, under every bounded proper loss.
//! The crate provides the proper losses, FTL and FTPL forecasters, a handful
//! of adversaries, a seeded Monte-Carlo engine for regret and calibration
//! estimates, and an exact solver for the two-outcome squared-loss minimax
//! game.

pub mod adversaries;
pub mod engine;
pub mod error;
pub mod forecasters;
pub mod losses;
pub mod minimax;
pub mod report;
pub mod simplex;

pub use adversaries::{Adversary, AdversaryKind};
pub use engine::{estimate_calibration, regret, run_game, CalibrationEstimate, RegretRecord, Transcript};
pub use error::{Error, Result};
pub use forecasters::{Forecaster, ForecasterKind};
pub use losses::{LossKind, ProperLoss, UnivariateForm};
pub use simplex::{mean_of_counts, validate_simplex, CountVector, Outcome, RngStream, SimplexPoint};
