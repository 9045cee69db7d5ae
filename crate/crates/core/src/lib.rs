//! Learned initializers for repeated gradient-descent solves.
//!
//! A problem family supplies objective, gradient, projection and samplers;
//! [`run_gd`] solves one instance; the `initializers` module proposes start
//! points (random, zero, multi-start, MAML, and the learned Val-Init, Arg-Init
//! and pairwise selectors); `harness` runs paired comparisons end to end and
//! `diagnostics` checks the conditions under which selection helps.

pub mod diagnostics;
pub mod error;
pub mod gd;
pub mod gradcheck;
pub mod harness;
pub mod initializers;
pub mod neural;
pub mod problems;
pub mod seed;

pub use diagnostics::Verdict;
pub use error::{Error, Result};
pub use gd::{evaluate_curve, run_gd, step_size, GdConfig, GdOutcome, StepRule};
pub use harness::{emit_reports, run_experiment, ComparisonTable, ExperimentConfig, FamilyConfig};
pub use initializers::{propose, Initializer, InitializerKind, Proposal};
pub use neural::{Mlp, MlpSpec, Regressor, TrainConfig};
pub use problems::{Instance, ProblemFamily};
pub use seed::{derive_seed, stream, SeededRng};
