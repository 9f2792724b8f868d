//! Workbench for studying how an adaptive AI teammate compensates for a
//! human whose goal departs from the team's external goal.
//!
//! * [`rational`]: exact fractions and 2×2 solves.
//! * [`signaling`]: the honest/dishonest AI signaling game, its closed-form
//!   pipeline and exhaustive equilibrium enumeration.
//! * [`mdp`]: the team decision problem, exact policy evaluation, value
//!   iteration, Q-learning and Monte Carlo simulation.
//! * [`compensation`]: compensation metrics, minimal-compensation synthesis
//!   and the five-condition audit.
//! * [`inference`]: noisy reward inference and residual misalignment.
//! * [`escalation`]: the human/AI escalation loop.
//!
//! Data-parallel work goes through [`exec`]; disable the default `parallel`
//! feature for a purely sequential build.

pub mod compensation;
pub mod error;
pub mod escalation;
pub mod exec;
pub mod inference;
pub mod mdp;
pub mod rational;
pub mod report;
pub mod signaling;

pub use error::{Error, RationalError, Result};
pub use exec::Execution;
pub use rational::Rational;
