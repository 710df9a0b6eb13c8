//! Three-period employer-worker general-training game.
//!
//! The employer picks (or is assigned) a training level and later renegotiates
//! the wage; the worker supplies unobservable discretionary effort and decides
//! whether to stay. Workers may be selfish or reciprocal in the sense of
//! sequential reciprocity: they weigh the employer's perceived intentions
//! against their own kindness toward him.
//!
//! Modules, bottom-up:
//! - [`game`]: payoffs and the chance mechanism.
//! - [`reciprocity`]: kindness terms and the stay rule.
//! - [`equilibrium`]: closed-form best responses, checked against a
//!   brute-force oracle.
//! - [`simulator`]: agent populations played under the strategy method.
//! - [`table`]: the long-format observation table and its CSV schema.
//! - [`metrics`]: wage gaps against break-even thresholds; effort patterns.
//! - [`stats`]: exact nonparametric tests and regressions.
//!
//! All payoffs and probabilities inside the game are exact rationals ([`Q`]);
//! statistics work in `f64`.

pub mod equilibrium;
pub mod error;
pub mod game;
pub mod metrics;
pub mod rational;
pub mod reciprocity;
pub mod simulator;
pub mod stats;
pub mod table;

pub use error::{Error, Result};
pub use game::{Benefit, EffortDirection, GameParams, Outcome, TreatmentSpec};
pub use rational::Q;
pub use reciprocity::ReciprocityParams;
