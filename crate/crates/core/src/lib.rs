//! Solver library for time-fractional gradient flows `∂_t^α u = −grad_H E(u)`.
//!
//! The power-law memory kernel `g_α` is compressed into a sum of exponentials
//! obtained from a rational fit of the Laplace symbol `z^{−α}`. The fractional
//! evolution then becomes a bank of local ODE modes, which this crate integrates
//! with a semi-implicit convex-concave splitting. Alongside the solution the
//! crate tracks the history energy `H` and the augmented energy `E + H`, which
//! is dissipated monotonically by the discrete flow.

pub mod config;
pub mod diagnostics;
pub mod fields;
pub mod flows;
pub mod quadrature;
pub mod rational;
pub mod refsolver;
pub mod sim;
pub mod special;
pub mod stepper;

mod error;

pub use config::{FlowTag, InitKind, SimConfig};
pub use diagnostics::{DissipationReport, EnergyTrace};
pub use error::Error;
pub use fields::GridField;
pub use flows::{FlowKind, GLParams};
pub use rational::{aaa_fit, SoeApprox};
pub use sim::{run, scalar_relaxation, sweep, RunResult};
pub use special::FractionalOrder;
pub use stepper::ModeBank;

pub type Result<T> = std::result::Result<T, Error>;
