//! Optimal investment and risk control for an insurer whose per-policy
//! liabilities follow a jump-diffusion negatively correlated with the
//! market.
//!
//! The crate is `no_std` (with `alloc`). It contains
//!
//! * [`model`]: market coefficients, insurance risk parameters, admissibility
//!   checks and the log-utility objective integrand,
//! * [`utility`]: the logarithmic, power, exponential and quadratic utilities,
//! * [`solvers`]: closed-form and root-finding optimal strategies together
//!   with first-order and measure-change kernel residuals,
//! * [`noise`] and [`sde`]: seed-deterministic per-path noise and the wealth
//!   simulators (exact exponential scheme for fractional controls, Euler for
//!   dollar controls, exact density process for the quadratic feedback),
//! * [`evaluation`] and [`stats`]: Monte Carlo estimates, the brute-force log
//!   oracle, dominance and constancy diagnostics, convergence studies.
//!
//! Parallelism is injected through [`exec::Executor`]; every reduction runs
//! over path-ordered buffers so results do not depend on the executor.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod control;
pub mod evaluation;
pub mod exec;
pub mod grid;
pub mod model;
pub mod noise;
pub mod sde;
pub mod solvers;
pub mod stats;
pub mod utility;

pub use control::{DollarControl, FractionalControl};
pub use exec::{Executor, Sequential};
pub use grid::GridFn;
pub use model::{MarketCoefficients, Model, RiskParams, ValidationReport};
pub use sde::{PathOutcome, PathSet, Policy, SimConfig, SimError};
pub use solvers::{SolveError, SolveOptions, StrategySolution};
pub use utility::UtilitySpec;
