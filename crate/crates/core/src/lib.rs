//! Combinatorial growth model toolkit.
//!
//! The model couples a TAP-style innovation recurrence — the yearly net
//! increase in the number of distinct good types ("cambiodiversity") is a
//! weighted sum of binomial coefficients of the current count — to a
//! Cobb-Douglas aggregate production function with capital accumulation and
//! exogenous population. The recurrence has super-exponential solutions, so
//! long stretches of near-stagnation end in a finite-time combinatorial
//! explosion: the "hockey stick" of long-run output.
//!
//! Modules:
//! - [`kernel`]: the innovation recurrence (deterministic, stochastic, and
//!   closed-form blow-up horizon).
//! - [`exact`]: big-rational reference evaluation of the same recurrence,
//!   used as ground truth for the floating-point kernel.
//! - [`series`]: annual checkpoint series (population, GDP benchmarks) with
//!   log-linear interpolation.
//! - [`economy`]: the macro coupling, full trajectory simulation and
//!   backward extension.
//! - [`calibrate`]: grid + Nelder-Mead fitting of free parameters against a
//!   GDP benchmark.
//! - [`ensemble`]: Monte Carlo takeoff-time studies over the stochastic
//!   model.

pub mod calibrate;
pub mod economy;
pub mod ensemble;
pub mod exact;
pub mod kernel;
pub mod series;

pub use economy::{EconomyState, MacroParams, SimMode, Trajectory};
pub use kernel::{AlphaSchedule, KernelParams};
pub use series::{AnnualSeries, YearRange};
