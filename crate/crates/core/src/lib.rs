//! Nonlocal stability and resilience of attractors in ODE systems, estimated by
//! Monte-Carlo perturbation testing.
//!
//! A perturbation is an initial condition drawn around an attractor. Each one is
//! integrated until it is captured by the attractor, enters an unsafe region, or
//! runs out of time budget. From one set of such [`TrajectoryOutcome`]s every
//! estimator in [`measures`] is computed:
//!
//! * basin stability `P`, the share of perturbations that return,
//! * the basin-shape distance `D`, the smallest perturbation that does not return,
//! * the mean return rate `R` and the slowest return rate `R_worst`,
//! * the basin-time variants `P^tau` and `D^tau`,
//! * the local baseline `-lambda_max` from the Jacobian spectrum.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and the
//! parallel harness live in the `resilience-cli` crate.

#![no_std]
#![warn(missing_docs)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod attractor;
pub mod distance;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod measures;
pub mod models;
pub mod quadrature;
pub mod sample;
pub mod system;

pub use attractor::{AttractorSpec, CaptureNorm, UnsafeRegion};
pub use distance::{DistanceKind, DistanceSpec, EnergyParams};
pub use error::{Error, Result};
pub use integrate::{classify, IntegratorConfig, TrajectoryOutcome, Verdict};
pub use measures::{MeasureParams, MeasureReport};
pub use sample::{PerturbationPlan, RestrictedSet};
pub use system::{DynamicalSystem, Regime, Switch};
