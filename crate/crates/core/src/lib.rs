//! Transmission capacity of multi-antenna ad hoc networks with zero-forcing
//! interference cancellation.
//!
//! The crate couples three views of the same network:
//!
//! * closed-form laws of the effective interference model ([`model`]),
//! * outage bounds, small-density asymptotics and capacity inversion
//!   ([`analysis`]),
//! * Monte Carlo simulation of the Poisson network at channel or effective
//!   level ([`simulator`]),
//!
//! and reproduces the standard figure datasets from them ([`experiments`]).

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod model;
pub mod simulator;
pub mod special_math;
pub mod stats;

pub use analysis::{
    AsymptoticConstants, CapacityMethod, CapacityResult, OutageBounds, Regime, UpperEstimate,
};
pub use error::{Error, Result};
pub use experiments::{CapacityCurve, ExperimentSpec, FigureId};
pub use model::{derive_constants, DerivedConstants, Model, NetworkParams};
pub use simulator::{Mode, OutageEstimate, SimConfig};
pub use special_math::QuadratureSpec;
