//! Statistical channel model for vertical water-to-air optical links.
//!
//! A submerged laser transmits upward through a wind-driven sea surface to a
//! hovering airborne receiver. The overall channel gain factors as
//! `h = h_L * h_P * h_A`:
//!
//! - [`path_loss`]: deterministic underwater attenuation `h_L`, including the
//!   wind-dependent bubble layer.
//! - [`surface`] and [`pointing`]: refraction at the sea surface, the
//!   resulting angle of arrival and the pointing-error loss `h_P`.
//! - [`beta_mixture`]: the two-component Beta mixture that approximates the
//!   normalized pointing loss, fitted by expectation maximization.
//! - [`outage`]: interruption probabilities (`h_A`), the mixed channel density
//!   and the closed-form outage probability.
//! - [`montecarlo`]: the exact sampler every closed form is validated against.
//!
//! Angles are carried in degrees unless a field name says otherwise.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::redundant_guards
)]

pub mod beta_mixture;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod outage;
pub mod path_loss;
pub mod pointing;
pub mod stats;
pub mod surface;

pub use error::{Error, Result};
