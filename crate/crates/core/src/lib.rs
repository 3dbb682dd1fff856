//! Ant-colony solvers for multi-depot fleet scheduling with time windows.
//!
//! The crate provides the scheduling model and simulator ([`model`]), a
//! MAX-MIN Ant System ([`colony`]), Partial-ACO with segment or vehicle
//! block preservation ([`partial`]), a clustering baseline scheduler
//! ([`baseline`]), an instance format and generator ([`instances`]) and an
//! experiment harness ([`harness`]).

pub mod baseline;
pub mod colony;
pub mod error;
pub mod harness;
pub mod instances;
pub mod model;
pub mod partial;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
