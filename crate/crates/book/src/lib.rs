//! The guide's chapters, included so `cargo test` runs every listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/mmas.md")]
pub mod mmas {}

#[doc = include_str!("../../../book/src/partial.md")]
pub mod partial {}

#[doc = include_str!("../../../book/src/instances.md")]
pub mod instances {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
