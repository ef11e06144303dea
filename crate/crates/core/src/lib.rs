//! Bottleneck-guided design-space exploration for pragma-tuned HLS kernels.
//!
//! The crate is organised along the exploration flow: a [`space`] of
//! pragma parameters is generated from a [`kernel`] model, partitioned by
//! pipeline mode ([`partition`]), and each partition is explored
//! ([`explore`]) against a black-box [`eval`]uator, ranking candidates by
//! [`quality`] and focusing on parameters picked by the [`bottleneck`]
//! analyzer. [`orchestrator`] ties the steps together.

pub mod space;
pub mod generator;
pub mod kernel;
pub mod eval;
pub mod bottleneck;
pub mod quality;
pub mod explore;
pub mod partition;
pub mod orchestrator;
