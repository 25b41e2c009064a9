//! Police presence measurement from smartphone GPS pings.
//!
//! The pipeline identifies devices that belong to police employees from
//! repeated visits to station geofences, infers each device's home cell,
//! reconstructs patrol shifts bracketed by home visits, credits patrol pings
//! with dwell time inside census block groups, and fits the disparity
//! regressions on the resulting officer-hours. A synthetic city generator
//! with planted ground truth exercises every stage.

pub mod corpus;
pub mod econ;
pub mod error;
pub mod geo;
pub mod officers;
pub mod pipeline;
pub mod presence;
pub mod shifts;
pub mod synth;

pub use error::{Error, Result};
