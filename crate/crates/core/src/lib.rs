//! Snapshot HDR reconstruction from four-orientation polarization cameras.
//!
//! The crate covers the polarizer formation model and Stokes inversion,
//! camera response handling and recovery, a seeded synthetic scene
//! simulator, weighted per-pixel fusion of the four orientations,
//! bracket merging, tone mapping and image-quality metrics.

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crf;
pub mod error;
pub mod fusion;
pub mod hdrops;
pub mod imgcore;
pub mod metrics;
pub mod polar;
pub mod synth;
mod util;

pub use error::{Error, Result};
pub use util::{compensated_sum, quantize};
