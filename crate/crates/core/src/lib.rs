//! Continuous 4D dynamics: rigid geometry, motion-basis blending, B-spline
//! motion fitting with a physics prior, synthetic scenes, scaffold
//! projection, epipolar/image metrics and the file formats tying them together.

pub mod cli;
pub mod error;
pub mod evaluate;
pub mod fitting;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod registry;
pub mod scaffold;
pub mod spline;
pub mod synth;

pub use error::{Error, Result};
