//! Protection analytics for power-system transients: labelled waveform
//! synthesis, event detection, feature extraction, from-scratch learners
//! and the relay decision layer built on them.

pub mod detector;
pub mod error;
pub mod features;
pub mod learn;
pub mod relay;
pub mod select;
pub mod txmodel;
pub mod waveform;

pub use error::{Error, Result};
