//! Phase-noise suppression in dispersion-based (temporal Talbot) optical
//! upconversion.
//!
//! The comb is modeled in a reduced representation: a single
//! repetition-rate carrier, oversampled `N` times, whose delayed copies (one
//! per comb line) are summed as the photodiode would. A dispersive element
//! becomes a [`dispersion::DelayPlan`] of integer sample offsets.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod experiments;
pub mod model;
pub mod plot;
pub mod superposition;
pub mod synthesis;

pub use error::{Error, Result};
