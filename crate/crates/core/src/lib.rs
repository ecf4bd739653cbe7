//! Desk-scale simulation of the physical-signal attack pathway against
//! VR-class devices: attack-signal synthesis, sensor transduction and
//! aliasing, inertial dead-reckoning, dual-rate fusion bypass, human-effect
//! models, and countermeasure prototypes.
//!
//! The pathway runs `physical signal -> sensor measurement -> system
//! service -> human perception/action`; each module owns one stage:
//!
//! - [`waveforms`]: parametric attack signals (tones, sweeps, coil current)
//! - [`sensing`]: resonance transduction, sampling/aliasing, Hall coupling
//! - [`nav`]: preintegration dead-reckoning and trajectory error stats
//! - [`fusion`]: dual-rate error-state filtering and the bypass arithmetic
//! - [`perception`]: walking/hand-offset thresholds and dizziness metrics
//! - [`defense`]: spectral and correlation detectors, vibration feedback
//! - [`looptf`]: closed-loop transfer-function algebra

// `!(v > 0.0)` is the domain check used throughout: it rejects NaN along
// with non-positive values, which `v <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod defense;
pub mod error;
pub mod fusion;
pub mod looptf;
pub mod nav;
pub mod perception;
pub mod sensing;
pub mod series;
pub mod waveforms;

pub use error::{Error, Result};
