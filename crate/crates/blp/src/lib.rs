//! Temporal boundary localization for events in 1D signals.
//!
//! Rather than regressing two boundary coordinates, a proposal segment is
//! extended into a search interval, the interval is divided into equal
//! units, and per-unit probabilities (inside-the-event, or
//! start/end-boundary) are predicted; the event boundaries are then
//! pinpointed by maximizing the likelihood these probabilities assign to a
//! candidate unit range. The crate bundles the full desk-scale stack: the
//! interval geometry, target encoding, likelihood maximizers, training
//! losses with analytic gradients, a linear predictor over hand-crafted
//! signal features, a synthetic benchmark generator, the detection
//! pipeline with (soft-)NMS, and a mAP/recall evaluation harness with
//! ablation sweeps.

pub mod encode;
pub mod error;
pub mod eval;
pub mod loss;
pub mod pinpoint;
pub mod pipeline;
pub mod predictor;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{ClassLabel, TemporalSegment, UnitGrid};
