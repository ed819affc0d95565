//! Communication-behavior analytics for egocentric wearable audio.
//!
//! The pipeline takes frame-wise acoustic features recorded for 20 seconds of
//! every minute of a work shift and produces:
//!
//! - foreground/background/silence frame labels from a small residual
//!   convolutional student trained with teacher distillation ([`diarizer`]),
//!   scored with the usual miss/false-alarm/confusion decomposition ([`metrics`]);
//! - speaking sessions and per-hour frequency/duration features ([`behavior`]);
//! - personalized rule-based vocal arousal scores ([`arousal`]);
//! - group comparisons and correlations ([`stats`]).
//!
//! [`synth`] generates seeded synthetic corpora in the same file formats.

pub mod arousal;
pub mod behavior;
pub mod data;
pub mod diarizer;
pub mod metrics;
pub mod stats;
pub mod synth;

pub use data::{
    Cohort, DataError, FrameFeatures, FrameLabel, Participant, Recording, Shift, SurveyRecord,
};
