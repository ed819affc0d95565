//! Frame-level diarization scoring.
//!
//! Errors are counted on the shared frame grid without a forgiveness collar
//! and normalized by the number of reference speech (FG or BG) frames:
//!
//! - miss: reference speech, hypothesis silence;
//! - false alarm: reference silence, hypothesis speech;
//! - confusion: FG recognized as BG or the reverse.
//!
//! DER is their sum and can exceed 1.

use serde::Serialize;
use thiserror::Error;

use crate::data::FrameLabel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("reference has {0} frames but hypothesis has {1}")]
    LengthMismatch(usize, usize),
    #[error("reference contains no speech frames")]
    NoReferenceSpeech,
    #[error("nothing to aggregate")]
    EmptyList,
}

/// Frame counts behind a score; pooling sums these.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ErrorCounts {
    pub miss: usize,
    pub false_alarm: usize,
    pub confusion: usize,
    pub ref_speech: usize,
    pub total: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiarizationScore {
    pub miss: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub der: f64,
    pub ref_speech_frames: usize,
    pub total_frames: usize,
    #[serde(skip)]
    pub counts: ErrorCounts,
}

impl DiarizationScore {
    /// Rates from raw counts; fails when there is no reference speech.
    pub fn from_counts(counts: ErrorCounts) -> Result<Self, MetricsError> {
        if counts.ref_speech == 0 {
            return Err(MetricsError::NoReferenceSpeech);
        }
        let denom = counts.ref_speech as f64;
        let miss = counts.miss as f64 / denom;
        let false_alarm = counts.false_alarm as f64 / denom;
        let confusion = counts.confusion as f64 / denom;
        Ok(Self {
            miss,
            false_alarm,
            confusion,
            der: miss + false_alarm + confusion,
            ref_speech_frames: counts.ref_speech,
            total_frames: counts.total,
            counts,
        })
    }
}

pub fn count_errors(reference: &[FrameLabel], hypothesis: &[FrameLabel]) -> Result<ErrorCounts, MetricsError> {
    if reference.len() != hypothesis.len() {
        return Err(MetricsError::LengthMismatch(reference.len(), hypothesis.len()));
    }
    let mut c = ErrorCounts {
        total: reference.len(),
        ..ErrorCounts::default()
    };
    for (&r, &h) in reference.iter().zip(hypothesis) {
        match (r.is_speech(), h.is_speech()) {
            (true, false) => c.miss += 1,
            (false, true) => c.false_alarm += 1,
            (true, true) if r != h => c.confusion += 1,
            _ => {}
        }
        if r.is_speech() {
            c.ref_speech += 1;
        }
    }
    Ok(c)
}

/// Scores one hypothesis against its reference.
pub fn score(reference: &[FrameLabel], hypothesis: &[FrameLabel]) -> Result<DiarizationScore, MetricsError> {
    DiarizationScore::from_counts(count_errors(reference, hypothesis)?)
}

/// Micro-average: sums the underlying frame counts before dividing.
pub fn aggregate(scores: &[DiarizationScore]) -> Result<DiarizationScore, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    let mut total = ErrorCounts::default();
    for s in scores {
        total.miss += s.counts.miss;
        total.false_alarm += s.counts.false_alarm;
        total.confusion += s.counts.confusion;
        total.ref_speech += s.counts.ref_speech;
        total.total += s.counts.total;
    }
    DiarizationScore::from_counts(total)
}

/// Macro-average: unweighted mean of the per-recording rates.
pub fn macro_average(scores: &[DiarizationScore]) -> Result<DiarizationScore, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    let n = scores.len() as f64;
    let avg = |f: fn(&DiarizationScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let miss = avg(|s| s.miss);
    let false_alarm = avg(|s| s.false_alarm);
    let confusion = avg(|s| s.confusion);
    let micro = aggregate(scores)?;
    Ok(DiarizationScore {
        miss,
        false_alarm,
        confusion,
        der: miss + false_alarm + confusion,
        ..micro
    })
}
