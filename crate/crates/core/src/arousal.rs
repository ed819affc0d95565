//! Personalized rule-based vocal arousal.
//!
//! For each participant and feature (log pitch, intensity, HF/LF ratio) the
//! per-recording medians over foreground frames form an empirical model. A
//! recording scores `2·P(x > N) - 1` against that model, with equal samples
//! counted as half. The three per-feature score vectors are fused with weights
//! proportional to their rank correlation with the mean score vector.

use serde::Serialize;
use thiserror::Error;

use crate::behavior::{LabelSource, ShiftHalf, DEFAULT_MIN_FG_FRAMES};
use crate::data::{fg_count, FrameFeatures, FrameLabel, Participant, Recording};
use crate::stats::{quantile_sorted, spearman};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArousalError {
    #[error("{feature} model needs {need} recordings, found {have}")]
    InsufficientData {
        feature: FeatureKind,
        have: usize,
        need: usize,
    },
    #[error("fusion needs at least 3 recordings, found {0}")]
    TooFewRecordings(usize),
    #[error("score vectors differ in length")]
    LengthMismatch,
    #[error("no scored recordings in the {0} half")]
    EmptyHalf(&'static str),
    #[error("participant has no scored shift halves")]
    NoData,
    #[error("no frame labels for recording {0}")]
    MissingLabels(String),
    #[error("quantile level {0} outside [0, 1]")]
    InvalidQuantile(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    LogPitch,
    Intensity,
    HfLfRatio,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [FeatureKind::LogPitch, FeatureKind::Intensity, FeatureKind::HfLfRatio];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::LogPitch => "log_pitch",
            FeatureKind::Intensity => "intensity",
            FeatureKind::HfLfRatio => "hf_lf_ratio",
        }
    }

    /// Frame value, `None` for unvoiced pitch.
    pub fn value(self, frame: &FrameFeatures) -> Option<f64> {
        match self {
            FeatureKind::LogPitch => frame.log_pitch,
            FeatureKind::Intensity => Some(frame.intensity),
            FeatureKind::HfLfRatio => Some(frame.hf_lf_ratio),
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ArousalConfig {
    pub min_model_size: usize,
    /// FG frames a recording needs to be scored.
    pub min_fg_frames: usize,
    /// Build models from scored recordings only instead of every recording
    /// with at least one FG frame.
    pub model_from_qualifying_only: bool,
    pub percentile: f64,
}

impl Default for ArousalConfig {
    fn default() -> Self {
        Self {
            min_model_size: 20,
            min_fg_frames: DEFAULT_MIN_FG_FRAMES,
            model_from_qualifying_only: false,
            percentile: 0.9,
        }
    }
}

/// Median with the two middle values averaged for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Median of one feature over the FG frames of a recording.
pub fn fg_median(recording: &Recording, labels: &[FrameLabel], kind: FeatureKind) -> Option<f64> {
    let mut values: Vec<f64> = recording
        .frames()
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == FrameLabel::Fg)
        .filter_map(|(f, _)| kind.value(f))
        .collect();
    median(&mut values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalModel {
    pub feature_kind: FeatureKind,
    samples: Vec<f64>,
}

impl EmpiricalModel {
    pub fn new(feature_kind: FeatureKind, mut samples: Vec<f64>, min_model_size: usize) -> Result<Self, ArousalError> {
        if samples.len() < min_model_size.max(1) {
            return Err(ArousalError::InsufficientData {
                feature: feature_kind,
                have: samples.len(),
                need: min_model_size.max(1),
            });
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { feature_kind, samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One model sample per recording that has a FG median for `kind`.
pub fn build_empirical_model<'a>(
    recordings: impl IntoIterator<Item = (&'a Recording, &'a [FrameLabel])>,
    kind: FeatureKind,
    min_model_size: usize,
) -> Result<EmpiricalModel, ArousalError> {
    let samples = recordings
        .into_iter()
        .filter_map(|(r, labels)| fg_median(r, labels, kind))
        .collect();
    EmpiricalModel::new(kind, samples, min_model_size)
}

/// `2·E[x > N] - 1` with samples equal to `x` counted as half.
pub fn score_recording(x: f64, model: &EmpiricalModel) -> f64 {
    let s = &model.samples;
    let below = s.partition_point(|&v| v < x);
    let not_above = s.partition_point(|&v| v <= x);
    let e = (below as f64 + 0.5 * (not_above - below) as f64) / s.len() as f64;
    2.0 * e - 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fusion {
    pub weights: [f64; 3],
    pub correlations: [f64; 3],
    pub mean_vector: Vec<f64>,
    pub fused: Vec<f64>,
    /// Every correlation was zero and equal weights were used.
    pub degenerate: bool,
}

/// Correlation-weighted fusion of three per-feature score vectors.
///
/// A constant score vector gets zero correlation. When all three are zero the
/// weights fall back to `1/√3`.
pub fn fuse(scores: [&[f64]; 3]) -> Result<Fusion, ArousalError> {
    let n = scores[0].len();
    if scores.iter().any(|s| s.len() != n) {
        return Err(ArousalError::LengthMismatch);
    }
    if n < 3 {
        return Err(ArousalError::TooFewRecordings(n));
    }
    let mean_vector: Vec<f64> = (0..n).map(|j| scores.iter().map(|s| s[j]).sum::<f64>() / 3.0).collect();
    let mut correlations = [0.0; 3];
    for (r, s) in correlations.iter_mut().zip(scores) {
        *r = spearman(s, &mean_vector).unwrap_or(0.0);
    }
    let norm = correlations.iter().map(|r| r * r).sum::<f64>().sqrt();
    let degenerate = norm == 0.0;
    let weights = if degenerate {
        log::warn!("all score correlations are zero; using equal fusion weights");
        [1.0 / 3f64.sqrt(); 3]
    } else {
        correlations.map(|r| r / norm)
    };
    let fused = (0..n).map(|j| (0..3).map(|i| weights[i] * scores[i][j]).sum()).collect();
    Ok(Fusion {
        weights,
        correlations,
        mean_vector,
        fused,
        degenerate,
    })
}

/// Type-7 quantile of the scores whose minute falls in `half`.
pub fn shift_half_percentile(
    scores: &[(u32, f64)],
    duration_hours: f64,
    half: ShiftHalf,
    q: f64,
) -> Result<f64, ArousalError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(ArousalError::InvalidQuantile(q));
    }
    let mut values: Vec<f64> = scores
        .iter()
        .filter(|(m, _)| ShiftHalf::of_minute(*m, duration_hours) == half)
        .map(|&(_, v)| v)
        .collect();
    if values.is_empty() {
        return Err(ArousalError::EmptyHalf(half.as_str()));
    }
    values.sort_by(f64::total_cmp);
    quantile_sorted(&values, q).ok_or(ArousalError::EmptyHalf(half.as_str()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoredRecording {
    pub recording_id: String,
    pub shift_id: String,
    pub minute_index: u32,
    pub per_feature: [f64; 3],
    pub fused: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftHalfArousal {
    pub shift_id: String,
    pub half: ShiftHalf,
    pub percentile_score: f64,
    pub n_recordings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParticipantArousal {
    pub participant_id: String,
    pub model_sizes: [usize; 3],
    pub fusion: Fusion,
    pub recordings: Vec<ScoredRecording>,
    pub shift_halves: Vec<ShiftHalfArousal>,
    pub first_half: Option<f64>,
    pub second_half: Option<f64>,
}

/// Averages per-shift half percentiles; a half with no shifts is `None`.
pub fn participant_arousal_features(per_shift: &[ShiftHalfArousal]) -> Result<(Option<f64>, Option<f64>), ArousalError> {
    let mean_of = |half| {
        let v: Vec<f64> = per_shift
            .iter()
            .filter(|s| s.half == half)
            .map(|s| s.percentile_score)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    match (mean_of(ShiftHalf::First), mean_of(ShiftHalf::Second)) {
        (None, None) => Err(ArousalError::NoData),
        halves => Ok(halves),
    }
}

/// Builds models, scores and fuses every qualifying recording of a
/// participant, then summarizes each recorded shift by half.
pub fn analyze_participant(
    participant: &Participant,
    labels: &impl LabelSource,
    config: &ArousalConfig,
) -> Result<ParticipantArousal, ArousalError> {
    let mut labeled: Vec<(&str, f64, &Recording, &[FrameLabel])> = Vec::new();
    for shift in &participant.shifts {
        for rec in shift.recordings() {
            let l = labels
                .labels_for(&rec.recording_id, Some(rec))
                .ok_or_else(|| ArousalError::MissingLabels(rec.recording_id.clone()))?;
            labeled.push((shift.shift_id(), shift.duration_hours(), rec, l));
        }
    }
    let qualifies = |l: &[FrameLabel]| fg_count(l) >= config.min_fg_frames;

    let mut models = Vec::with_capacity(3);
    for kind in FeatureKind::ALL {
        let pool = labeled
            .iter()
            .filter(|(_, _, _, l)| !config.model_from_qualifying_only || qualifies(l))
            .map(|&(_, _, r, l)| (r, l));
        models.push(build_empirical_model(pool, kind, config.min_model_size)?);
    }

    let mut scored = Vec::new();
    for &(shift_id, _, rec, l) in labeled.iter().filter(|(_, _, _, l)| qualifies(l)) {
        let medians: Option<Vec<f64>> = FeatureKind::ALL.iter().map(|&k| fg_median(rec, l, k)).collect();
        if let Some(m) = medians {
            let per_feature = [0, 1, 2].map(|i| score_recording(m[i], &models[i]));
            scored.push(ScoredRecording {
                recording_id: rec.recording_id.clone(),
                shift_id: shift_id.to_string(),
                minute_index: rec.minute_index,
                per_feature,
                fused: 0.0,
            });
        }
    }
    let columns: Vec<Vec<f64>> = (0..3).map(|i| scored.iter().map(|s| s.per_feature[i]).collect()).collect();
    let fusion = fuse([&columns[0], &columns[1], &columns[2]])?;
    for (s, &f) in scored.iter_mut().zip(&fusion.fused) {
        s.fused = f;
    }

    let mut shift_halves = Vec::new();
    for shift in &participant.shifts {
        let stamps: Vec<(u32, f64)> = scored
            .iter()
            .filter(|s| s.shift_id == shift.shift_id())
            .map(|s| (s.minute_index, s.fused))
            .collect();
        for half in [ShiftHalf::First, ShiftHalf::Second] {
            let n = stamps
                .iter()
                .filter(|(m, _)| ShiftHalf::of_minute(*m, shift.duration_hours()) == half)
                .count();
            match shift_half_percentile(&stamps, shift.duration_hours(), half, config.percentile) {
                Ok(v) => shift_halves.push(ShiftHalfArousal {
                    shift_id: shift.shift_id().to_string(),
                    half,
                    percentile_score: v,
                    n_recordings: n,
                }),
                Err(ArousalError::EmptyHalf(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let (first_half, second_half) = participant_arousal_features(&shift_halves)?;
    Ok(ParticipantArousal {
        participant_id: participant.id().to_string(),
        model_sizes: [models[0].len(), models[1].len(), models[2].len()],
        fusion,
        recordings: scored,
        shift_halves,
        first_half,
        second_half,
    })
}
