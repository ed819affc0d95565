//! Cohort data model and the text formats it is read from.
//!
//! A cohort is a list of participants, each with work shifts, each holding
//! the 20-second feature recordings captured on the one-minute sensing grid.
//! Frames sit on a fixed 10 ms hop, so a full recording is 2000 frames.

mod features;
mod manifest;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{
    parse_recording, parse_teacher_posteriors, write_recording, write_teacher_posteriors,
    FeatureFileFormat, TeacherPosteriors,
};
pub use manifest::{
    filter_compliant, parse_manifest, parse_manifest_index, parse_surveys, write_manifest,
    write_surveys, CohortIndex, ParticipantEntry, RecordingRef, ShiftEntry,
};

/// Number of cepstral coefficients per frame (MFCC 1-12).
pub const MFCC_DIM: usize = 12;
/// Frame hop of the feature extractor, in milliseconds.
pub const FRAME_HOP_MS: u32 = 10;
/// Frames in one full 20-second recording.
pub const MAX_FRAMES: usize = 2000;
/// Tolerance on teacher posterior row sums.
pub const POSTERIOR_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: frame_index {index} does not increase")]
    NonMonotoneFrameIndex { line: u64, index: u32 },
    #[error("recording has {0} frames, more than {MAX_FRAMES}")]
    TooManyFrames(usize),
    #[error("recording has no frames")]
    EmptyRecording,
    #[error("{count} labels for {frames} frames")]
    LabelLengthMismatch { count: usize, frames: usize },
    #[error("frame {frame_index}: {reason}")]
    InvalidFrame { frame_index: u32, reason: String },
    #[error("unknown level {value:?} for {field}")]
    UnknownEnumLevel { field: &'static str, value: String },
    #[error("participant {0} declared twice")]
    DuplicateParticipantId(String),
    #[error("shift {participant_id}/{shift_id} declared twice")]
    DuplicateShiftId {
        participant_id: String,
        shift_id: String,
    },
    #[error("{what} refers to unknown {target} {id:?}")]
    UnknownReference {
        what: &'static str,
        target: &'static str,
        id: String,
    },
    #[error("recording {recording_id} points to missing file {path}")]
    DanglingRecordingRef { recording_id: String, path: String },
    #[error("shift {shift_id}: minute {minute_index} outside a {duration_hours} h shift")]
    MinuteOutOfRange {
        shift_id: String,
        minute_index: u32,
        duration_hours: f64,
    },
    #[error("shift {shift_id}: minute {minute_index} recorded twice")]
    DuplicateMinute { shift_id: String, minute_index: u32 },
    #[error("shift {shift_id}: duration must be positive, got {duration_hours}")]
    BadDuration { shift_id: String, duration_hours: f64 },
    #[error("line {line}: posterior row {reason}")]
    InvalidPosterior { line: u64, reason: String },
    #[error("teacher posteriors for {recording_id} do not align with its frames: {reason}")]
    PosteriorMisaligned { recording_id: String, reason: String },
    #[error("participant {participant_id}: {field} = {value} outside [{lo}, {hi}]")]
    SurveyOutOfRange {
        participant_id: String,
        field: &'static str,
        value: i64,
        lo: i64,
        hi: i64,
    },
    #[error("manifest line {line}: {source}")]
    Json {
        line: u64,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Per-frame diarization class. The derived order (FG < BG < S) is the
/// tie-break order used wherever an argmax is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrameLabel {
    #[serde(rename = "FG")]
    Fg,
    #[serde(rename = "BG")]
    Bg,
    #[serde(rename = "S")]
    S,
}

impl FrameLabel {
    pub const ALL: [FrameLabel; 3] = [FrameLabel::Fg, FrameLabel::Bg, FrameLabel::S];

    pub fn index(self) -> usize {
        match self {
            FrameLabel::Fg => 0,
            FrameLabel::Bg => 1,
            FrameLabel::S => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_speech(self) -> bool {
        self != FrameLabel::S
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FrameLabel::Fg => "FG",
            FrameLabel::Bg => "BG",
            FrameLabel::S => "S",
        }
    }

    /// One-character code used by compact label files.
    pub fn as_char(self) -> char {
        match self {
            FrameLabel::Fg => 'F',
            FrameLabel::Bg => 'B',
            FrameLabel::S => 'S',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'F' => Some(FrameLabel::Fg),
            'B' => Some(FrameLabel::Bg),
            'S' => Some(FrameLabel::S),
            _ => None,
        }
    }
}

impl fmt::Display for FrameLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FrameLabel {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "FG" => Ok(FrameLabel::Fg),
            "BG" => Ok(FrameLabel::Bg),
            "S" => Ok(FrameLabel::S),
            _ => Err(DataError::UnknownEnumLevel {
                field: "label",
                value: s.to_string(),
            }),
        }
    }
}

/// Encode labels as a compact `F`/`B`/`S` string.
pub fn labels_to_string(labels: &[FrameLabel]) -> String {
    labels.iter().map(|l| l.as_char()).collect()
}

pub fn labels_from_str(s: &str) -> Option<Vec<FrameLabel>> {
    s.chars().map(FrameLabel::from_char).collect()
}

/// Count of foreground frames in a label sequence.
pub fn fg_count(labels: &[FrameLabel]) -> usize {
    labels.iter().filter(|&&l| l == FrameLabel::Fg).count()
}

/// One 10 ms frame of low-level descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameFeatures {
    pub frame_index: u32,
    pub mfcc: [f64; MFCC_DIM],
    /// Log F0 in log-Hz; `None` for unvoiced frames.
    pub log_pitch: Option<f64>,
    /// Loudness, linear units.
    pub intensity: f64,
    pub hf_lf_ratio: f64,
}

impl FrameFeatures {
    fn validate(&self) -> Result<(), DataError> {
        let bad = |reason: &str| DataError::InvalidFrame {
            frame_index: self.frame_index,
            reason: reason.to_string(),
        };
        if self.mfcc.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite mfcc"));
        }
        if self.log_pitch.is_some_and(|p| !p.is_finite()) {
            return Err(bad("non-finite log_pitch"));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(bad("intensity must be finite and >= 0"));
        }
        if !(self.hf_lf_ratio.is_finite() && self.hf_lf_ratio >= 0.0) {
            return Err(bad("hf_lf_ratio must be finite and >= 0"));
        }
        Ok(())
    }
}

/// A single 20-second feature window sampled at `minute_index` of a shift.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub recording_id: String,
    pub minute_index: u32,
    frames: Vec<FrameFeatures>,
    labels: Option<Vec<FrameLabel>>,
}

impl Recording {
    pub fn new(
        recording_id: impl Into<String>,
        minute_index: u32,
        frames: Vec<FrameFeatures>,
        labels: Option<Vec<FrameLabel>>,
    ) -> Result<Self, DataError> {
        if frames.is_empty() {
            return Err(DataError::EmptyRecording);
        }
        if frames.len() > MAX_FRAMES {
            return Err(DataError::TooManyFrames(frames.len()));
        }
        for (i, pair) in frames.windows(2).enumerate() {
            if pair[1].frame_index <= pair[0].frame_index {
                return Err(DataError::NonMonotoneFrameIndex {
                    line: i as u64 + 2,
                    index: pair[1].frame_index,
                });
            }
        }
        for frame in &frames {
            frame.validate()?;
        }
        if let Some(labels) = &labels {
            if labels.len() != frames.len() {
                return Err(DataError::LabelLengthMismatch {
                    count: labels.len(),
                    frames: frames.len(),
                });
            }
        }
        Ok(Self {
            recording_id: recording_id.into(),
            minute_index,
            frames,
            labels,
        })
    }

    pub fn frames(&self) -> &[FrameFeatures] {
        &self.frames
    }

    pub fn labels(&self) -> Option<&[FrameLabel]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// MFCC rows, the diarizer's input.
    pub fn mfcc_matrix(&self) -> Vec<[f64; MFCC_DIM]> {
        self.frames.iter().map(|f| f.mfcc).collect()
    }

    pub fn with_labels(mut self, labels: Option<Vec<FrameLabel>>) -> Result<Self, DataError> {
        if let Some(l) = &labels {
            if l.len() != self.frames.len() {
                return Err(DataError::LabelLengthMismatch {
                    count: l.len(),
                    frames: self.frames.len(),
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }
}

macro_rules! level_enum {
    ($(#[$meta:meta])* $name:ident, $field:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = DataError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(DataError::UnknownEnumLevel { field: $field, value: s.to_string() }),
                }
            }
        }
    };
}

level_enum!(ShiftType, "shift_type", { Day => "day", Night => "night" });
level_enum!(Sex, "sex", { Male => "male", Female => "female" });
level_enum!(AgeGroup, "age_group", { Under40 => "under40", From40To49 => "40to49", Over50 => "50plus" });
level_enum!(
    /// Primary hospital work unit.
    WorkUnit, "work_unit", {
        Icu => "ICU",
        NonIcu => "nonICU",
        Float => "float",
        Lab => "lab",
        Office => "office",
        Other => "other",
    }
);

pub const STAI_RANGE: (i64, i64) = (40, 160);
pub const IRB_RANGE: (i64, i64) = (7, 49);

/// Baseline self-report totals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub stai_total: Option<i64>,
    pub irb_total: Option<i64>,
}

impl SurveyRecord {
    pub fn validate(&self, participant_id: &str) -> Result<(), DataError> {
        let check = |field, value: Option<i64>, (lo, hi): (i64, i64)| match value {
            Some(v) if v < lo || v > hi => Err(DataError::SurveyOutOfRange {
                participant_id: participant_id.to_string(),
                field,
                value: v,
                lo,
                hi,
            }),
            _ => Ok(()),
        };
        check("stai_total", self.stai_total, STAI_RANGE)?;
        check("irb_total", self.irb_total, IRB_RANGE)
    }
}

/// Shift descriptor shared by loaded shifts and manifest entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftInfo {
    pub shift_id: String,
    pub shift_type: ShiftType,
    /// RFC 3339 wall-clock start.
    pub start_time: String,
    pub duration_hours: f64,
}

impl ShiftInfo {
    pub fn duration_minutes(&self) -> f64 {
        self.duration_hours * 60.0
    }

    fn check_minute(&self, minute_index: u32) -> Result<(), DataError> {
        if f64::from(minute_index) >= self.duration_minutes() {
            return Err(DataError::MinuteOutOfRange {
                shift_id: self.shift_id.clone(),
                minute_index,
                duration_hours: self.duration_hours,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Shift {
    pub info: ShiftInfo,
    recordings: Vec<Recording>,
}

impl Shift {
    /// Builds a shift, sorting recordings by minute and checking the grid.
    pub fn new(info: ShiftInfo, mut recordings: Vec<Recording>) -> Result<Self, DataError> {
        if !(info.duration_hours.is_finite() && info.duration_hours > 0.0) {
            return Err(DataError::BadDuration {
                shift_id: info.shift_id.clone(),
                duration_hours: info.duration_hours,
            });
        }
        recordings.sort_by_key(|r| r.minute_index);
        for r in &recordings {
            info.check_minute(r.minute_index)?;
        }
        if let Some(pair) = recordings
            .windows(2)
            .find(|p| p[0].minute_index == p[1].minute_index)
        {
            return Err(DataError::DuplicateMinute {
                shift_id: info.shift_id.clone(),
                minute_index: pair[1].minute_index,
            });
        }
        Ok(Self { info, recordings })
    }

    pub fn recordings(&self) -> &[Recording] {
        &self.recordings
    }

    pub fn shift_id(&self) -> &str {
        &self.info.shift_id
    }

    pub fn duration_hours(&self) -> f64 {
        self.info.duration_hours
    }
}

/// Participant-level descriptors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantInfo {
    pub participant_id: String,
    pub sex: Sex,
    pub age_group: AgeGroup,
    pub work_unit: WorkUnit,
    pub primary_shift: ShiftType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Participant {
    pub info: ParticipantInfo,
    pub shifts: Vec<Shift>,
    pub surveys: SurveyRecord,
}

impl Participant {
    pub fn id(&self) -> &str {
        &self.info.participant_id
    }

    /// Shifts holding at least one recording.
    pub fn recorded_shifts(&self) -> usize {
        self.shifts
            .iter()
            .filter(|s| !s.recordings().is_empty())
            .count()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cohort {
    pub participants: Vec<Participant>,
}

impl Cohort {
    pub fn shift_count(&self) -> usize {
        self.participants.iter().map(|p| p.shifts.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(i: u32) -> FrameFeatures {
        FrameFeatures {
            frame_index: i,
            mfcc: [0.0; MFCC_DIM],
            log_pitch: None,
            intensity: 1.0,
            hf_lf_ratio: 0.5,
        }
    }

    #[test]
    fn label_codes_round_trip() {
        for l in FrameLabel::ALL {
            assert_eq!(FrameLabel::from_char(l.as_char()), Some(l));
            assert_eq!(l.as_str().parse::<FrameLabel>().unwrap(), l);
            assert_eq!(FrameLabel::from_index(l.index()), Some(l));
        }
        assert!(FrameLabel::Fg < FrameLabel::Bg && FrameLabel::Bg < FrameLabel::S);
    }

    #[test]
    fn unknown_work_unit() {
        let err = "ER".parse::<WorkUnit>().unwrap_err();
        assert!(matches!(err, DataError::UnknownEnumLevel { field: "work_unit", .. }));
        assert_eq!("40to49".parse::<AgeGroup>().unwrap(), AgeGroup::From40To49);
    }

    #[test]
    fn recording_invariants() {
        assert!(matches!(
            Recording::new("r", 0, vec![], None),
            Err(DataError::EmptyRecording)
        ));
        let too_many: Vec<_> = (0..2001).map(frame).collect();
        assert!(matches!(
            Recording::new("r", 0, too_many, None),
            Err(DataError::TooManyFrames(2001))
        ));
        let rec = Recording::new("r", 0, vec![frame(0), frame(1)], Some(vec![FrameLabel::Fg]));
        assert!(matches!(rec, Err(DataError::LabelLengthMismatch { .. })));
        let mut bad = frame(0);
        bad.intensity = -1.0;
        assert!(matches!(
            Recording::new("r", 0, vec![bad], None),
            Err(DataError::InvalidFrame { .. })
        ));
    }

    #[test]
    fn shift_grid_checks() {
        let info = ShiftInfo {
            shift_id: "s".into(),
            shift_type: ShiftType::Day,
            start_time: "2018-03-05T07:00:00Z".into(),
            duration_hours: 1.0,
        };
        let rec = |m| Recording::new(format!("r{m}"), m, vec![frame(0)], None).unwrap();
        let shift = Shift::new(info.clone(), vec![rec(5), rec(1)]).unwrap();
        assert_eq!(shift.recordings()[0].minute_index, 1);
        assert!(matches!(
            Shift::new(info.clone(), vec![rec(60)]),
            Err(DataError::MinuteOutOfRange { .. })
        ));
        assert!(matches!(
            Shift::new(info, vec![rec(3), rec(3)]),
            Err(DataError::DuplicateMinute { .. })
        ));
    }

    #[test]
    fn survey_ranges() {
        let ok = SurveyRecord { stai_total: Some(40), irb_total: Some(49) };
        assert!(ok.validate("p").is_ok());
        let bad = SurveyRecord { stai_total: Some(39), irb_total: None };
        assert!(matches!(bad.validate("p"), Err(DataError::SurveyOutOfRange { .. })));
    }
}
