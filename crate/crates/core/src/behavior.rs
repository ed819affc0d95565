//! Speaking sessions and frequency/duration features.
//!
//! A recording qualifies when it holds at least `min_fg_frames` foreground
//! frames. A session is a maximal run of qualifying recordings on consecutive
//! minutes of the sensing grid; its duration is its recording count in minutes.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::data::{fg_count, FrameLabel, Recording, Shift, ShiftEntry, ShiftInfo};

pub const DEFAULT_MIN_FG_FRAMES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BehaviorError {
    #[error("no frame labels for recording {0}")]
    MissingLabels(String),
    #[error("minute indices must be strictly increasing")]
    UnsortedInput,
    #[error("shift {0} has zero duration")]
    ZeroDuration(String),
    #[error("no shifts with features")]
    NoShifts,
}

/// Where frame labels for a recording come from.
pub trait LabelSource {
    fn labels_for<'a>(&'a self, recording_id: &str, recording: Option<&'a Recording>) -> Option<&'a [FrameLabel]>;
}

/// Uses the labels stored in each recording (reference annotation).
#[derive(Clone, Copy, Debug, Default)]
pub struct EmbeddedLabels;

impl LabelSource for EmbeddedLabels {
    fn labels_for<'a>(&'a self, _: &str, recording: Option<&'a Recording>) -> Option<&'a [FrameLabel]> {
        recording.and_then(Recording::labels)
    }
}

impl LabelSource for BTreeMap<String, Vec<FrameLabel>> {
    fn labels_for<'a>(&'a self, recording_id: &str, _: Option<&'a Recording>) -> Option<&'a [FrameLabel]> {
        self.get(recording_id).map(Vec::as_slice)
    }
}

impl LabelSource for HashMap<String, Vec<FrameLabel>> {
    fn labels_for<'a>(&'a self, recording_id: &str, _: Option<&'a Recording>) -> Option<&'a [FrameLabel]> {
        self.get(recording_id).map(Vec::as_slice)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftHalf {
    First,
    Second,
}

impl ShiftHalf {
    /// Splits the shift at `duration_hours / 2` on the minute grid.
    pub fn of_minute(minute_index: u32, duration_hours: f64) -> Self {
        if f64::from(minute_index) < duration_hours * 30.0 {
            ShiftHalf::First
        } else {
            ShiftHalf::Second
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ShiftHalf::First => "first",
            ShiftHalf::Second => "second",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Session {
    pub minute_indices: Vec<u32>,
    pub recording_ids: Vec<String>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.minute_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minute_indices.is_empty()
    }

    pub fn duration_minutes(&self) -> f64 {
        self.len() as f64
    }

    pub fn first_minute(&self) -> u32 {
        self.minute_indices[0]
    }

    /// A session straddling the midpoint belongs to the half of its first minute.
    pub fn half(&self, duration_hours: f64) -> ShiftHalf {
        ShiftHalf::of_minute(self.first_minute(), duration_hours)
    }
}

fn qualify<'a>(
    items: impl Iterator<Item = (u32, &'a str, Option<&'a [FrameLabel]>)>,
    min_fg_frames: usize,
) -> Result<Vec<(u32, String)>, BehaviorError> {
    let mut out = Vec::new();
    for (minute, id, labels) in items {
        let labels = labels.ok_or_else(|| BehaviorError::MissingLabels(id.to_string()))?;
        if fg_count(labels) >= min_fg_frames {
            out.push((minute, id.to_string()));
        }
    }
    out.sort_by_key(|(m, _)| *m);
    Ok(out)
}

/// Sorted minute indices of recordings with at least `min_fg_frames` FG frames.
pub fn qualify_recordings(
    shift: &Shift,
    labels: &impl LabelSource,
    min_fg_frames: usize,
) -> Result<Vec<u32>, BehaviorError> {
    Ok(qualified(shift, labels, min_fg_frames)?.into_iter().map(|(m, _)| m).collect())
}

fn qualified(shift: &Shift, labels: &impl LabelSource, min_fg_frames: usize) -> Result<Vec<(u32, String)>, BehaviorError> {
    qualify(
        shift
            .recordings()
            .iter()
            .map(|r| (r.minute_index, r.recording_id.as_str(), labels.labels_for(&r.recording_id, Some(r)))),
        min_fg_frames,
    )
}

/// Groups sorted, unique minute indices into maximal consecutive runs.
pub fn segment_sessions(minute_indices: &[u32]) -> Result<Vec<Session>, BehaviorError> {
    if minute_indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BehaviorError::UnsortedInput);
    }
    let mut sessions: Vec<Session> = Vec::new();
    for &m in minute_indices {
        match sessions.last_mut() {
            Some(s) if s.minute_indices.last().map(|&p| p + 1) == Some(m) => s.minute_indices.push(m),
            _ => sessions.push(Session {
                minute_indices: vec![m],
                recording_ids: Vec::new(),
            }),
        }
    }
    Ok(sessions)
}

fn sessions_with_ids(qualified: Vec<(u32, String)>) -> Result<Vec<Session>, BehaviorError> {
    let minutes: Vec<u32> = qualified.iter().map(|(m, _)| *m).collect();
    let mut sessions = segment_sessions(&minutes)?;
    let mut ids = qualified.into_iter().map(|(_, id)| id);
    for s in &mut sessions {
        s.recording_ids = ids.by_ref().take(s.len()).collect();
    }
    Ok(sessions)
}

/// Qualifies and segments the recordings of one loaded shift.
pub fn shift_sessions(
    shift: &Shift,
    labels: &impl LabelSource,
    min_fg_frames: usize,
) -> Result<Vec<Session>, BehaviorError> {
    sessions_with_ids(qualified(shift, labels, min_fg_frames)?)
}

/// Same as [`shift_sessions`] for a manifest entry, labels looked up by id.
pub fn shift_entry_sessions(
    shift: &ShiftEntry,
    labels: &impl LabelSource,
    min_fg_frames: usize,
) -> Result<Vec<Session>, BehaviorError> {
    let items = shift
        .recordings
        .iter()
        .map(|r| (r.minute_index, r.recording_id.as_str(), labels.labels_for(&r.recording_id, None)));
    sessions_with_ids(qualify(items, min_fg_frames)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BehaviorFeatures {
    pub sessions_per_hour: f64,
    /// Mean session length in minutes; `None` when there are no sessions.
    pub avg_session_duration_min: Option<f64>,
    pub n_sessions: usize,
}

/// Sessions per hour and mean session duration for one shift.
pub fn shift_features(shift: &ShiftInfo, sessions: &[Session]) -> Result<BehaviorFeatures, BehaviorError> {
    if !(shift.duration_hours > 0.0) {
        return Err(BehaviorError::ZeroDuration(shift.shift_id.clone()));
    }
    let n = sessions.len();
    let avg = (n > 0).then(|| sessions.iter().map(Session::duration_minutes).sum::<f64>() / n as f64);
    Ok(BehaviorFeatures {
        sessions_per_hour: n as f64 / shift.duration_hours,
        avg_session_duration_min: avg,
        n_sessions: n,
    })
}

/// Unweighted mean over shifts. Durations average over the shifts that have
/// sessions; `n_sessions` is the total.
pub fn participant_features(per_shift: &[BehaviorFeatures]) -> Result<BehaviorFeatures, BehaviorError> {
    if per_shift.is_empty() {
        return Err(BehaviorError::NoShifts);
    }
    let rate = per_shift.iter().map(|f| f.sessions_per_hour).sum::<f64>() / per_shift.len() as f64;
    let durations: Vec<f64> = per_shift.iter().filter_map(|f| f.avg_session_duration_min).collect();
    let avg = (!durations.is_empty()).then(|| durations.iter().sum::<f64>() / durations.len() as f64);
    Ok(BehaviorFeatures {
        sessions_per_hour: rate,
        avg_session_duration_min: avg,
        n_sessions: per_shift.iter().map(|f| f.n_sessions).sum(),
    })
}
