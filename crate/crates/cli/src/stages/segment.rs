//! Speech sessions and communication-behavior features of compliant participants.

use serde::{Deserialize, Serialize};
use wearcomm_core::behavior::{participant_features, shift_entry_sessions, shift_features, LabelSource};
use wearcomm_core::data::{AgeGroup, CohortIndex, Sex, ShiftType, WorkUnit};

use super::{cohort_labels, label_prerequisites, load_cohort_index, write_csv};
use crate::error::CliError;
use crate::manifest::StageManifest;
use crate::{Context, Stage};

pub const PARTICIPANT_FEATURES: &str = "participant_features.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRow {
    pub participant_id: String,
    pub shift_id: String,
    pub session_index: usize,
    pub first_minute: u32,
    pub last_minute: u32,
    pub duration_min: f64,
    pub half: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftFeatureRow {
    pub participant_id: String,
    pub shift_id: String,
    pub shift_type: ShiftType,
    pub duration_hours: f64,
    pub n_recordings: usize,
    pub n_sessions: usize,
    pub sessions_per_hour: f64,
    pub avg_session_duration_min: Option<f64>,
}

/// Participant-level features joined with demographics and surveys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantFeatureRow {
    pub participant_id: String,
    pub work_unit: WorkUnit,
    pub primary_shift: ShiftType,
    pub sex: Sex,
    pub age_group: AgeGroup,
    pub n_shifts: usize,
    pub n_sessions: usize,
    pub sessions_per_hour: f64,
    pub avg_session_duration_min: Option<f64>,
    pub stai_total: Option<i64>,
    pub irb_total: Option<i64>,
}

/// Sessions, shift features and participant features of every participant
/// in `index`, each list sorted by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Segmentation {
    pub sessions: Vec<SessionRow>,
    pub shifts: Vec<ShiftFeatureRow>,
    pub participants: Vec<ParticipantFeatureRow>,
}

pub fn segment(index: &CohortIndex, labels: &impl LabelSource, min_fg_frames: usize) -> Result<Segmentation, CliError> {
    let mut out = Segmentation::default();
    for p in &index.participants {
        let pid = &p.info.participant_id;
        let mut per_shift = Vec::new();
        for s in p.shifts.iter().filter(|s| !s.recordings.is_empty()) {
            let sessions = shift_entry_sessions(s, labels, min_fg_frames)?;
            for (i, sess) in sessions.iter().enumerate() {
                out.sessions.push(SessionRow {
                    participant_id: pid.clone(),
                    shift_id: s.info.shift_id.clone(),
                    session_index: i,
                    first_minute: sess.first_minute(),
                    last_minute: *sess.minute_indices.last().expect("sessions are nonempty"),
                    duration_min: sess.duration_minutes(),
                    half: sess.half(s.info.duration_hours).as_str().into(),
                });
            }
            let f = shift_features(&s.info, &sessions)?;
            out.shifts.push(ShiftFeatureRow {
                participant_id: pid.clone(),
                shift_id: s.info.shift_id.clone(),
                shift_type: s.info.shift_type,
                duration_hours: s.info.duration_hours,
                n_recordings: s.recordings.len(),
                n_sessions: f.n_sessions,
                sessions_per_hour: f.sessions_per_hour,
                avg_session_duration_min: f.avg_session_duration_min,
            });
            per_shift.push(f);
        }
        let f = participant_features(&per_shift)?;
        out.participants.push(ParticipantFeatureRow {
            participant_id: pid.clone(),
            work_unit: p.info.work_unit,
            primary_shift: p.info.primary_shift,
            sex: p.info.sex,
            age_group: p.info.age_group,
            n_shifts: per_shift.len(),
            n_sessions: f.n_sessions,
            sessions_per_hour: f.sessions_per_hour,
            avg_session_duration_min: f.avg_session_duration_min,
            stai_total: p.surveys.stai_total,
            irb_total: p.surveys.irb_total,
        });
    }
    out.sessions.sort_by(|a, b| {
        (&a.participant_id, &a.shift_id, a.session_index).cmp(&(&b.participant_id, &b.shift_id, b.session_index))
    });
    out.shifts.sort_by(|a, b| (&a.participant_id, &a.shift_id).cmp(&(&b.participant_id, &b.shift_id)));
    out.participants.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
    Ok(out)
}

pub fn run(ctx: &Context) -> Result<StageManifest, CliError> {
    let inputs = ctx.require_all(Stage::Segment, label_prerequisites(ctx))?;
    let index = load_cohort_index(ctx)?.filter_compliant(ctx.config.behavior.min_shifts);
    let labels = cohort_labels(ctx, &index)?;
    let seg = segment(&index, &labels, ctx.config.behavior.min_fg_frames)?;
    log::info!(
        "{} compliant participants, {} sessions",
        seg.participants.len(),
        seg.sessions.len()
    );

    let dir = ctx.fresh_dir(Stage::Segment)?;
    write_csv(&dir.join("sessions.csv"), &seg.sessions)?;
    write_csv(&dir.join("shift_features.csv"), &seg.shifts)?;
    write_csv(&dir.join(PARTICIPANT_FEATURES), &seg.participants)?;
    ctx.finish(Stage::Segment, inputs)
}
