//! Personalized vocal-arousal scores of compliant participants.
//!
//! Participants without enough recordings to build their reference models
//! or to fuse scores are listed in `skipped.csv` with the reason.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wearcomm_core::arousal::{analyze_participant, ArousalConfig, ArousalError, ParticipantArousal};
use wearcomm_core::data::ShiftType;

use super::{cohort_labels, label_prerequisites, load_cohort_index, load_participant, write_csv};
use crate::error::CliError;
use crate::manifest::StageManifest;
use crate::{Context, Stage};

pub const PARTICIPANT_AROUSAL: &str = "participant_arousal.csv";
pub const RECORDINGS: &str = "recordings.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftHalfRow {
    pub participant_id: String,
    pub shift_id: String,
    pub shift_type: ShiftType,
    pub half: String,
    pub percentile_arousal: f64,
    pub n_recordings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantArousalRow {
    pub participant_id: String,
    pub first_half: Option<f64>,
    pub second_half: Option<f64>,
    pub n_scored: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionRow {
    pub participant_id: String,
    pub w_log_pitch: f64,
    pub w_intensity: f64,
    pub w_hf_lf_ratio: f64,
    pub r_log_pitch: f64,
    pub r_intensity: f64,
    pub r_hf_lf_ratio: f64,
    pub equal_weights: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingRow {
    pub participant_id: String,
    pub shift_id: String,
    pub shift_type: ShiftType,
    pub minute_index: u32,
    pub score_log_pitch: f64,
    pub score_intensity: f64,
    pub score_hf_lf_ratio: f64,
    pub fused: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub participant_id: String,
    pub reason: String,
}

fn skippable(e: &ArousalError) -> bool {
    matches!(
        e,
        ArousalError::InsufficientData { .. } | ArousalError::TooFewRecordings(_) | ArousalError::NoData
    )
}

pub fn run(ctx: &Context) -> Result<StageManifest, CliError> {
    let inputs = ctx.require_all(Stage::Arousal, label_prerequisites(ctx))?;
    let index = load_cohort_index(ctx)?.filter_compliant(ctx.config.behavior.min_shifts);
    let labels = cohort_labels(ctx, &index)?;
    let a = &ctx.config.arousal;
    let cfg = ArousalConfig {
        min_model_size: a.min_model_size,
        min_fg_frames: ctx.config.behavior.min_fg_frames,
        model_from_qualifying_only: a.model_from_qualifying_only,
        percentile: a.quantile,
    };

    type Outcome = (String, BTreeMap<String, ShiftType>, Result<ParticipantArousal, ArousalError>);
    let mut results: Vec<Outcome> = index
        .participants
        .par_iter()
        .map(|entry| {
            let p = load_participant(ctx, entry)?;
            let types = p.shifts.iter().map(|s| (s.shift_id().to_string(), s.info.shift_type)).collect();
            Ok((p.id().to_string(), types, analyze_participant(&p, &labels, &cfg)))
        })
        .collect::<Result<_, CliError>>()?;
    results.sort_by(|a, b| a.0.cmp(&b.0));

    let mut halves = Vec::new();
    let mut participants = Vec::new();
    let mut fusion = Vec::new();
    let mut recordings = Vec::new();
    let mut skipped = Vec::new();
    for (pid, types, outcome) in results {
        let pa = match outcome {
            Ok(pa) => pa,
            Err(e) if skippable(&e) => {
                log::warn!("arousal: skipping {pid}: {e}");
                skipped.push(SkippedRow {
                    participant_id: pid,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for h in &pa.shift_halves {
            halves.push(ShiftHalfRow {
                participant_id: pid.clone(),
                shift_id: h.shift_id.clone(),
                shift_type: types[&h.shift_id],
                half: h.half.as_str().into(),
                percentile_arousal: h.percentile_score,
                n_recordings: h.n_recordings,
            });
        }
        for r in &pa.recordings {
            recordings.push(RecordingRow {
                participant_id: pid.clone(),
                shift_id: r.shift_id.clone(),
                shift_type: types[&r.shift_id],
                minute_index: r.minute_index,
                score_log_pitch: r.per_feature[0],
                score_intensity: r.per_feature[1],
                score_hf_lf_ratio: r.per_feature[2],
                fused: r.fused,
            });
        }
        let f = &pa.fusion;
        fusion.push(FusionRow {
            participant_id: pid.clone(),
            w_log_pitch: f.weights[0],
            w_intensity: f.weights[1],
            w_hf_lf_ratio: f.weights[2],
            r_log_pitch: f.correlations[0],
            r_intensity: f.correlations[1],
            r_hf_lf_ratio: f.correlations[2],
            equal_weights: f.degenerate,
        });
        participants.push(ParticipantArousalRow {
            participant_id: pid,
            first_half: pa.first_half,
            second_half: pa.second_half,
            n_scored: pa.recordings.len(),
        });
    }
    log::info!(
        "arousal: {} participants scored, {} skipped",
        participants.len(),
        skipped.len()
    );

    let dir = ctx.fresh_dir(Stage::Arousal)?;
    write_csv(&dir.join("shift_halves.csv"), &halves)?;
    write_csv(&dir.join(PARTICIPANT_AROUSAL), &participants)?;
    write_csv(&dir.join("fusion.csv"), &fusion)?;
    write_csv(&dir.join(RECORDINGS), &recordings)?;
    write_csv(&dir.join("skipped.csv"), &skipped)?;
    ctx.finish(Stage::Arousal, inputs)
}
