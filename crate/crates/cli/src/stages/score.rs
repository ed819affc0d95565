//! Frame-level DER of the inferred labels against the reference annotation.
//!
//! `scores.csv` holds one row per recording followed by a `POOLED`
//! (frame-count micro-average) and a `MACRO` (mean of per-recording rates)
//! row for each set. Recordings without reference speech have no rates of
//! their own but still count toward the pooled row.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wearcomm_core::metrics::{count_errors, macro_average, DiarizationScore, ErrorCounts};
use wearcomm_core::FrameLabel;

use super::{
    load_cohort_index, load_corpus, load_participant, read_label_file, write_csv, write_json, LabelMap, COHORT_LABELS,
    HELDOUT_LABELS,
};
use crate::error::CliError;
use crate::manifest::StageManifest;
use crate::{Context, Stage};

pub const POOLED: &str = "POOLED";
pub const MACRO: &str = "MACRO";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub set: String,
    pub recording_id: String,
    pub miss: Option<f64>,
    pub false_alarm: Option<f64>,
    pub confusion: Option<f64>,
    pub der: Option<f64>,
    pub ref_speech_frames: usize,
    pub total_frames: usize,
}

impl ScoreRow {
    fn new(set: &str, id: &str, counts: ErrorCounts, score: Option<&DiarizationScore>) -> Self {
        Self {
            set: set.into(),
            recording_id: id.into(),
            miss: score.map(|s| s.miss),
            false_alarm: score.map(|s| s.false_alarm),
            confusion: score.map(|s| s.confusion),
            der: score.map(|s| s.der),
            ref_speech_frames: counts.ref_speech,
            total_frames: counts.total,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub n_recordings: usize,
    pub pooled: Option<SummaryRates>,
    pub macro_avg: Option<SummaryRates>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRates {
    pub miss: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub der: f64,
}

impl From<&DiarizationScore> for SummaryRates {
    fn from(s: &DiarizationScore) -> Self {
        Self {
            miss: s.miss,
            false_alarm: s.false_alarm,
            confusion: s.confusion,
            der: s.der,
        }
    }
}

fn score_set(
    set: &str,
    pairs: &BTreeMap<String, (Vec<FrameLabel>, Vec<FrameLabel>)>,
    rows: &mut Vec<ScoreRow>,
) -> Result<SetSummary, CliError> {
    let mut total = ErrorCounts::default();
    let mut per_recording = Vec::new();
    for (id, (reference, hyp)) in pairs {
        let c = count_errors(reference, hyp)?;
        let s = DiarizationScore::from_counts(c).ok();
        rows.push(ScoreRow::new(set, id, c, s.as_ref()));
        total.miss += c.miss;
        total.false_alarm += c.false_alarm;
        total.confusion += c.confusion;
        total.ref_speech += c.ref_speech;
        total.total += c.total;
        per_recording.extend(s);
    }
    let pooled = DiarizationScore::from_counts(total).ok();
    let macro_avg = macro_average(&per_recording).ok();
    rows.push(ScoreRow::new(set, POOLED, total, pooled.as_ref()));
    rows.push(ScoreRow::new(set, MACRO, total, macro_avg.as_ref()));
    Ok(SetSummary {
        n_recordings: pairs.len(),
        pooled: pooled.as_ref().map(Into::into),
        macro_avg: macro_avg.as_ref().map(Into::into),
    })
}

fn pair_up(
    set: &str,
    references: Vec<(String, Vec<FrameLabel>)>,
    hyp: &LabelMap,
) -> Result<BTreeMap<String, (Vec<FrameLabel>, Vec<FrameLabel>)>, CliError> {
    references
        .into_iter()
        .map(|(id, r)| {
            let h = hyp
                .get(&id)
                .ok_or_else(|| CliError::Data(format!("{set}: no inferred labels for {id}")))?;
            Ok((id, (r, h.clone())))
        })
        .collect()
}

pub fn run(ctx: &Context) -> Result<StageManifest, CliError> {
    let inputs = ctx.require_all(Stage::Score, &[Stage::Gen, Stage::Infer])?;
    let infer_dir = ctx.stage_dir(Stage::Infer);

    let heldout_ref: Vec<_> = load_corpus(ctx, "heldout")?
        .into_iter()
        .filter_map(|(r, _)| r.labels().map(|l| (r.recording_id.clone(), l.to_vec())))
        .collect();
    let heldout = pair_up("heldout", heldout_ref, &read_label_file(&infer_dir.join(HELDOUT_LABELS))?)?;

    let index = load_cohort_index(ctx)?;
    let per: Vec<Vec<(String, Vec<FrameLabel>)>> = index
        .participants
        .par_iter()
        .map(|entry| {
            let p = load_participant(ctx, entry)?;
            Ok(p.shifts
                .iter()
                .flat_map(|s| s.recordings())
                .filter_map(|r| r.labels().map(|l| (r.recording_id.clone(), l.to_vec())))
                .collect())
        })
        .collect::<Result<_, CliError>>()?;
    let cohort = pair_up(
        "cohort",
        per.into_iter().flatten().collect(),
        &read_label_file(&infer_dir.join(COHORT_LABELS))?,
    )?;

    let mut rows = Vec::new();
    let mut summary = BTreeMap::new();
    summary.insert("heldout", score_set("heldout", &heldout, &mut rows)?);
    if !cohort.is_empty() {
        summary.insert("cohort", score_set("cohort", &cohort, &mut rows)?);
    }
    for (set, s) in &summary {
        if let Some(p) = &s.pooled {
            log::info!("{set}: pooled DER {:.4} over {} recordings", p.der, s.n_recordings);
        }
    }

    let dir = ctx.fresh_dir(Stage::Score)?;
    write_csv(&dir.join("scores.csv"), &rows)?;
    write_json(&dir.join("summary.json"), &summary)?;
    ctx.finish(Stage::Score, inputs)
}
