//! Labels every cohort and held-out recording with the trained student.

use rayon::prelude::*;
use wearcomm_core::diarizer::{infer_labels, load_checkpoint, StudentModel};
use wearcomm_core::Recording;

use super::train::MODEL_FILE;
use super::{load_cohort_index, load_corpus, load_participant, write_label_file, LabelMap, COHORT_LABELS, HELDOUT_LABELS};
use crate::error::CliError;
use crate::manifest::StageManifest;
use crate::{Context, Stage};

fn label_all<'a>(
    model: &StudentModel,
    recordings: impl IntoIterator<Item = &'a Recording>,
    window: usize,
) -> Result<Vec<(String, Vec<wearcomm_core::FrameLabel>)>, CliError> {
    recordings
        .into_iter()
        .map(|r| Ok((r.recording_id.clone(), infer_labels(model, r, window)?)))
        .collect()
}

pub fn run(ctx: &Context) -> Result<StageManifest, CliError> {
    let inputs = ctx.require_all(Stage::Infer, &[Stage::Gen, Stage::Train])?;
    let model = load_checkpoint(&ctx.stage_dir(Stage::Train).join(MODEL_FILE))?;
    let window = ctx.config.diarizer.window_frames;

    let index = load_cohort_index(ctx)?;
    let per: Vec<_> = index
        .participants
        .par_iter()
        .map(|entry| {
            let p = load_participant(ctx, entry)?;
            label_all(&model, p.shifts.iter().flat_map(|s| s.recordings()), window)
        })
        .collect::<Result<_, CliError>>()?;
    let cohort: LabelMap = per.into_iter().flatten().collect();

    let heldout_recs = load_corpus(ctx, "heldout")?;
    let heldout: LabelMap = heldout_recs
        .par_iter()
        .map(|(r, _)| Ok((r.recording_id.clone(), infer_labels(&model, r, window)?)))
        .collect::<Result<_, CliError>>()?;

    let dir = ctx.fresh_dir(Stage::Infer)?;
    write_label_file(&dir.join(COHORT_LABELS), &cohort)?;
    write_label_file(&dir.join(HELDOUT_LABELS), &heldout)?;
    log::info!("labeled {} cohort and {} held-out recordings", cohort.len(), heldout.len());
    ctx.finish(Stage::Infer, inputs)
}
