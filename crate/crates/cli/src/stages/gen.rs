//! Writes the synthetic cohort and the labeled diarizer corpus.
//!
//! ```text
//! <data_root>/cohort/manifest.jsonl
//! <data_root>/cohort/surveys.csv
//! <data_root>/cohort/ground_truth.json
//! <data_root>/cohort/features/<participant>/<shift>/<recording>.csv
//! <data_root>/corpus/{train,heldout}/index.csv
//! <data_root>/corpus/{train,heldout}/<recording>.csv, <recording>.teacher.csv
//! ```

use std::collections::BTreeMap;

use wearcomm_core::data::{
    write_manifest, write_recording, write_surveys, write_teacher_posteriors, CohortIndex, FeatureFileFormat,
    ParticipantEntry, RecordingRef, ShiftEntry,
};
use wearcomm_core::synth::{gen_cohort_streaming, gen_stream};

use super::{cohort_dir, corpus_dir, write_csv, write_file, write_json, CorpusEntry, COHORT_DIR, CORPUS_DIR};
use crate::error::CliError;
use crate::manifest::{hash_tree, StageManifest};
use crate::{Context, Stage};

pub fn run(ctx: &Context) -> Result<StageManifest, CliError> {
    let root = ctx.data_root();
    for sub in [COHORT_DIR, CORPUS_DIR] {
        let dir = root.join(sub);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(CliError::io(&dir))?;
        }
    }
    write_cohort(ctx)?;
    for (split, heldout) in [("train", false), ("heldout", true)] {
        write_corpus(ctx, split, heldout)?;
    }

    let mut outputs = BTreeMap::new();
    for sub in [COHORT_DIR, CORPUS_DIR] {
        for (k, v) in hash_tree(&root.join(sub))? {
            outputs.insert(format!("{sub}/{k}"), v);
        }
    }
    ctx.write_manifest(Stage::Gen, BTreeMap::new(), outputs)
}

fn write_cohort(ctx: &Context) -> Result<(), CliError> {
    let dir = cohort_dir(ctx);
    let format = FeatureFileFormat::default();
    let mut index = CohortIndex::default();
    let mut surveys = BTreeMap::new();
    let truth = gen_cohort_streaming(&ctx.config.gen.cohort, |p, _| -> Result<(), CliError> {
        let pid = p.info.participant_id.clone();
        let mut shifts = Vec::with_capacity(p.shifts.len());
        for shift in &p.shifts {
            let mut refs = Vec::with_capacity(shift.recordings().len());
            for rec in shift.recordings() {
                let rel = format!("features/{pid}/{}/{}.csv", shift.shift_id(), rec.recording_id);
                write_file(&dir.join(&rel), write_recording(rec, format))?;
                refs.push(RecordingRef {
                    recording_id: rec.recording_id.clone(),
                    minute_index: rec.minute_index,
                    path: rel,
                    teacher_path: None,
                });
            }
            shifts.push(ShiftEntry {
                info: shift.info.clone(),
                recordings: refs,
            });
        }
        surveys.insert(pid, p.surveys);
        index.participants.push(ParticipantEntry {
            info: p.info,
            shifts,
            surveys: p.surveys,
        });
        Ok(())
    })?;
    write_file(&dir.join("manifest.jsonl"), write_manifest(&index))?;
    write_file(&dir.join("surveys.csv"), write_surveys(&surveys))?;
    write_json(&dir.join("ground_truth.json"), &truth)?;
    log::info!(
        "cohort: {} participants, {} recordings",
        index.participants.len(),
        index.recording_count()
    );
    Ok(())
}

fn write_corpus(ctx: &Context, split: &str, heldout: bool) -> Result<(), CliError> {
    let c = &ctx.config.gen.corpus;
    let n = if heldout { c.heldout_frames } else { c.train_frames };
    let stream = gen_stream(&c.stream, n, ctx.config.corpus_seed(heldout))?;
    let dir = corpus_dir(ctx, split);
    let mut index = Vec::new();
    for (rec, teacher) in stream.into_recordings(split, c.frames_per_recording)? {
        let path = format!("{}.csv", rec.recording_id);
        let teacher_path = format!("{}.teacher.csv", rec.recording_id);
        write_file(&dir.join(&path), write_recording(&rec, FeatureFileFormat::default()))?;
        write_file(&dir.join(&teacher_path), write_teacher_posteriors(&teacher))?;
        index.push(CorpusEntry {
            recording_id: rec.recording_id.clone(),
            minute_index: rec.minute_index,
            path,
            teacher_path,
        });
    }
    write_csv(&dir.join("index.csv"), &index)?;
    log::info!("corpus {split}: {n} frames in {} recordings", index.len());
    Ok(())
}
