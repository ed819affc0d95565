//! One module per pipeline stage, plus the file helpers they share.

pub mod analyze;
pub mod arousal;
pub mod gen;
pub mod infer;
pub mod report;
pub mod score;
pub mod segment;
pub mod train;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wearcomm_core::data::{
    labels_from_str, labels_to_string, parse_manifest_index, parse_recording, parse_surveys, parse_teacher_posteriors,
    CohortIndex, FeatureFileFormat, Recording, TeacherPosteriors,
};
use wearcomm_core::{FrameLabel, Participant};

use crate::config::LabelSourceKind;
use crate::error::CliError;
use crate::{Context, Stage};

pub(crate) const COHORT_DIR: &str = "cohort";
pub(crate) const CORPUS_DIR: &str = "corpus";
pub(crate) const COHORT_LABELS: &str = "cohort_labels.tsv";
pub(crate) const HELDOUT_LABELS: &str = "heldout_labels.tsv";

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    std::fs::write(path, contents).map_err(CliError::io(path))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(CliError::io(path))
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    write_file(path, bytes)
}

pub(crate) fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let bytes = read_file(path)?;
    csv::Reader::from_reader(bytes.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    s.push('\n');
    write_file(path, s)
}

/// Row of a corpus `index.csv`; paths are relative to the index's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct CorpusEntry {
    pub recording_id: String,
    pub minute_index: u32,
    pub path: String,
    pub teacher_path: String,
}

pub(crate) fn corpus_dir(ctx: &Context, split: &str) -> std::path::PathBuf {
    ctx.data_root().join(CORPUS_DIR).join(split)
}

/// Loads a corpus split in index order.
pub(crate) fn load_corpus(ctx: &Context, split: &str) -> Result<Vec<(Recording, TeacherPosteriors)>, CliError> {
    let dir = corpus_dir(ctx, split);
    let index: Vec<CorpusEntry> = read_csv(&dir.join("index.csv"))?;
    index
        .par_iter()
        .map(|e| {
            let rec = parse_recording(
                &read_file(&dir.join(&e.path))?,
                FeatureFileFormat::default(),
                &e.recording_id,
                e.minute_index,
            )?;
            let teacher = parse_teacher_posteriors(&read_file(&dir.join(&e.teacher_path))?, &e.recording_id)?;
            teacher.check_aligned(&rec)?;
            Ok((rec, teacher))
        })
        .collect()
}

pub(crate) fn cohort_dir(ctx: &Context) -> std::path::PathBuf {
    ctx.data_root().join(COHORT_DIR)
}

/// The cohort manifest with survey totals attached.
pub(crate) fn load_cohort_index(ctx: &Context) -> Result<CohortIndex, CliError> {
    let dir = cohort_dir(ctx);
    let mut index = parse_manifest_index(&read_file(&dir.join("manifest.jsonl"))?)?;
    let surveys = dir.join("surveys.csv");
    if surveys.is_file() {
        index.attach_surveys(&parse_surveys(&read_file(&surveys)?)?);
    }
    index.check_files(&dir)?;
    Ok(index)
}

pub(crate) fn load_participant(ctx: &Context, entry: &wearcomm_core::data::ParticipantEntry) -> Result<Participant, CliError> {
    Ok(CohortIndex::load_participant(entry, &cohort_dir(ctx), FeatureFileFormat::default())?)
}

pub type LabelMap = BTreeMap<String, Vec<FrameLabel>>;

pub(crate) fn write_label_file(path: &Path, labels: &LabelMap) -> Result<(), CliError> {
    let mut out = String::from("recording_id\tlabels\n");
    for (id, l) in labels {
        out.push_str(id);
        out.push('\t');
        out.push_str(&labels_to_string(l));
        out.push('\n');
    }
    write_file(path, out)
}

pub(crate) fn read_label_file(path: &Path) -> Result<LabelMap, CliError> {
    let text = String::from_utf8(read_file(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = LabelMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = || CliError::Data(format!("{}:{}: expected `recording_id<TAB>labels`", path.display(), i + 1));
        let (id, l) = line.split_once('\t').ok_or_else(bad)?;
        out.insert(id.to_string(), labels_from_str(l).ok_or_else(bad)?);
    }
    Ok(out)
}

/// Labels for every cohort recording, from the inferred file or from the
/// reference annotation stored in the feature files.
pub(crate) fn cohort_labels(ctx: &Context, index: &CohortIndex) -> Result<LabelMap, CliError> {
    match ctx.config.behavior.label_source {
        LabelSourceKind::Inferred => read_label_file(&ctx.stage_dir(Stage::Infer).join(COHORT_LABELS)),
        LabelSourceKind::Reference => {
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
            Ok(per.into_iter().flatten().collect())
        }
    }
}

/// Upstream stages whose outputs provide cohort labels.
pub(crate) fn label_prerequisites(ctx: &Context) -> &'static [Stage] {
    match ctx.config.behavior.label_source {
        LabelSourceKind::Inferred => &[Stage::Gen, Stage::Infer],
        LabelSourceKind::Reference => &[Stage::Gen],
    }
}
