//! Line-delimited JSON manifest linking participants, shifts and recording files.
//!
//! Each line is one object tagged by `kind`:
//!
//! ```text
//! {"kind":"participant","participant_id":"P001","sex":"female","age_group":"under40","work_unit":"ICU","primary_shift":"day"}
//! {"kind":"shift","participant_id":"P001","shift_id":"S01","shift_type":"day","start_time":"2018-03-05T07:00:00Z","duration_hours":12.0}
//! {"kind":"recording","participant_id":"P001","shift_id":"S01","recording_id":"P001-S01-m0003","minute_index":3,"path":"features/P001/S01/m0003.csv"}
//! ```
//!
//! Paths are relative to the manifest's base directory. Lines may appear in
//! any order; blank lines are skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    parse_recording, Cohort, DataError, FeatureFileFormat, Participant, ParticipantInfo, Shift,
    ShiftInfo, SurveyRecord,
};

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Participant {
        participant_id: String,
        sex: String,
        age_group: String,
        work_unit: String,
        primary_shift: String,
    },
    Shift {
        participant_id: String,
        shift_id: String,
        shift_type: String,
        start_time: String,
        duration_hours: f64,
    },
    Recording {
        participant_id: String,
        shift_id: String,
        recording_id: String,
        minute_index: u32,
        path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        teacher_path: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordingRef {
    pub recording_id: String,
    pub minute_index: u32,
    pub path: String,
    pub teacher_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftEntry {
    pub info: ShiftInfo,
    pub recordings: Vec<RecordingRef>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticipantEntry {
    pub info: ParticipantInfo,
    pub shifts: Vec<ShiftEntry>,
    pub surveys: SurveyRecord,
}

impl ParticipantEntry {
    pub fn recorded_shifts(&self) -> usize {
        self.shifts.iter().filter(|s| !s.recordings.is_empty()).count()
    }
}

/// Manifest contents without the feature data loaded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CohortIndex {
    pub participants: Vec<ParticipantEntry>,
}

pub fn parse_manifest_index(bytes: &[u8]) -> Result<CohortIndex, DataError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DataError::MalformedRow {
        line: 0,
        reason: format!("manifest is not UTF-8: {e}"),
    })?;

    let mut participants: Vec<ParticipantEntry> = Vec::new();
    let mut shift_lines = Vec::new();
    let mut recording_lines = Vec::new();
    let mut seen = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(raw).map_err(|source| DataError::Json {
            line: line_no,
            source,
        })?;
        match line {
            Line::Participant {
                participant_id,
                sex,
                age_group,
                work_unit,
                primary_shift,
            } => {
                if !seen.insert(participant_id.clone()) {
                    return Err(DataError::DuplicateParticipantId(participant_id));
                }
                participants.push(ParticipantEntry {
                    info: ParticipantInfo {
                        participant_id,
                        sex: sex.parse()?,
                        age_group: age_group.parse()?,
                        work_unit: work_unit.parse()?,
                        primary_shift: primary_shift.parse()?,
                    },
                    shifts: Vec::new(),
                    surveys: SurveyRecord::default(),
                });
            }
            Line::Shift {
                participant_id,
                shift_id,
                shift_type,
                start_time,
                duration_hours,
            } => {
                if !(duration_hours.is_finite() && duration_hours > 0.0) {
                    return Err(DataError::BadDuration {
                        shift_id,
                        duration_hours,
                    });
                }
                let info = ShiftInfo {
                    shift_id,
                    shift_type: shift_type.parse()?,
                    start_time,
                    duration_hours,
                };
                shift_lines.push((participant_id, info));
            }
            Line::Recording {
                participant_id,
                shift_id,
                recording_id,
                minute_index,
                path,
                teacher_path,
            } => recording_lines.push((
                participant_id,
                shift_id,
                RecordingRef {
                    recording_id,
                    minute_index,
                    path,
                    teacher_path,
                },
            )),
        }
    }

    let by_id: HashMap<String, usize> = participants
        .iter()
        .enumerate()
        .map(|(i, p)| (p.info.participant_id.clone(), i))
        .collect();

    let mut shift_pos: HashMap<(String, String), (usize, usize)> = HashMap::new();
    for (pid, info) in shift_lines {
        let &pi = by_id.get(&pid).ok_or_else(|| DataError::UnknownReference {
            what: "shift",
            target: "participant",
            id: pid.clone(),
        })?;
        let key = (pid, info.shift_id.clone());
        if shift_pos.contains_key(&key) {
            return Err(DataError::DuplicateShiftId {
                participant_id: key.0,
                shift_id: key.1,
            });
        }
        let entry = &mut participants[pi];
        shift_pos.insert(key, (pi, entry.shifts.len()));
        entry.shifts.push(ShiftEntry {
            info,
            recordings: Vec::new(),
        });
    }

    let mut recording_ids = HashSet::new();
    for (pid, sid, rec) in recording_lines {
        let &(pi, si) = shift_pos
            .get(&(pid, sid.clone()))
            .ok_or_else(|| DataError::UnknownReference {
                what: "recording",
                target: "shift",
                id: sid,
            })?;
        if !recording_ids.insert(rec.recording_id.clone()) {
            return Err(DataError::MalformedRow {
                line: 0,
                reason: format!("recording {} listed twice", rec.recording_id),
            });
        }
        let shift = &mut participants[pi].shifts[si];
        shift.info.check_minute(rec.minute_index)?;
        shift.recordings.push(rec);
    }

    for p in &mut participants {
        for s in &mut p.shifts {
            s.recordings.sort_by_key(|r| r.minute_index);
            if let Some(pair) = s
                .recordings
                .windows(2)
                .find(|w| w[0].minute_index == w[1].minute_index)
            {
                return Err(DataError::DuplicateMinute {
                    shift_id: s.info.shift_id.clone(),
                    minute_index: pair[1].minute_index,
                });
            }
        }
    }

    Ok(CohortIndex { participants })
}

impl CohortIndex {
    /// Fails on the first recording (or teacher) path that does not exist under `base`.
    pub fn check_files(&self, base: &Path) -> Result<(), DataError> {
        for p in &self.participants {
            for s in &p.shifts {
                for r in &s.recordings {
                    let paths = std::iter::once(&r.path).chain(r.teacher_path.as_ref());
                    for path in paths {
                        if !base.join(path).is_file() {
                            return Err(DataError::DanglingRecordingRef {
                                recording_id: r.recording_id.clone(),
                                path: path.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads every feature file of one participant.
    pub fn load_participant(
        entry: &ParticipantEntry,
        base: &Path,
        format: FeatureFileFormat,
    ) -> Result<Participant, DataError> {
        let mut shifts = Vec::with_capacity(entry.shifts.len());
        for s in &entry.shifts {
            let mut recordings = Vec::with_capacity(s.recordings.len());
            for r in &s.recordings {
                let path = base.join(&r.path);
                let bytes = std::fs::read(&path).map_err(|source| {
                    if source.kind() == std::io::ErrorKind::NotFound {
                        DataError::DanglingRecordingRef {
                            recording_id: r.recording_id.clone(),
                            path: r.path.clone(),
                        }
                    } else {
                        DataError::Io {
                            path: path.display().to_string(),
                            source,
                        }
                    }
                })?;
                recordings.push(parse_recording(&bytes, format, &r.recording_id, r.minute_index)?);
            }
            shifts.push(Shift::new(s.info.clone(), recordings)?);
        }
        Ok(Participant {
            info: entry.info.clone(),
            shifts,
            surveys: entry.surveys,
        })
    }

    pub fn attach_surveys(&mut self, surveys: &BTreeMap<String, SurveyRecord>) {
        for p in &mut self.participants {
            if let Some(s) = surveys.get(&p.info.participant_id) {
                p.surveys = *s;
            }
        }
    }

    /// Participants with at least `min_shifts` recorded shifts, order preserved.
    pub fn filter_compliant(&self, min_shifts: usize) -> CohortIndex {
        CohortIndex {
            participants: self
                .participants
                .iter()
                .filter(|p| p.recorded_shifts() >= min_shifts)
                .cloned()
                .collect(),
        }
    }

    pub fn recording_count(&self) -> usize {
        self.participants
            .iter()
            .flat_map(|p| &p.shifts)
            .map(|s| s.recordings.len())
            .sum()
    }
}

/// Parses a manifest and loads every recording it references.
pub fn parse_manifest(bytes: &[u8], base: &Path) -> Result<Cohort, DataError> {
    let index = parse_manifest_index(bytes)?;
    index.check_files(base)?;
    let participants = index
        .participants
        .iter()
        .map(|p| CohortIndex::load_participant(p, base, FeatureFileFormat::default()))
        .collect::<Result<_, _>>()?;
    Ok(Cohort { participants })
}

/// Keeps participants with at least `min_shifts` shifts that hold a recording.
pub fn filter_compliant(cohort: &Cohort, min_shifts: usize) -> Cohort {
    Cohort {
        participants: cohort
            .participants
            .iter()
            .filter(|p| p.recorded_shifts() >= min_shifts)
            .cloned()
            .collect(),
    }
}

pub fn write_manifest(index: &CohortIndex) -> String {
    let mut out = String::new();
    let mut push = |line: Line| {
        out.push_str(&serde_json::to_string(&line).expect("manifest line serializes"));
        out.push('\n');
    };
    for p in &index.participants {
        push(Line::Participant {
            participant_id: p.info.participant_id.clone(),
            sex: p.info.sex.to_string(),
            age_group: p.info.age_group.to_string(),
            work_unit: p.info.work_unit.to_string(),
            primary_shift: p.info.primary_shift.to_string(),
        });
    }
    for p in &index.participants {
        for s in &p.shifts {
            push(Line::Shift {
                participant_id: p.info.participant_id.clone(),
                shift_id: s.info.shift_id.clone(),
                shift_type: s.info.shift_type.to_string(),
                start_time: s.info.start_time.clone(),
                duration_hours: s.info.duration_hours,
            });
        }
    }
    for p in &index.participants {
        for s in &p.shifts {
            for r in &s.recordings {
                push(Line::Recording {
                    participant_id: p.info.participant_id.clone(),
                    shift_id: s.info.shift_id.clone(),
                    recording_id: r.recording_id.clone(),
                    minute_index: r.minute_index,
                    path: r.path.clone(),
                    teacher_path: r.teacher_path.clone(),
                });
            }
        }
    }
    out
}

/// Parses `participant_id,stai_total,irb_total`; empty cells mean not reported.
pub fn parse_surveys(bytes: &[u8]) -> Result<BTreeMap<String, SurveyRecord>, DataError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let header: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header != ["participant_id", "stai_total", "irb_total"] {
        return Err(DataError::MalformedRow {
            line: 1,
            reason: "expected header participant_id,stai_total,irb_total".into(),
        });
    }
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(DataError::MalformedRow {
                line,
                reason: format!("{} columns, expected 3", record.len()),
            });
        }
        let cell = |i: usize| -> Result<Option<i64>, DataError> {
            let v = record[i].trim();
            if v.is_empty() {
                return Ok(None);
            }
            v.parse().map(Some).map_err(|_| DataError::MalformedRow {
                line,
                reason: format!("not an integer: {v:?}"),
            })
        };
        let id = record[0].trim().to_string();
        let survey = SurveyRecord {
            stai_total: cell(1)?,
            irb_total: cell(2)?,
        };
        survey.validate(&id)?;
        if out.insert(id.clone(), survey).is_some() {
            return Err(DataError::DuplicateParticipantId(id));
        }
    }
    Ok(out)
}

pub fn write_surveys(surveys: &BTreeMap<String, SurveyRecord>) -> String {
    let mut out = String::from("participant_id,stai_total,irb_total\n");
    let opt = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (id, s) in surveys {
        let _ = writeln!(out, "{id},{},{}", opt(s.stai_total), opt(s.irb_total));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{write_recording, FrameFeatures, Recording, MFCC_DIM};

    fn participant_line(id: &str, unit: &str) -> String {
        format!(
            r#"{{"kind":"participant","participant_id":"{id}","sex":"female","age_group":"under40","work_unit":"{unit}","primary_shift":"day"}}"#
        )
    }

    fn shift_line(pid: &str, sid: &str) -> String {
        format!(
            r#"{{"kind":"shift","participant_id":"{pid}","shift_id":"{sid}","shift_type":"day","start_time":"2018-03-05T07:00:00Z","duration_hours":12.0}}"#
        )
    }

    fn recording_line(pid: &str, sid: &str, minute: u32) -> String {
        format!(
            r#"{{"kind":"recording","participant_id":"{pid}","shift_id":"{sid}","recording_id":"{pid}-{sid}-{minute}","minute_index":{minute},"path":"{pid}/{sid}/{minute}.csv"}}"#
        )
    }

    fn write_feature_file(dir: &Path, rel: &str) {
        let frames = (0..3)
            .map(|i| FrameFeatures {
                frame_index: i,
                mfcc: [0.25; MFCC_DIM],
                log_pitch: Some(5.0),
                intensity: 1.0,
                hf_lf_ratio: 0.4,
            })
            .collect();
        let rec = Recording::new("x", 0, frames, None).unwrap();
        let path = dir.join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, write_recording(&rec, FeatureFileFormat::default())).unwrap();
    }

    fn two_participant_manifest(dir: &Path) -> String {
        let mut lines = vec![participant_line("P1", "ICU"), participant_line("P2", "lab")];
        for pid in ["P1", "P2"] {
            for s in 0..5 {
                let sid = format!("S{s}");
                lines.push(shift_line(pid, &sid));
                lines.push(recording_line(pid, &sid, 2));
                write_feature_file(dir, &format!("{pid}/{sid}/2.csv"));
            }
        }
        lines.join("\n")
    }

    #[test]
    fn counts_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let text = two_participant_manifest(dir.path());
        let cohort = parse_manifest(text.as_bytes(), dir.path()).unwrap();
        assert_eq!(cohort.participants.len(), 2);
        assert_eq!(cohort.shift_count(), 10);
        assert_eq!(cohort.participants[1].shifts[4].recordings()[0].len(), 3);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let text = two_participant_manifest(dir.path());
        let index = parse_manifest_index(text.as_bytes()).unwrap();
        let again = parse_manifest_index(write_manifest(&index).as_bytes()).unwrap();
        assert_eq!(index, again);
    }

    #[test]
    fn unknown_unit_level() {
        let err = parse_manifest_index(participant_line("P1", "ER").as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::UnknownEnumLevel { field: "work_unit", .. }));
    }

    #[test]
    fn duplicate_participant() {
        let text = [participant_line("P1", "ICU"), participant_line("P1", "lab")].join("\n");
        assert!(matches!(
            parse_manifest_index(text.as_bytes()),
            Err(DataError::DuplicateParticipantId(id)) if id == "P1"
        ));
    }

    #[test]
    fn dangling_recording() {
        let dir = tempfile::tempdir().unwrap();
        let text = [
            participant_line("P1", "ICU"),
            shift_line("P1", "S0"),
            recording_line("P1", "S0", 7),
        ]
        .join("\n");
        let err = parse_manifest(text.as_bytes(), dir.path()).unwrap_err();
        assert!(matches!(err, DataError::DanglingRecordingRef { .. }));
    }

    #[test]
    fn unknown_shift_reference() {
        let text = [participant_line("P1", "ICU"), recording_line("P1", "S9", 7)].join("\n");
        assert!(matches!(
            parse_manifest_index(text.as_bytes()),
            Err(DataError::UnknownReference { .. })
        ));
    }

    #[test]
    fn surveys_parse_and_validate() {
        let s = parse_surveys(b"participant_id,stai_total,irb_total\nP1,80,40\nP2,,12\n").unwrap();
        assert_eq!(s["P1"].stai_total, Some(80));
        assert_eq!(s["P2"].stai_total, None);
        assert_eq!(parse_surveys(write_surveys(&s).as_bytes()).unwrap(), s);
        assert!(matches!(
            parse_surveys(b"participant_id,stai_total,irb_total\nP1,80,50\n"),
            Err(DataError::SurveyOutOfRange { .. })
        ));
    }
}
