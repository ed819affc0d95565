use std::fmt::Write as _;

use csv::{ReaderBuilder, StringRecord};

use super::{DataError, FrameFeatures, FrameLabel, Recording, MAX_FRAMES, MFCC_DIM, POSTERIOR_SUM_TOL};

/// Tabular layout of a per-recording feature file.
///
/// Columns: `frame_index,mfcc1..mfcc12,log_pitch,intensity,hf_lf_ratio[,label]`
/// with a header row. `log_pitch` is left empty on unvoiced frames; `label`
/// is one of `FG`, `BG`, `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureFileFormat {
    pub delimiter: u8,
}

impl Default for FeatureFileFormat {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

const BASE_COLUMNS: usize = 1 + MFCC_DIM + 3;

fn expected_header() -> Vec<String> {
    let mut cols = vec!["frame_index".to_string()];
    cols.extend((1..=MFCC_DIM).map(|i| format!("mfcc{i}")));
    cols.extend(["log_pitch", "intensity", "hf_lf_ratio"].map(String::from));
    cols
}

fn malformed(line: u64, reason: impl Into<String>) -> DataError {
    DataError::MalformedRow {
        line,
        reason: reason.into(),
    }
}

fn parse_f64(field: &str, line: u64, name: &str) -> Result<f64, DataError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("{name}: not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(malformed(line, format!("{name}: non-finite value")));
    }
    Ok(v)
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Parses one feature file into a [`Recording`].
///
/// A label column whose cells are all filled yields per-frame labels; an
/// entirely empty label column, or a partially filled one, yields none.
pub fn parse_recording(
    bytes: &[u8],
    format: FeatureFileFormat,
    recording_id: &str,
    minute_index: u32,
) -> Result<Recording, DataError> {
    let mut reader = ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.records();

    let header = match records.next() {
        Some(h) => h?,
        None => return Err(DataError::EmptyRecording),
    };
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    let expected = expected_header();
    let has_label = match header.len() {
        n if n == BASE_COLUMNS => false,
        n if n == BASE_COLUMNS + 1 && header[BASE_COLUMNS] == "label" => true,
        n => {
            return Err(malformed(
                1,
                format!("header has {n} columns, expected {BASE_COLUMNS} or {}", BASE_COLUMNS + 1),
            ))
        }
    };
    if header[..BASE_COLUMNS] != expected[..] {
        return Err(malformed(1, "unexpected header names"));
    }
    let width = header.len();

    let mut frames = Vec::new();
    let mut labels: Vec<Option<FrameLabel>> = Vec::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        if record.len() != width {
            return Err(malformed(
                line,
                format!("{} columns, expected {width}", record.len()),
            ));
        }
        if frames.len() == MAX_FRAMES {
            return Err(DataError::TooManyFrames(MAX_FRAMES + 1));
        }
        let frame_index: u32 = record[0]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("frame_index: not an integer: {:?}", &record[0])))?;
        if let Some(prev) = frames.last().map(|f: &FrameFeatures| f.frame_index) {
            if frame_index <= prev {
                return Err(DataError::NonMonotoneFrameIndex {
                    line,
                    index: frame_index,
                });
            }
        }
        let mut mfcc = [0.0; MFCC_DIM];
        for (k, slot) in mfcc.iter_mut().enumerate() {
            *slot = parse_f64(&record[1 + k], line, &expected[1 + k])?;
        }
        let pitch_field = record[1 + MFCC_DIM].trim();
        let log_pitch = if pitch_field.is_empty() {
            None
        } else {
            Some(parse_f64(pitch_field, line, "log_pitch")?)
        };
        let intensity = parse_f64(&record[2 + MFCC_DIM], line, "intensity")?;
        let hf_lf_ratio = parse_f64(&record[3 + MFCC_DIM], line, "hf_lf_ratio")?;
        if has_label {
            let cell = record[BASE_COLUMNS].trim();
            labels.push(if cell.is_empty() {
                None
            } else {
                Some(cell.parse().map_err(|_| malformed(line, format!("bad label {cell:?}")))?)
            });
        }
        frames.push(FrameFeatures {
            frame_index,
            mfcc,
            log_pitch,
            intensity,
            hf_lf_ratio,
        });
    }

    let labels = if labels.is_empty() {
        None
    } else {
        let complete: Option<Vec<FrameLabel>> = labels.iter().copied().collect();
        if complete.is_none() && labels.iter().any(Option::is_some) {
            log::warn!("{recording_id}: partially labeled, treating as unlabeled");
        }
        complete
    };
    Recording::new(recording_id, minute_index, frames, labels)
}

/// Serializes a recording in the layout read by [`parse_recording`].
/// Floats use the shortest representation that parses back to the same bits.
pub fn write_recording(recording: &Recording, format: FeatureFileFormat) -> String {
    let d = format.delimiter as char;
    let mut out = String::with_capacity(recording.len() * 160);
    let mut header = expected_header();
    if recording.labels().is_some() {
        header.push("label".into());
    }
    out.push_str(&header.join(&d.to_string()));
    out.push('\n');
    for (i, f) in recording.frames().iter().enumerate() {
        let _ = write!(out, "{}", f.frame_index);
        for v in f.mfcc {
            let _ = write!(out, "{d}{v}");
        }
        out.push(d);
        if let Some(p) = f.log_pitch {
            let _ = write!(out, "{p}");
        }
        let _ = write!(out, "{d}{}{d}{}", f.intensity, f.hf_lf_ratio);
        if let Some(labels) = recording.labels() {
            let _ = write!(out, "{d}{}", labels[i]);
        }
        out.push('\n');
    }
    out
}

/// Frame-wise (FG, BG, S) posteriors from an external teacher model.
#[derive(Clone, Debug, PartialEq)]
pub struct TeacherPosteriors {
    pub recording_id: String,
    pub frame_indices: Vec<u32>,
    pub rows: Vec<[f64; 3]>,
}

impl TeacherPosteriors {
    pub fn new(
        recording_id: impl Into<String>,
        frame_indices: Vec<u32>,
        rows: Vec<[f64; 3]>,
    ) -> Result<Self, DataError> {
        for (i, row) in rows.iter().enumerate() {
            check_simplex(row, i as u64 + 2)?;
        }
        Ok(Self {
            recording_id: recording_id.into(),
            frame_indices,
            rows,
        })
    }

    /// Checks that rows correspond one-to-one to the recording's frames.
    pub fn check_aligned(&self, recording: &Recording) -> Result<(), DataError> {
        let misaligned = |reason: String| DataError::PosteriorMisaligned {
            recording_id: recording.recording_id.clone(),
            reason,
        };
        if self.rows.len() != recording.len() {
            return Err(misaligned(format!(
                "{} rows for {} frames",
                self.rows.len(),
                recording.len()
            )));
        }
        for (f, &idx) in recording.frames().iter().zip(&self.frame_indices) {
            if f.frame_index != idx {
                return Err(misaligned(format!(
                    "frame_index {idx} against frame {}",
                    f.frame_index
                )));
            }
        }
        Ok(())
    }
}

fn check_simplex(row: &[f64; 3], line: u64) -> Result<(), DataError> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(DataError::InvalidPosterior {
            line,
            reason: "has a negative or non-finite entry".into(),
        });
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > POSTERIOR_SUM_TOL {
        return Err(DataError::InvalidPosterior {
            line,
            reason: format!("sums to {sum}"),
        });
    }
    Ok(())
}

/// Parses a teacher posterior file (`frame_index,p_fg,p_bg,p_s`).
pub fn parse_teacher_posteriors(bytes: &[u8], recording_id: &str) -> Result<TeacherPosteriors, DataError> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header != ["frame_index", "p_fg", "p_bg", "p_s"] {
        return Err(malformed(1, "expected header frame_index,p_fg,p_bg,p_s"));
    }
    let mut indices = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != 4 {
            return Err(malformed(line, format!("{} columns, expected 4", record.len())));
        }
        let idx: u32 = record[0]
            .trim()
            .parse()
            .map_err(|_| malformed(line, "frame_index: not an integer"))?;
        if indices.last().is_some_and(|&prev| idx <= prev) {
            return Err(DataError::NonMonotoneFrameIndex { line, index: idx });
        }
        let row = [
            parse_f64(&record[1], line, "p_fg")?,
            parse_f64(&record[2], line, "p_bg")?,
            parse_f64(&record[3], line, "p_s")?,
        ];
        check_simplex(&row, line)?;
        indices.push(idx);
        rows.push(row);
    }
    Ok(TeacherPosteriors {
        recording_id: recording_id.to_string(),
        frame_indices: indices,
        rows,
    })
}

pub fn write_teacher_posteriors(posteriors: &TeacherPosteriors) -> String {
    let mut out = String::from("frame_index,p_fg,p_bg,p_s\n");
    for (idx, row) in posteriors.frame_indices.iter().zip(&posteriors.rows) {
        let _ = writeln!(out, "{idx},{},{},{}", row[0], row[1], row[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: u32, label: Option<&str>) -> String {
        let mut s = format!("{i}");
        for k in 0..MFCC_DIM {
            s.push_str(&format!(",{}", k as f64 * 0.5 - 1.0));
        }
        s.push_str(",5.2,0.8,0.3");
        if let Some(l) = label {
            s.push_str(&format!(",{l}"));
        }
        s
    }

    fn file(rows: &[String], labeled: bool) -> Vec<u8> {
        let mut h = expected_header();
        if labeled {
            h.push("label".into());
        }
        let mut s = h.join(",");
        for r in rows {
            s.push('\n');
            s.push_str(r);
        }
        s.push('\n');
        s.into_bytes()
    }

    #[test]
    fn full_window_without_labels() {
        let rows: Vec<_> = (0..2000).map(|i| row(i, None)).collect();
        let rec = parse_recording(&file(&rows, false), FeatureFileFormat::default(), "r", 3).unwrap();
        assert_eq!(rec.len(), 2000);
        assert!(rec.labels().is_none());
        assert_eq!(rec.minute_index, 3);
    }

    #[test]
    fn labels_parsed() {
        let rows = vec![row(0, Some("FG")), row(1, Some("BG")), row(2, Some("S"))];
        let rec = parse_recording(&file(&rows, true), FeatureFileFormat::default(), "r", 0).unwrap();
        assert_eq!(
            rec.labels().unwrap(),
            &[FrameLabel::Fg, FrameLabel::Bg, FrameLabel::S]
        );
    }

    #[test]
    fn partially_labeled_is_unlabeled() {
        let rows = vec![row(0, Some("FG")), row(1, Some(""))];
        let rec = parse_recording(&file(&rows, true), FeatureFileFormat::default(), "r", 0).unwrap();
        assert!(rec.labels().is_none());
    }

    #[test]
    fn eleven_mfcc_columns_is_malformed() {
        let mut short = String::from("0");
        for k in 0..11 {
            short.push_str(&format!(",{k}"));
        }
        short.push_str(",5.2,0.8,0.3");
        let err = parse_recording(&file(&[short], false), FeatureFileFormat::default(), "r", 0).unwrap_err();
        assert!(matches!(err, DataError::MalformedRow { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_numeric_is_malformed() {
        let bad = row(0, None).replacen("-1", "abc", 1);
        let err = parse_recording(&file(&[bad], false), FeatureFileFormat::default(), "r", 0).unwrap_err();
        assert!(matches!(err, DataError::MalformedRow { .. }));
    }

    #[test]
    fn duplicate_frame_index() {
        let rows = vec![row(0, None), row(1, None), row(1, None)];
        let err = parse_recording(&file(&rows, false), FeatureFileFormat::default(), "r", 0).unwrap_err();
        assert!(matches!(err, DataError::NonMonotoneFrameIndex { line: 4, index: 1 }));
    }

    #[test]
    fn too_many_frames() {
        let rows: Vec<_> = (0..2001).map(|i| row(i, None)).collect();
        let err = parse_recording(&file(&rows, false), FeatureFileFormat::default(), "r", 0).unwrap_err();
        assert!(matches!(err, DataError::TooManyFrames(_)));
    }

    #[test]
    fn unvoiced_sentinel_round_trips() {
        let mut r = row(0, None);
        r = r.replace(",5.2,", ",,");
        let rec = parse_recording(&file(&[r], false), FeatureFileFormat::default(), "r", 0).unwrap();
        assert_eq!(rec.frames()[0].log_pitch, None);
        let text = write_recording(&rec, FeatureFileFormat::default());
        let back = parse_recording(text.as_bytes(), FeatureFileFormat::default(), "r", 0).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn tab_delimited() {
        let rows = vec![row(0, Some("S"))];
        let tsv: Vec<u8> = file(&rows, true).into_iter().map(|b| if b == b',' { b'\t' } else { b }).collect();
        let rec = parse_recording(&tsv, FeatureFileFormat { delimiter: b'\t' }, "r", 0).unwrap();
        assert_eq!(rec.labels().unwrap(), &[FrameLabel::S]);
    }

    #[test]
    fn teacher_rows_must_sum_to_one() {
        let good = b"frame_index,p_fg,p_bg,p_s\n0,0.2,0.3,0.5\n1,1,0,0\n";
        let t = parse_teacher_posteriors(good, "r").unwrap();
        assert_eq!(t.rows.len(), 2);
        let bad = b"frame_index,p_fg,p_bg,p_s\n0,0.2,0.3,0.6\n";
        assert!(matches!(
            parse_teacher_posteriors(bad, "r"),
            Err(DataError::InvalidPosterior { line: 2, .. })
        ));
        let neg = b"frame_index,p_fg,p_bg,p_s\n0,-0.1,0.6,0.5\n";
        assert!(parse_teacher_posteriors(neg, "r").is_err());
        let back = parse_teacher_posteriors(write_teacher_posteriors(&t).as_bytes(), "r").unwrap();
        assert_eq!(back, t);
    }
}
