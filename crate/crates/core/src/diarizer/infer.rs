use std::ops::Range;

use super::model::StudentModel;
use super::DiarizerError;
use crate::data::{FrameLabel, Recording};

/// Most probable class; ties go to the earlier class in FG, BG, S order.
pub fn argmax_label(row: &[f64; 3]) -> FrameLabel {
    let mut best = 0;
    for c in 1..3 {
        if row[c] > row[best] {
            best = c;
        }
    }
    FrameLabel::ALL[best]
}

/// Non-overlapping windows of `window_frames` covering `n` frames. A final
/// partial window shorter than `min_frames` is merged into the one before it.
pub fn window_spans(n: usize, window_frames: usize, min_frames: usize) -> Vec<Range<usize>> {
    let step = window_frames.max(1);
    let mut spans: Vec<Range<usize>> = (0..n).step_by(step).map(|s| s..(s + step).min(n)).collect();
    if spans.len() >= 2 && spans.last().is_some_and(|s| s.len() < min_frames) {
        let tail = spans.pop().unwrap();
        spans.last_mut().unwrap().end = tail.end;
    }
    spans
}

/// Per-frame labels for a whole recording, windowed without overlap.
pub fn infer_labels(
    model: &StudentModel,
    recording: &Recording,
    window_frames: usize,
) -> Result<Vec<FrameLabel>, DiarizerError> {
    let kernel = model.config().kernel_width;
    if recording.len() < kernel {
        return Err(DiarizerError::TooShort {
            frames: recording.len(),
            kernel,
        });
    }
    let frames = recording.mfcc_matrix();
    let mut labels = Vec::with_capacity(frames.len());
    for span in window_spans(frames.len(), window_frames, kernel) {
        labels.extend(model.forward(&frames[span])?.iter().map(argmax_label));
    }
    Ok(labels)
}
