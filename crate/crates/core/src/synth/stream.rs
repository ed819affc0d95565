use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Geometric, Normal};
use serde::{Deserialize, Serialize};

use super::{rng_for, round4, SynthError};
use crate::data::{FrameFeatures, FrameLabel, Recording, TeacherPosteriors, MAX_FRAMES, MFCC_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamConfig {
    /// Probability that a segment is foreground speech.
    pub fg_rate: f64,
    pub bg_rate: f64,
    pub mean_segment_frames: f64,
    /// MFCC means for FG, BG and S frames.
    pub class_feature_offsets: [[f64; MFCC_DIM]; 3],
    pub noise_sd: f64,
    /// Fraction of frames whose teacher argmax equals the label.
    pub teacher_accuracy: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        let mut offsets = [[0.0; MFCC_DIM]; 3];
        offsets[0][..4].copy_from_slice(&[0.9, 0.5, -0.3, 0.2]);
        offsets[1][..4].copy_from_slice(&[0.3, -0.5, 0.5, -0.2]);
        offsets[2][..4].copy_from_slice(&[-0.9, 0.0, -0.2, 0.0]);
        Self {
            fg_rate: 0.4,
            bg_rate: 0.3,
            mean_segment_frames: 40.0,
            class_feature_offsets: offsets,
            noise_sd: 1.0,
            teacher_accuracy: 0.95,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::BadConfig(m.into()));
        if !(0.0..=1.0).contains(&self.fg_rate) || !(0.0..=1.0).contains(&self.bg_rate) {
            return bad("fg_rate and bg_rate must lie in [0, 1]");
        }
        if self.fg_rate + self.bg_rate > 1.0 + 1e-12 {
            return bad("fg_rate + bg_rate must not exceed 1");
        }
        if !(self.mean_segment_frames >= 1.0 && self.mean_segment_frames.is_finite()) {
            return bad("mean_segment_frames must be at least 1");
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be positive");
        }
        if !(self.teacher_accuracy > 1.0 / 3.0 && self.teacher_accuracy <= 1.0) {
            return bad("teacher_accuracy must lie in (1/3, 1]");
        }
        if self.class_feature_offsets.iter().flatten().any(|v| !v.is_finite()) {
            return bad("class offsets must be finite");
        }
        Ok(())
    }

    pub(crate) fn class_probabilities(&self) -> [f64; 3] {
        [self.fg_rate, self.bg_rate, (1.0 - self.fg_rate - self.bg_rate).max(0.0)]
    }
}

/// Acoustic frame for a class: MFCC offset plus noise, with class-typical
/// pitch, loudness and spectral balance.
pub(crate) fn sample_frame(
    config: &StreamConfig,
    label: FrameLabel,
    frame_index: u32,
    rng: &mut ChaCha8Rng,
) -> FrameFeatures {
    let noise = Normal::new(0.0, config.noise_sd).unwrap();
    let offset = &config.class_feature_offsets[label.index()];
    let mfcc = std::array::from_fn(|d| round4(offset[d] + noise.sample(rng)));
    let unit = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(rand_distr::StandardNormal) };
    let (log_pitch, intensity, hf_lf_ratio) = match label {
        FrameLabel::Fg => (Some(5.3 + 0.1 * unit(rng)), 60.0 + 4.0 * unit(rng), 0.6 * (0.2 * unit(rng)).exp()),
        FrameLabel::Bg => {
            let voiced = rng.random_bool(0.7);
            (voiced.then(|| 5.1 + 0.2 * unit(rng)), 45.0 + 4.0 * unit(rng), 0.5 * (0.2 * unit(rng)).exp())
        }
        FrameLabel::S => (None, 30.0 + 3.0 * unit(rng), 0.3 * (0.2 * unit(rng)).exp()),
    };
    FrameFeatures {
        frame_index,
        mfcc,
        log_pitch: log_pitch.map(round4),
        intensity: round4(intensity.max(0.0)),
        hf_lf_ratio: round4(hf_lf_ratio),
    }
}

fn dirichlet_ones(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let e: [f64; 3] = std::array::from_fn(|_| Exp1.sample(rng));
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Teacher row: with probability `accuracy` a one-hot on the label,
/// otherwise a point peaked on a random wrong class; then blended with
/// Dirichlet(1, 1, 1) jitter of weight `1 - accuracy`.
pub(crate) fn teacher_row(label: FrameLabel, accuracy: f64, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let l = label.index();
    let mut row = [0.0; 3];
    if rng.random_bool(accuracy) {
        row[l] = 1.0;
    } else {
        let wrong = (l + rng.random_range(1..3)) % 3;
        let third = 3 - l - wrong;
        let peak = rng.random_range(0.5..0.9);
        let to_label = rng.random_range(0.0..1.0) * (1.0 - peak);
        row[wrong] = peak;
        row[l] = to_label;
        row[third] = 1.0 - peak - to_label;
    }
    let eta = 1.0 - accuracy;
    if eta > 0.0 {
        let d = dirichlet_ones(rng);
        for c in 0..3 {
            row[c] = (1.0 - eta) * row[c] + eta * d[c];
        }
    }
    row
}

/// A labeled frame sequence of any length with teacher posteriors.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledStream {
    pub frames: Vec<FrameFeatures>,
    pub labels: Vec<FrameLabel>,
    pub teacher: Vec<[f64; 3]>,
}

impl LabeledStream {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Splits the stream into consecutive recordings of at most
    /// `frames_per_recording` frames, re-indexed from 0, with minute index
    /// equal to the chunk number.
    pub fn into_recordings(
        &self,
        id_prefix: &str,
        frames_per_recording: usize,
    ) -> Result<Vec<(Recording, TeacherPosteriors)>, SynthError> {
        if frames_per_recording == 0 || frames_per_recording > MAX_FRAMES {
            return Err(SynthError::BadConfig("frames_per_recording must be in 1..=2000".into()));
        }
        let mut out = Vec::new();
        for (chunk, start) in (0..self.len()).step_by(frames_per_recording).enumerate() {
            let end = (start + frames_per_recording).min(self.len());
            let id = format!("{id_prefix}_{chunk:04}");
            let frames: Vec<FrameFeatures> = self.frames[start..end]
                .iter()
                .enumerate()
                .map(|(i, f)| FrameFeatures {
                    frame_index: i as u32,
                    ..f.clone()
                })
                .collect();
            let indices = (0..frames.len() as u32).collect();
            let rec = Recording::new(id.clone(), chunk as u32, frames, Some(self.labels[start..end].to_vec()))?;
            let teacher = TeacherPosteriors::new(id, indices, self.teacher[start..end].to_vec())?;
            out.push((rec, teacher));
        }
        Ok(out)
    }
}

/// Semi-Markov label sequence: segment classes drawn independently from
/// the class rates, segment lengths `1 + Geometric(1 / mean)`.
pub(crate) fn sample_labels(config: &StreamConfig, n_frames: usize, rng: &mut ChaCha8Rng) -> Vec<FrameLabel> {
    let probs = config.class_probabilities();
    let geo = Geometric::new(1.0 / config.mean_segment_frames).unwrap();
    let mut labels = Vec::with_capacity(n_frames);
    while labels.len() < n_frames {
        let u: f64 = rng.random();
        let class = if u < probs[0] {
            FrameLabel::Fg
        } else if u < probs[0] + probs[1] {
            FrameLabel::Bg
        } else {
            FrameLabel::S
        };
        let len = 1 + geo.sample(rng) as usize;
        labels.extend(std::iter::repeat_n(class, len.min(n_frames - labels.len())));
    }
    labels
}

pub fn gen_stream(config: &StreamConfig, n_frames: usize, seed: u64) -> Result<LabeledStream, SynthError> {
    config.validate()?;
    if n_frames == 0 {
        return Err(SynthError::BadConfig("n_frames must be at least 1".into()));
    }
    let labels = sample_labels(config, n_frames, &mut rng_for(seed, 1));
    let mut feat_rng = rng_for(seed, 2);
    let frames = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sample_frame(config, l, i as u32, &mut feat_rng))
        .collect();
    let mut teacher_rng = rng_for(seed, 3);
    let teacher = labels
        .iter()
        .map(|&l| teacher_row(l, config.teacher_accuracy, &mut teacher_rng))
        .collect();
    Ok(LabeledStream { frames, labels, teacher })
}
