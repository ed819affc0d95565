use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::LossBreakdown;
use super::model::{StudentConfig, StudentModel};
use super::DiarizerError;
use crate::data::{FrameLabel, Recording, TeacherPosteriors, MAX_FRAMES, MFCC_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Weight of the teacher KL term.
    pub alpha: f64,
    pub window_frames: usize,
    /// Windows per parameter update.
    pub batch_size: usize,
    pub seed: u64,
    pub student: StudentConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-5,
            epochs: 15,
            alpha: 5.0,
            window_frames: 1000,
            batch_size: 8,
            seed: 0,
            student: StudentConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DiarizerError> {
        let bad = |m: &str| Err(DiarizerError::BadConfig(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be non-negative");
        }
        if self.window_frames == 0 || self.window_frames > MAX_FRAMES {
            return bad("window_frames must be in 1..=2000");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        self.student.validate()
    }
}

/// A labeled window with aligned teacher posteriors.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingWindow {
    pub frames: Vec<[f64; MFCC_DIM]>,
    pub teacher: Vec<[f64; 3]>,
    pub labels: Vec<FrameLabel>,
}

impl TrainingWindow {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Cuts a labeled recording into non-overlapping windows of `window_frames`
/// (the last one may be shorter). Unlabeled recordings yield no windows.
pub fn windows_from_stream(
    recording: &Recording,
    teacher: &TeacherPosteriors,
    window_frames: usize,
) -> Result<Vec<TrainingWindow>, DiarizerError> {
    teacher.check_aligned(recording).map_err(|e| DiarizerError::ShapeMismatch {
        expected: format!("teacher rows aligned with {}", recording.recording_id),
        found: e.to_string(),
    })?;
    let Some(labels) = recording.labels() else {
        return Ok(Vec::new());
    };
    let frames = recording.mfcc_matrix();
    let step = window_frames.max(1);
    Ok((0..frames.len())
        .step_by(step)
        .map(|start| {
            let end = (start + step).min(frames.len());
            TrainingWindow {
                frames: frames[start..end].to_vec(),
                teacher: teacher.rows[start..end].to_vec(),
                labels: labels[start..end].to_vec(),
            }
        })
        .collect())
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

fn usable<'a>(dataset: &'a [TrainingWindow], kernel: usize) -> Result<Vec<&'a TrainingWindow>, DiarizerError> {
    let mut kept = Vec::with_capacity(dataset.len());
    for w in dataset {
        if w.teacher.len() != w.len() || w.labels.len() != w.len() {
            return Err(DiarizerError::ShapeMismatch {
                expected: format!("{} teacher rows and labels", w.len()),
                found: format!("{} and {}", w.teacher.len(), w.labels.len()),
            });
        }
        if w.len() >= kernel {
            kept.push(w);
        }
    }
    if kept.is_empty() {
        return Err(DiarizerError::EmptyDataset);
    }
    Ok(kept)
}

/// Trains a freshly initialized student whose input standardization is fitted
/// on the training frames.
pub fn train(
    dataset: &[TrainingWindow],
    config: &TrainConfig,
) -> Result<(StudentModel, Vec<LossBreakdown>), DiarizerError> {
    config.validate()?;
    let windows = usable(dataset, config.student.kernel_width)?;
    let mut model = StudentModel::new(config.student, config.seed)?;
    model.fit_normalization(windows.iter().flat_map(|w| w.frames.iter()));
    train_from(model, dataset, config)
}

/// Continues training `model` (its architecture overrides `config.student`).
///
/// Each epoch shuffles the windows with the seeded generator and applies one
/// Adam step per batch on the frame-weighted mean gradient. History entries
/// are frame-weighted epoch means of the losses seen before each update.
pub fn train_from(
    mut model: StudentModel,
    dataset: &[TrainingWindow],
    config: &TrainConfig,
) -> Result<(StudentModel, Vec<LossBreakdown>), DiarizerError> {
    config.validate()?;
    let windows = usable(dataset, model.config().kernel_width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5DEE_CE66_D1CE_5EED);
    let mut adam = Adam::new(model.n_params());
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..windows.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut ce, mut kld, mut frames) = (0.0, 0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let results: Vec<Result<(LossBreakdown, Vec<f64>), DiarizerError>> = batch
                .par_iter()
                .map(|&i| {
                    let w = windows[i];
                    model.loss_and_gradient(&w.frames, &w.teacher, &w.labels, config.alpha)
                })
                .collect();
            let batch_frames: usize = batch.iter().map(|&i| windows[i].len()).sum();
            let mut grad = vec![0.0; model.n_params()];
            for (&i, r) in batch.iter().zip(results) {
                let (loss, g) = r.map_err(|e| match e {
                    DiarizerError::NonFiniteLoss => DiarizerError::NonFiniteLossAtEpoch(epoch),
                    other => other,
                })?;
                let weight = windows[i].len() as f64;
                ce += loss.ce * weight;
                kld += loss.kld * weight;
                let scale = weight / batch_frames as f64;
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += scale * b;
                }
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(DiarizerError::NonFiniteLossAtEpoch(epoch));
            }
            frames += batch_frames;
            adam.update(model.params_mut(), &grad, config.learning_rate);
        }
        let entry = LossBreakdown::new(ce / frames as f64, kld / frames as f64, config.alpha);
        log::debug!("epoch {}: ce {:.5} kld {:.5} total {:.5}", epoch + 1, entry.ce, entry.kld, entry.total);
        history.push(entry);
    }
    Ok((model, history))
}
