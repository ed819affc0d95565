use serde::{Deserialize, Serialize};

use super::DiarizerError;
use crate::data::FrameLabel;

/// Student posteriors are clamped to this floor before taking logs.
pub const POSTERIOR_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ce: f64,
    pub kld: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(ce: f64, kld: f64, alpha: f64) -> Self {
        Self {
            ce,
            kld,
            total: ce + alpha * kld,
        }
    }
}

fn check_lengths(student: usize, teacher: usize, labels: usize) -> Result<(), DiarizerError> {
    if student != teacher || student != labels {
        return Err(DiarizerError::ShapeMismatch {
            expected: format!("{student} frames"),
            found: format!("{teacher} teacher rows, {labels} labels"),
        });
    }
    if student == 0 {
        return Err(DiarizerError::ShapeMismatch {
            expected: "at least one frame".into(),
            found: "0".into(),
        });
    }
    Ok(())
}

/// Mean cross-entropy against `labels` and mean `KL(teacher || student)`.
pub fn distill_loss(
    student: &[[f64; 3]],
    teacher: &[[f64; 3]],
    labels: &[FrameLabel],
    alpha: f64,
) -> Result<LossBreakdown, DiarizerError> {
    check_lengths(student.len(), teacher.len(), labels.len())?;
    let mut ce = 0.0;
    let mut kld = 0.0;
    for ((s, t), l) in student.iter().zip(teacher).zip(labels) {
        ce -= s[l.index()].max(POSTERIOR_FLOOR).ln();
        for c in 0..3 {
            if t[c] > 0.0 {
                kld += t[c] * (t[c].ln() - s[c].max(POSTERIOR_FLOOR).ln());
            }
        }
    }
    let n = student.len() as f64;
    let out = LossBreakdown::new(ce / n, kld / n, alpha);
    if !out.total.is_finite() {
        return Err(DiarizerError::NonFiniteLoss);
    }
    Ok(out)
}

/// Gradient of the total loss with respect to the logits, row-major `[T][3]`.
///
/// Each log term contributes `s_j - [j == c]` scaled by its weight
/// (`1` for the label, `alpha * t_c` for the teacher); terms whose posterior
/// sits on the floor are constant and contribute nothing.
pub(super) fn logit_gradient(
    student: &[[f64; 3]],
    teacher: &[[f64; 3]],
    labels: &[FrameLabel],
    alpha: f64,
) -> Vec<f64> {
    let n = student.len() as f64;
    let mut grad = Vec::with_capacity(student.len() * 3);
    for ((s, t), l) in student.iter().zip(teacher).zip(labels) {
        let mut w = [alpha * t[0], alpha * t[1], alpha * t[2]];
        w[l.index()] += 1.0;
        for c in 0..3 {
            if s[c] < POSTERIOR_FLOOR {
                w[c] = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        for j in 0..3 {
            grad.push((s[j] * total - w[j]) / n);
        }
    }
    grad
}
