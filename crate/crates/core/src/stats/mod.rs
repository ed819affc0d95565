//! Inferential statistics: main-effects ANOVA with confounders, Pearson and
//! Spearman correlation, t-based confidence intervals, and the special
//! functions behind their p-values.

mod anova;
mod correlation;
mod linalg;
pub mod special;

use thiserror::Error;

pub use anova::{linear_anova, three_way_anova, AnovaResult, Factor, FactorTest, SsType};
pub use correlation::{average_ranks, linear_fit, pearson, pearson_r, spearman, CorrelationResult, LineFit};
pub use special::reg_incomplete_beta;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("no convergence in {0}")]
    NoConvergence(&'static str),
    #[error("{n} observations, need at least {need}")]
    TooFewObservations { n: usize, need: usize },
    #[error("input is constant")]
    ConstantInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficientDesign { column: String },
    #[error("factor {0} has a single level")]
    SingleLevelFactor(String),
    #[error("non-finite input")]
    NonFinite,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Mean and a two-sided t interval at confidence `level`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// `mean ± t_{(1+level)/2, n-1} · s / √n`.
pub fn mean_ci(values: &[f64], level: f64) -> Result<MeanCi, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewObservations {
            n: values.len(),
            need: 2,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::DomainError(format!("confidence level {level}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = values.len();
    let m = mean(values);
    let s = sample_sd(values);
    let t = special::t_quantile((1.0 + level) / 2.0, n as f64 - 1.0)?;
    let half = t * s / (n as f64).sqrt();
    Ok(MeanCi {
        mean: m,
        lo: m - half,
        hi: m + half,
        n,
    })
}

/// Linear-interpolation quantile of ascending `sorted` data: with
/// `h = (n-1)q`, returns `x[⌊h⌋] + (h-⌊h⌋)(x[⌊h⌋+1] - x[⌊h⌋])`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() {
        return Some(sorted[sorted.len() - 1]);
    }
    Some(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// [`quantile_sorted`] on unsorted data.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}
