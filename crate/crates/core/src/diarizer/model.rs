use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{distill_loss, logit_gradient, LossBreakdown, POSTERIOR_FLOOR};
use super::DiarizerError;
use crate::data::{FrameLabel, MFCC_DIM};

const CLASSES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudentConfig {
    /// Residual blocks after the stem.
    pub blocks: usize,
    pub channels: usize,
    /// Odd temporal kernel width shared by every convolution.
    pub kernel_width: usize,
}

impl Default for StudentConfig {
    fn default() -> Self {
        Self {
            blocks: 2,
            channels: 32,
            kernel_width: 5,
        }
    }
}

impl StudentConfig {
    pub fn validate(&self) -> Result<(), DiarizerError> {
        if self.blocks < 1 {
            return Err(DiarizerError::BadConfig("blocks must be at least 1".into()));
        }
        if self.channels < 4 {
            return Err(DiarizerError::BadConfig("channels must be at least 4".into()));
        }
        if self.kernel_width % 2 == 0 {
            return Err(DiarizerError::BadConfig("kernel_width must be odd".into()));
        }
        Ok(())
    }
}

/// One named parameter tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub dims: Vec<usize>,
    pub offset: usize,
}

impl ParamShape {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Registry order: stem weight/bias, then per block conv1 weight/bias and
/// conv2 weight/bias, then head weight/bias. Convolution weights are
/// `[out][kernel][in]`, the head weight is `[3][channels]`.
fn shape_registry(config: &StudentConfig) -> Vec<ParamShape> {
    let (c, k) = (config.channels, config.kernel_width);
    let mut dims: Vec<(String, Vec<usize>)> = vec![("stem.w".into(), vec![c, k, MFCC_DIM]), ("stem.b".into(), vec![c])];
    for r in 0..config.blocks {
        dims.push((format!("block{r}.conv1.w"), vec![c, k, c]));
        dims.push((format!("block{r}.conv1.b"), vec![c]));
        dims.push((format!("block{r}.conv2.w"), vec![c, k, c]));
        dims.push((format!("block{r}.conv2.b"), vec![c]));
    }
    dims.push(("head.w".into(), vec![CLASSES, c]));
    dims.push(("head.b".into(), vec![CLASSES]));
    let mut offset = 0;
    dims.into_iter()
        .map(|(name, dims)| {
            let s = ParamShape { name, dims, offset };
            offset += s.len();
            s
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudentModel {
    config: StudentConfig,
    shapes: Vec<ParamShape>,
    params: Vec<f64>,
    /// Fixed per-coefficient input standardization, `(x - mean) * scale`.
    norm_mean: [f64; MFCC_DIM],
    norm_scale: [f64; MFCC_DIM],
}

/// Intermediate activations kept for the backward pass, all `[T][channels]`
/// except `x` (`[T][12]`) and `logits` (`[T][3]`).
struct Trace {
    t: usize,
    x: Vec<f64>,
    stem_pre: Vec<f64>,
    /// `h[0]` is the stem output, `h[r + 1]` the output of block `r`.
    h: Vec<Vec<f64>>,
    inner_pre: Vec<Vec<f64>>,
    inner: Vec<Vec<f64>>,
    sum_pre: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&a| a.max(0.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Same-padded convolution of time-major `x` (`[t][cin]`) into `[t][cout]`.
fn conv_forward(x: &[f64], t: usize, cin: usize, w: &[f64], b: &[f64], cout: usize, k: usize) -> Vec<f64> {
    let pad = k / 2;
    let mut out = vec![0.0; t * cout];
    for ti in 0..t {
        let row = &mut out[ti * cout..(ti + 1) * cout];
        row.copy_from_slice(b);
        for kk in 0..k {
            let Some(src) = (ti + kk).checked_sub(pad).filter(|&s| s < t) else {
                continue;
            };
            let xs = &x[src * cin..(src + 1) * cin];
            for (o, acc) in row.iter_mut().enumerate() {
                *acc += dot(&w[(o * k + kk) * cin..(o * k + kk + 1) * cin], xs);
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients of [`conv_forward`] and, when asked,
/// the input gradient.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    t: usize,
    cin: usize,
    w: &[f64],
    cout: usize,
    k: usize,
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let pad = k / 2;
    for ti in 0..t {
        for o in 0..cout {
            let g = dy[ti * cout + o];
            if g == 0.0 {
                continue;
            }
            db[o] += g;
            for kk in 0..k {
                let Some(src) = (ti + kk).checked_sub(pad).filter(|&s| s < t) else {
                    continue;
                };
                let widx = (o * k + kk) * cin;
                axpy(g, &x[src * cin..(src + 1) * cin], &mut dw[widx..widx + cin]);
                if let Some(dx) = dx.as_deref_mut() {
                    axpy(g, &w[widx..widx + cin], &mut dx[src * cin..(src + 1) * cin]);
                }
            }
        }
    }
}

fn softmax(z: &[f64]) -> [f64; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp(), (z[2] - m).exp()];
    let s = e[0] + e[1] + e[2];
    [e[0] / s, e[1] / s, e[2] / s]
}

impl StudentModel {
    /// Fan-in scaled uniform weights from a seeded generator, zero biases.
    pub fn new(config: StudentConfig, seed: u64) -> Result<Self, DiarizerError> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for shape in &model.shapes {
            if shape.dims.len() < 2 {
                continue;
            }
            let fan_in: usize = shape.dims[1..].iter().product();
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut model.params[shape.range()] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(model)
    }

    pub fn zeros(config: StudentConfig) -> Result<Self, DiarizerError> {
        config.validate()?;
        let shapes = shape_registry(&config);
        let n = shapes.last().map_or(0, |s| s.offset + s.len());
        Ok(Self {
            config,
            shapes,
            params: vec![0.0; n],
            norm_mean: [0.0; MFCC_DIM],
            norm_scale: [1.0; MFCC_DIM],
        })
    }

    pub(super) fn from_parts(
        config: StudentConfig,
        params: Vec<f64>,
        norm_mean: [f64; MFCC_DIM],
        norm_scale: [f64; MFCC_DIM],
    ) -> Result<Self, DiarizerError> {
        let mut model = Self::zeros(config)?;
        if params.len() != model.params.len() {
            return Err(DiarizerError::ShapeMismatch {
                expected: format!("{} parameters", model.params.len()),
                found: params.len().to_string(),
            });
        }
        model.params = params;
        model.norm_mean = norm_mean;
        model.norm_scale = norm_scale;
        Ok(model)
    }

    pub fn config(&self) -> &StudentConfig {
        &self.config
    }

    pub fn shapes(&self) -> &[ParamShape] {
        &self.shapes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn normalization(&self) -> (&[f64; MFCC_DIM], &[f64; MFCC_DIM]) {
        (&self.norm_mean, &self.norm_scale)
    }

    /// Standardizes each input coefficient to zero mean and unit variance over
    /// `frames`; constant coefficients keep scale 1.
    pub fn fit_normalization<'a>(&mut self, frames: impl IntoIterator<Item = &'a [f64; MFCC_DIM]>) {
        let mut n = 0usize;
        let mut sum = [0.0; MFCC_DIM];
        let mut sq = [0.0; MFCC_DIM];
        for f in frames {
            n += 1;
            for d in 0..MFCC_DIM {
                sum[d] += f[d];
                sq[d] += f[d] * f[d];
            }
        }
        if n == 0 {
            return;
        }
        for d in 0..MFCC_DIM {
            let mean = sum[d] / n as f64;
            let var = (sq[d] / n as f64 - mean * mean).max(0.0);
            self.norm_mean[d] = mean;
            self.norm_scale[d] = if var > 1e-24 { 1.0 / var.sqrt() } else { 1.0 };
        }
    }

    fn param(&self, i: usize) -> &[f64] {
        &self.params[self.shapes[i].range()]
    }

    fn check_window(&self, window: &[[f64; MFCC_DIM]]) -> Result<(), DiarizerError> {
        if window.len() < self.config.kernel_width {
            return Err(DiarizerError::TooShort {
                frames: window.len(),
                kernel: self.config.kernel_width,
            });
        }
        Ok(())
    }

    /// Checks a row-major `[T][d]` feature matrix and converts it to frames.
    pub fn frames_from_matrix(matrix: &[Vec<f64>]) -> Result<Vec<[f64; MFCC_DIM]>, DiarizerError> {
        matrix
            .iter()
            .map(|row| {
                <[f64; MFCC_DIM]>::try_from(row.as_slice()).map_err(|_| DiarizerError::ShapeMismatch {
                    expected: format!("{MFCC_DIM} features per frame"),
                    found: row.len().to_string(),
                })
            })
            .collect()
    }

    fn run(&self, window: &[[f64; MFCC_DIM]]) -> Trace {
        let (c, k, t) = (self.config.channels, self.config.kernel_width, window.len());
        let x: Vec<f64> = window
            .iter()
            .flat_map(|f| (0..MFCC_DIM).map(move |d| (f[d] - self.norm_mean[d]) * self.norm_scale[d]))
            .collect();
        let stem_pre = conv_forward(&x, t, MFCC_DIM, self.param(0), self.param(1), c, k);
        let mut h = vec![relu(&stem_pre)];
        let mut inner_pre = Vec::new();
        let mut inner = Vec::new();
        let mut sum_pre = Vec::new();
        for r in 0..self.config.blocks {
            let base = 2 + 4 * r;
            let a_pre = conv_forward(&h[r], t, c, self.param(base), self.param(base + 1), c, k);
            let a = relu(&a_pre);
            let mut s = conv_forward(&a, t, c, self.param(base + 2), self.param(base + 3), c, k);
            axpy(1.0, &h[r], &mut s);
            h.push(relu(&s));
            inner_pre.push(a_pre);
            inner.push(a);
            sum_pre.push(s);
        }
        let head = 2 + 4 * self.config.blocks;
        let (hw, hb) = (self.param(head), self.param(head + 1));
        let last = &h[self.config.blocks];
        let mut logits = Vec::with_capacity(t * CLASSES);
        for ti in 0..t {
            let row = &last[ti * c..(ti + 1) * c];
            for cls in 0..CLASSES {
                logits.push(hb[cls] + dot(&hw[cls * c..(cls + 1) * c], row));
            }
        }
        Trace {
            t,
            x,
            stem_pre,
            h,
            inner_pre,
            inner,
            sum_pre,
            logits,
        }
    }

    fn softmax_rows(trace: &Trace) -> Vec<[f64; 3]> {
        trace.logits.chunks_exact(CLASSES).map(softmax).collect()
    }

    /// Per-frame class posteriors (FG, BG, S), floored at [`POSTERIOR_FLOOR`].
    pub fn forward(&self, window: &[[f64; MFCC_DIM]]) -> Result<Vec<[f64; 3]>, DiarizerError> {
        self.check_window(window)?;
        let rows = Self::softmax_rows(&self.run(window));
        Ok(rows.into_iter().map(|r| r.map(|p| p.max(POSTERIOR_FLOOR))).collect())
    }

    /// Sign pattern of every ReLU input; equal patterns mean the loss is
    /// smooth along the segment between two parameter vectors.
    pub fn activation_pattern(&self, window: &[[f64; MFCC_DIM]]) -> Result<Vec<bool>, DiarizerError> {
        self.check_window(window)?;
        let tr = self.run(window);
        let all = std::iter::once(&tr.stem_pre).chain(&tr.inner_pre).chain(&tr.sum_pre);
        Ok(all.flat_map(|v| v.iter().map(|&a| a > 0.0)).collect())
    }

    /// Loss on one window.
    pub fn loss(
        &self,
        window: &[[f64; MFCC_DIM]],
        teacher: &[[f64; 3]],
        labels: &[FrameLabel],
        alpha: f64,
    ) -> Result<LossBreakdown, DiarizerError> {
        self.check_window(window)?;
        distill_loss(&Self::softmax_rows(&self.run(window)), teacher, labels, alpha)
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn loss_and_gradient(
        &self,
        window: &[[f64; MFCC_DIM]],
        teacher: &[[f64; 3]],
        labels: &[FrameLabel],
        alpha: f64,
    ) -> Result<(LossBreakdown, Vec<f64>), DiarizerError> {
        self.check_window(window)?;
        let tr = self.run(window);
        let post = Self::softmax_rows(&tr);
        let loss = distill_loss(&post, teacher, labels, alpha)?;
        let dz = logit_gradient(&post, teacher, labels, alpha);
        Ok((loss, self.backprop(&tr, &dz)))
    }

    /// Gradient of the total loss only.
    pub fn backward(
        &self,
        window: &[[f64; MFCC_DIM]],
        teacher: &[[f64; 3]],
        labels: &[FrameLabel],
        alpha: f64,
    ) -> Result<Vec<f64>, DiarizerError> {
        Ok(self.loss_and_gradient(window, teacher, labels, alpha)?.1)
    }

    fn backprop(&self, tr: &Trace, dz: &[f64]) -> Vec<f64> {
        let (c, k, t) = (self.config.channels, self.config.kernel_width, tr.t);
        let mut grad = vec![0.0; self.params.len()];
        let head = 2 + 4 * self.config.blocks;
        let last = &tr.h[self.config.blocks];

        let mut dh = vec![0.0; t * c];
        {
            let hw = self.param(head);
            let (w_range, b_range) = (self.shapes[head].range(), self.shapes[head + 1].range());
            for ti in 0..t {
                let row = &last[ti * c..(ti + 1) * c];
                for cls in 0..CLASSES {
                    let g = dz[ti * CLASSES + cls];
                    grad[b_range.start + cls] += g;
                    axpy(g, row, &mut grad[w_range.start + cls * c..w_range.start + (cls + 1) * c]);
                    axpy(g, &hw[cls * c..(cls + 1) * c], &mut dh[ti * c..(ti + 1) * c]);
                }
            }
        }

        for r in (0..self.config.blocks).rev() {
            let base = 2 + 4 * r;
            // through the output ReLU
            let ds: Vec<f64> = dh.iter().zip(&tr.sum_pre[r]).map(|(&g, &s)| if s > 0.0 { g } else { 0.0 }).collect();
            let mut da = vec![0.0; t * c];
            {
                let (w2, b2) = (self.shapes[base + 2].range(), self.shapes[base + 3].range());
                let (lo, hi) = grad.split_at_mut(b2.start);
                conv_backward(
                    &tr.inner[r],
                    t,
                    c,
                    self.param(base + 2),
                    c,
                    k,
                    &ds,
                    &mut lo[w2],
                    &mut hi[..c],
                    Some(&mut da),
                );
            }
            for (g, &a) in da.iter_mut().zip(&tr.inner_pre[r]) {
                if a <= 0.0 {
                    *g = 0.0;
                }
            }
            // identity skip plus the conv1 path
            let mut dh_in = ds;
            {
                let (w1, b1) = (self.shapes[base].range(), self.shapes[base + 1].range());
                let (lo, hi) = grad.split_at_mut(b1.start);
                conv_backward(
                    &tr.h[r],
                    t,
                    c,
                    self.param(base),
                    c,
                    k,
                    &da,
                    &mut lo[w1],
                    &mut hi[..c],
                    Some(&mut dh_in),
                );
            }
            dh = dh_in;
        }

        let dstem: Vec<f64> = dh.iter().zip(&tr.stem_pre).map(|(&g, &s)| if s > 0.0 { g } else { 0.0 }).collect();
        let (w0, b0) = (self.shapes[0].range(), self.shapes[1].range());
        let (lo, hi) = grad.split_at_mut(b0.start);
        conv_backward(&tr.x, t, MFCC_DIM, self.param(0), c, k, &dstem, &mut lo[w0], &mut hi[..c], None);
        grad
    }
}
