//! Binary checkpoint container, all integers and floats little-endian:
//!
//! ```text
//! "WCSM" u32 version
//! u32 blocks, u32 channels, u32 kernel_width
//! 12 x f64 input mean, 12 x f64 input scale
//! u32 tensor count, per tensor: u32 name length, name, u32 rank, rank x u64 dims, u64 offset
//! u64 parameter count, parameters as f64
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::loss::LossBreakdown;
use super::model::{ParamShape, StudentConfig, StudentModel};
use super::DiarizerError;
use crate::data::MFCC_DIM;

const MAGIC: &[u8; 4] = b"WCSM";
const VERSION: u32 = 1;

pub fn write_checkpoint(model: &StudentModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * model.n_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let cfg = model.config();
    for v in [cfg.blocks, cfg.channels, cfg.kernel_width] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    let (mean, scale) = model.normalization();
    for v in mean.iter().chain(scale.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(model.shapes().len() as u32).to_le_bytes());
    for s in model.shapes() {
        out.extend_from_slice(&(s.name.len() as u32).to_le_bytes());
        out.extend_from_slice(s.name.as_bytes());
        out.extend_from_slice(&(s.dims.len() as u32).to_le_bytes());
        for &d in &s.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&(s.offset as u64).to_le_bytes());
    }
    out.extend_from_slice(&(model.n_params() as u64).to_le_bytes());
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DiarizerError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| DiarizerError::Checkpoint("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DiarizerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DiarizerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, DiarizerError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize, DiarizerError> {
        usize::try_from(self.u64()?).map_err(|_| DiarizerError::Checkpoint("size overflow".into()))
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<StudentModel, DiarizerError> {
    let bad = |m: String| DiarizerError::Checkpoint(m);
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let config = StudentConfig {
        blocks: r.u32()? as usize,
        channels: r.u32()? as usize,
        kernel_width: r.u32()? as usize,
    };
    let mut mean = [0.0; MFCC_DIM];
    let mut scale = [0.0; MFCC_DIM];
    for v in mean.iter_mut().chain(scale.iter_mut()) {
        *v = r.f64()?;
    }
    let n_shapes = r.u32()? as usize;
    let mut shapes = Vec::with_capacity(n_shapes.min(1024));
    for _ in 0..n_shapes {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| bad("tensor name is not UTF-8".into()))?;
        let rank = r.u32()? as usize;
        let dims = (0..rank).map(|_| r.usize()).collect::<Result<Vec<_>, _>>()?;
        shapes.push(ParamShape {
            name,
            dims,
            offset: r.usize()?,
        });
    }
    let n = r.usize()?;
    if n.checked_mul(8) != Some(bytes.len() - r.pos) {
        return Err(bad(format!("expected {n} parameters in {} bytes", bytes.len() - r.pos)));
    }
    let params = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    let model = StudentModel::from_parts(config, params, mean, scale)?;
    if model.shapes() != shapes.as_slice() {
        return Err(bad("tensor registry does not match the architecture".into()));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &StudentModel, path: &Path) -> Result<(), DiarizerError> {
    std::fs::write(path, write_checkpoint(model)).map_err(|source| DiarizerError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<StudentModel, DiarizerError> {
    let bytes = std::fs::read(path).map_err(|source| DiarizerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_checkpoint(&bytes)
}

/// CSV with one `epoch,ce,kld,total` line per epoch, epochs counted from 1.
pub fn write_training_log(history: &[LossBreakdown]) -> String {
    let mut out = String::from("epoch,ce,kld,total\n");
    for (i, h) in history.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i + 1, h.ce, h.kld, h.total);
    }
    out
}
