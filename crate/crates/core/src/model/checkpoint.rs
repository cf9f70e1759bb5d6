//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        4 bytes  "LFGC"
//! version      u16      1
//! config_len   u32      length of the config echo in bytes
//! config       UTF-8    `key = value` lines, readable by the config parser
//! num_tensors  u32
//! per tensor:
//!   name_len   u16
//!   name       UTF-8    "branch.0", ..., "gate", "residual.weight", "residual.bias", "output"
//!   rows       u32
//!   cols       u32
//!   data       rows·cols f64, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{AdamState, LfgcnModel, ModelConfig, Params};
use crate::config;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LFGC";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub model: LfgcnModel,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(w: &mut W, model: &LfgcnModel, cfg: &ModelConfig) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let text = config::model_config_to_text(cfg);
    let len = u32::try_from(text.len()).map_err(|_| bad("config echo too long"))?;
    buf.extend_from_slice(&len.to_le_bytes());
    buf.extend_from_slice(text.as_bytes());
    let params = &model.params;
    let names = params.names();
    buf.extend_from_slice(&(names.len() as u32).to_le_bytes());
    for (name, t) in names.iter().zip(params.tensors()) {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(t.rows() as u32).to_le_bytes());
        buf.extend_from_slice(&(t.cols() as u32).to_le_bytes());
        for v in t.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(|e| bad(e.to_string()))
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or_else(|| bad("truncated file"))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn utf8(&mut self, n: usize) -> Result<&'a str> {
        std::str::from_utf8(self.take(n)?).map_err(|_| bad("invalid UTF-8"))
    }
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Checkpoint> {
    let mut data = Vec::new();
    r.read_to_end(&mut data).map_err(|e| bad(e.to_string()))?;
    let mut c = Cursor { data: &data, pos: 0 };
    if c.take(4)? != CHECKPOINT_MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let version = c.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let len = c.u32()? as usize;
    let cfg = config::model_config_from_text(c.utf8(len)?, "<checkpoint>")?;
    let count = c.u32()? as usize;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let nlen = c.u16()? as usize;
        let name = c.utf8(nlen)?.to_string();
        let rows = c.u32()? as usize;
        let cols = c.u32()? as usize;
        let bytes = c.take(rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or_else(|| bad("tensor too large"))?)?;
        let vals = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        let m = DenseMatrix::from_row_major(rows, cols, vals).map_err(|e| bad(format!("tensor {name}: {e}")))?;
        tensors.push((name, m));
    }
    if c.pos != data.len() {
        return Err(bad("trailing bytes after last tensor"));
    }
    let params = assemble(tensors)?;
    let adam = AdamState::new(&params);
    Ok(Checkpoint {
        config: cfg,
        model: LfgcnModel { params, adam },
    })
}

fn assemble(tensors: Vec<(String, DenseMatrix)>) -> Result<Params> {
    let nb = tensors.len().checked_sub(4).filter(|&n| n > 0).ok_or_else(|| bad("too few tensors"))?;
    let mut it = tensors.into_iter();
    let mut expect = |want: &str| -> Result<DenseMatrix> {
        let (name, m) = it.next().expect("counted");
        if name != want {
            return Err(bad(format!("expected tensor `{want}`, found `{name}`")));
        }
        Ok(m)
    };
    let branches = (0..nb).map(|b| expect(&format!("branch.{b}"))).collect::<Result<Vec<_>>>()?;
    let params = Params {
        branches,
        gate: expect("gate")?,
        residual_weight: expect("residual.weight")?,
        residual_bias: expect("residual.bias")?,
        output: expect("output")?,
    };
    let h = params.residual_weight.rows();
    let q = params.branches[0].rows();
    let shapes_ok = params.branches.iter().all(|b| b.shape() == (q, h))
        && params.gate.cols() == 1
        && (params.gate.rows() == h || params.gate.rows() == nb * h)
        && params.residual_weight.shape() == (h, h)
        && params.residual_bias.shape() == (1, h)
        && params.output.rows() == h;
    if !shapes_ok {
        return Err(bad("inconsistent tensor shapes"));
    }
    Ok(params)
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &LfgcnModel, cfg: &ModelConfig) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, model, cfg)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut f)
}
