//! Binary checkpoint files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic    8 bytes  "CICLCKPT"
//! version  u32      (= 1)
//! config   u32 x 5  layers, heads, embed_dim, context_length, flags
//!                   (flags bit 0: tied embeddings)
//! count    u32      number of parameter tensors
//! tensor*  count    u32 name length, name (UTF-8), u32 rank, u32 dims[rank],
//!                   f32 data[product(dims)]
//! opt      u32      0 = no optimizer state, 1 = present; if present:
//!                   u64 step, f64 lr, f64 weight_decay, f64 beta1, f64 beta2,
//!                   f64 eps, then 2 * count tensors in the same encoding:
//!                   "m.<name>" for every tensor, then "v.<name>"
//! ```
//!
//! Parameter tensors appear in the canonical order of
//! [`ModelConfig::tensor_specs`]. The whole file is validated before anything
//! is returned.

use std::fs;
use std::path::Path;

use super::adamw::{AdamWConfig, OptimizerState};
use super::params::{ModelConfig, ModelParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CICLCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;
const FLAG_TIED: u32 = 1;

/// Parameters plus optional optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams<f32>,
    pub optimizer: Option<OptimizerState<f32>>,
}

impl Checkpoint {
    pub fn config(&self) -> &ModelConfig {
        self.params.config()
    }
}

fn put_u32(buf: &mut Vec<u8>, x: u32) {
    buf.extend_from_slice(&x.to_le_bytes());
}

fn put_tensor(buf: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f32]) {
    put_u32(buf, name.len() as u32);
    buf.extend_from_slice(name.as_bytes());
    put_u32(buf, shape.len() as u32);
    for &d in shape {
        put_u32(buf, d as u32);
    }
    for &x in data {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_checkpoint(params: &ModelParams<f32>, optimizer: Option<&OptimizerState<f32>>) -> Vec<u8> {
    let c = params.config();
    let specs = c.tensor_specs();
    let mut buf = Vec::with_capacity(64 + params.parameter_count() * 4 * if optimizer.is_some() { 3 } else { 1 });
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut buf, CHECKPOINT_VERSION);
    for x in [c.layers, c.heads, c.embed_dim, c.context_length] {
        put_u32(&mut buf, x as u32);
    }
    put_u32(&mut buf, if c.tied_embeddings { FLAG_TIED } else { 0 });
    put_u32(&mut buf, specs.len() as u32);
    for (s, t) in specs.iter().zip(params.tensors()) {
        put_tensor(&mut buf, &s.name, &s.shape, t);
    }
    match optimizer {
        None => put_u32(&mut buf, 0),
        Some(st) => {
            put_u32(&mut buf, 1);
            buf.extend_from_slice(&st.step.to_le_bytes());
            let h = st.hyper;
            for x in [h.lr, h.weight_decay, h.beta1, h.beta2, h.eps] {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            for (s, t) in specs.iter().zip(&st.m) {
                put_tensor(&mut buf, &format!("m.{}", s.name), &s.shape, t);
            }
            for (s, t) in specs.iter().zip(&st.v) {
                put_tensor(&mut buf, &format!("v.{}", s.name), &s.shape, t);
            }
        }
    }
    buf
}

/// Writes to a temporary sibling file, then renames it into place.
pub fn save_checkpoint(
    path: impl AsRef<Path>,
    params: &ModelParams<f32>,
    optimizer: Option<&OptimizerState<f32>>,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode_checkpoint(params, optimizer)).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensor(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f32>> {
        let len = self.u32()? as usize;
        let got = self.take(len)?;
        if got != name.as_bytes() {
            return Err(Error::Format(format!(
                "expected tensor {name}, found {}",
                String::from_utf8_lossy(got)
            )));
        }
        let rank = self.u32()? as usize;
        let dims = (0..rank).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims != shape {
            return Err(Error::Format(format!("tensor {name} has shape {dims:?}, expected {shape:?}")));
        }
        let numel: usize = shape.iter().product();
        let raw = self.take(numel.checked_mul(4).ok_or_else(|| Error::Format("tensor too large".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let flags = r.u32()?;
    if flags & !FLAG_TIED != 0 {
        return Err(Error::Format(format!("unknown checkpoint flags {flags:#x}")));
    }
    let config = ModelConfig {
        layers: dims[0],
        heads: dims[1],
        embed_dim: dims[2],
        context_length: dims[3],
        tied_embeddings: flags & FLAG_TIED != 0,
    };
    config
        .validate()
        .map_err(|e| Error::Format(format!("checkpoint config: {e}")))?;
    let specs = config.tensor_specs();
    let count = r.u32()? as usize;
    if count != specs.len() {
        return Err(Error::Format(format!(
            "checkpoint holds {count} tensors, config implies {}",
            specs.len()
        )));
    }
    let tensors = specs
        .iter()
        .map(|s| r.tensor(&s.name, &s.shape))
        .collect::<Result<Vec<_>>>()?;
    let params = ModelParams::from_tensors(config, tensors).map_err(|e| Error::Format(e.to_string()))?;

    let optimizer = match r.u32()? {
        0 => None,
        1 => {
            let step = r.u64()?;
            let hyper = AdamWConfig {
                lr: r.f64()?,
                weight_decay: r.f64()?,
                beta1: r.f64()?,
                beta2: r.f64()?,
                eps: r.f64()?,
            };
            let m = specs
                .iter()
                .map(|s| r.tensor(&format!("m.{}", s.name), &s.shape))
                .collect::<Result<Vec<_>>>()?;
            let v = specs
                .iter()
                .map(|s| r.tensor(&format!("v.{}", s.name), &s.shape))
                .collect::<Result<Vec<_>>>()?;
            Some(OptimizerState { hyper, step, m, v })
        }
        other => return Err(Error::Format(format!("bad optimizer marker {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checkpoint",
            bytes.len() - r.pos
        )));
    }
    Ok(Checkpoint { params, optimizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::transformer::forward;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> ModelConfig {
        ModelConfig { layers: 2, heads: 2, embed_dim: 32, context_length: 32, tied_embeddings: false }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::<f32>::init(tiny(), &mut rng).unwrap();
        let mut st = OptimizerState::new(&p, AdamWConfig::default());
        st.step = 17;
        st.m[3][1] = 0.25;
        st.v[5][0] = -1.5e-7;
        let toks: Vec<u8> = (0..20).map(|i| (i * 7 % 26) as u8).collect();
        let before = forward(&p, &toks).unwrap();

        save_checkpoint(&path, &p, Some(&st)).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.params, p);
        assert_eq!(ck.optimizer.as_ref(), Some(&st));
        assert_eq!(forward(&ck.params, &toks).unwrap(), before);

        let tied = ModelParams::<f32>::init(ModelConfig { tied_embeddings: true, ..tiny() }, &mut rng).unwrap();
        save_checkpoint(&path, &tied, None).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.params, tied);
        assert!(ck.optimizer.is_none());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let p = ModelParams::<f32>::init(tiny(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let good = encode_checkpoint(&p, None);
        assert!(decode_checkpoint(&good).is_ok());

        let mut bad = good.clone();
        bad[0] ^= 0xff;
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Format(_))));

        let mut bad = good.clone();
        bad[8] = 9;
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Format(_))));

        assert!(matches!(decode_checkpoint(&good[..good.len() - 3]), Err(Error::Format(_))));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode_checkpoint(&long), Err(Error::Format(_))));

        // heads = 3 does not divide 32
        let mut bad = good.clone();
        bad[16..20].copy_from_slice(&3u32.to_le_bytes());
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Format(_))));
    }
}
