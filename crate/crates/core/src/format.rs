//! Binary model files.
//!
//! ```text
//! "COTM"                     4 bytes
//! version                    u16 LE (currently 1)
//! m, n, o, N, t              u32 LE each
//! s, e                       f64 LE each
//! boost_true_positive        u8 (0 or 1)
//! seed                       u64 LE
//! C                          n·2o × u32 LE, row-major
//! W                          m·n × i32 LE, row-major
//! freeze mask                ceil(m·n / 8) bytes, row-major, LSB-first
//! CRC-32 (IEEE)              u32 LE over every preceding byte
//! ```
//!
//! Every value is little-endian. Unused high bits of the last mask byte are 0.

use std::path::Path;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::model::{MemoryMatrix, Model, WeightMatrix};

pub const MODEL_MAGIC: &[u8; 4] = b"COTM";
pub const MODEL_VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 5 * 4 + 2 * 8 + 1 + 8;

pub fn encode_model(model: &Model) -> Vec<u8> {
    let cfg = model.config();
    let (m, n) = (cfg.n_outputs, cfg.n_clauses);
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * model.memory().states().len() + 4 * m * n + m * n / 8 + 5);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for v in [cfg.n_outputs, cfg.n_clauses, cfg.n_inputs] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&cfg.memory_depth.to_le_bytes());
    out.extend_from_slice(&cfg.voting_margin.to_le_bytes());
    out.extend_from_slice(&cfg.specificity.to_le_bytes());
    out.extend_from_slice(&cfg.multiclass_scalar.to_le_bytes());
    out.push(u8::from(cfg.boost_true_positive));
    out.extend_from_slice(&cfg.seed.to_le_bytes());
    for &c in model.memory().states() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for &w in model.weights().values() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let mut mask = vec![0u8; (m * n).div_ceil(8)];
    for (idx, &f) in model.weights().frozen().iter().enumerate() {
        if f {
            mask[idx / 8] |= 1 << (idx % 8);
        }
    }
    out.extend_from_slice(&mask);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                self.pos as u64,
                format!(
                    "truncated {what}: need {len} bytes, {} available",
                    self.bytes.len() - self.pos
                ),
            )),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::format(
            bytes.len() as u64,
            format!("file too short for a model header ({} bytes)", bytes.len()),
        ));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4, "magic")? != MODEL_MAGIC {
        return Err(Error::format(0, "bad magic, expected COTM"));
    }
    let version = r.u16("version")?;
    if version != MODEL_VERSION {
        return Err(Error::format(4, format!("unsupported model version {version}")));
    }
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::format(
            body.len() as u64,
            format!("checksum mismatch: stored {stored:08x}, computed {computed:08x}"),
        ));
    }
    let m = r.u32("n_outputs")? as usize;
    let n = r.u32("n_clauses")? as usize;
    let o = r.u32("n_inputs")? as usize;
    let depth = r.u32("memory_depth")?;
    let t = r.u32("voting_margin")?;
    let s = r.f64("specificity")?;
    let e = r.f64("multiclass_scalar")?;
    let boost_pos = r.pos;
    let boost = match r.u8("boost flag")? {
        0 => false,
        1 => true,
        b => return Err(Error::format(boost_pos as u64, format!("boost flag must be 0 or 1, got {b}"))),
    };
    let seed = r.u64("seed")?;
    let mut config = Config::new(m, n, o)
        .with_memory_depth(depth)
        .with_voting_margin(t)
        .with_specificity(s)
        .with_multiclass_scalar(e)
        .with_boost(boost)
        .with_seed(seed);
    config.validate()?;
    config.empty_clause_output = Default::default();

    let n_states = n
        .checked_mul(2 * o)
        .ok_or_else(|| Error::format(6, "memory dimensions overflow"))?;
    let c_pos = r.pos;
    let states = r
        .take(n_states.saturating_mul(4), "memory matrix")?
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let memory = MemoryMatrix::from_states(n, 2 * o, depth, states)
        .map_err(|e| Error::format(c_pos as u64, e.to_string()))?;
    let values = r
        .take(m.saturating_mul(n).saturating_mul(4), "weight matrix")?
        .chunks_exact(4)
        .map(|b| i32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let mask = r.take((m * n).div_ceil(8), "freeze mask")?;
    let frozen = (0..m * n).map(|idx| (mask[idx / 8] >> (idx % 8)) & 1 == 1).collect();
    if r.pos != body.len() {
        return Err(Error::format(
            r.pos as u64,
            format!("{} trailing bytes before checksum", body.len() - r.pos),
        ));
    }
    let weights = WeightMatrix::with_frozen(m, n, values, frozen)?;
    Model::from_parts(config, memory, weights)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
