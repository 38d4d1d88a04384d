//! IDX tensors (the MNIST container): a big-endian header `00 00 08 nd`,
//! `nd` big-endian u32 dimensions, then the unsigned-byte payload.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

const UBYTE: u8 = 0x08;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    pub fn new(dims: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::shape("idx payload", expected, data.len()));
        }
        Ok(Self { dims, data })
    }

    /// Number of items along the first dimension.
    pub fn items(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    /// Bytes per item.
    pub fn item_len(&self) -> usize {
        self.dims.iter().skip(1).product()
    }

    pub fn item(&self, index: usize) -> &[u8] {
        let len = self.item_len();
        &self.data[index * len..(index + 1) * len]
    }
}

pub fn read_idx<R: Read>(mut reader: R) -> Result<IdxTensor> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::format(0, format!("read failed: {e}")))?;
    parse(&bytes)
}

fn parse(bytes: &[u8]) -> Result<IdxTensor> {
    if bytes.len() < 4 {
        return Err(Error::format(0, format!("truncated magic: {} of 4 bytes", bytes.len())));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::format(0, format!("bad magic {:02x?}", &bytes[..4])));
    }
    if bytes[2] != UBYTE {
        return Err(Error::format(2, format!("unsupported element type 0x{:02x}", bytes[2])));
    }
    let nd = usize::from(bytes[3]);
    if nd == 0 {
        return Err(Error::format(3, "zero dimensions"));
    }
    let header = 4 + 4 * nd;
    if bytes.len() < header {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated header: expected {header} bytes, got {}", bytes.len()),
        ));
    }
    let dims: Vec<usize> = (0..nd)
        .map(|d| u32::from_be_bytes(bytes[4 + 4 * d..8 + 4 * d].try_into().unwrap()) as usize)
        .collect();
    let payload = dims
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .ok_or_else(|| Error::format(4, "dimension product overflows"))?;
    let actual = (bytes.len() - header) as u64;
    if actual != payload {
        return Err(Error::format(
            header as u64 + actual.min(payload),
            format!("payload size mismatch: expected {payload} bytes, got {actual}"),
        ));
    }
    Ok(IdxTensor {
        dims,
        data: bytes[header..].to_vec(),
    })
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<IdxTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(&bytes)
}

pub fn write_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = vec![0, 0, UBYTE, tensor.dims.len() as u8];
    for &d in &tensor.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&tensor.data);
    out
}
