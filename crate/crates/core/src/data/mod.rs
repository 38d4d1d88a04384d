//! Datasets and the tooling that produces them.

mod idx;
mod image;
mod imbalance;
mod text;
mod xor;

use std::path::Path;

use crate::bits::{BitMatrix, BitVector};
use crate::error::{Error, Result};

pub use idx::{load_idx, read_idx, write_idx, IdxTensor};
pub use image::{binarize_adaptive_gaussian, gaussian_kernel_1d, GrayImage};
pub use imbalance::{subsample_imbalance, Imbalance};
pub use text::{build_vocabulary, sow_vectorize, tokenize, Vocabulary};
pub use xor::{generate_noisy_xor, patch_class, XorSplit, CLASS0_PATCHES, CLASS1_PATCHES, PATCH_BITS};

pub const DATASET_MAGIC: &[u8; 4] = b"COTD";
pub const DATASET_VERSION: u16 = 1;

/// Packed inputs `X` (examples × o) and targets `Y` (examples × m).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Dataset {
    x: BitMatrix,
    y: BitMatrix,
    pub feature_names: Option<Vec<String>>,
    pub class_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: BitMatrix, y: BitMatrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::shape("target rows", x.rows(), y.rows()));
        }
        Ok(Self {
            x,
            y,
            feature_names: None,
            class_names: None,
        })
    }

    pub fn from_rows(n_inputs: usize, n_outputs: usize, rows: &[(BitVector, BitVector)]) -> Result<Self> {
        let xs: Vec<_> = rows.iter().map(|(x, _)| x.clone()).collect();
        let ys: Vec<_> = rows.iter().map(|(_, y)| y.clone()).collect();
        Self::new(
            BitMatrix::from_rows(n_inputs, &xs)?,
            BitMatrix::from_rows(n_outputs, &ys)?,
        )
    }

    /// One-hot targets from class labels.
    pub fn from_labels(x: BitMatrix, labels: &[usize], n_classes: usize) -> Result<Self> {
        let mut y = BitMatrix::zeros(labels.len(), n_classes);
        for (r, &label) in labels.iter().enumerate() {
            if label >= n_classes {
                return Err(Error::UnknownClass {
                    class: label,
                    n_classes,
                });
            }
            y.set(r, label, true);
        }
        Self::new(x, y)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    #[inline]
    pub fn n_inputs(&self) -> usize {
        self.x.cols()
    }

    #[inline]
    pub fn n_outputs(&self) -> usize {
        self.y.cols()
    }

    #[inline]
    pub fn x(&self) -> &BitMatrix {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &BitMatrix {
        &self.y
    }

    pub fn input(&self, r: usize) -> BitVector {
        self.x.row(r)
    }

    pub fn target(&self, r: usize) -> BitVector {
        self.y.row(r)
    }

    /// Class of row `r`: index of its first set target bit.
    pub fn label(&self, r: usize) -> Option<usize> {
        let words = self.y.row_words(r);
        words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn labels(&self) -> Vec<Option<usize>> {
        (0..self.len()).map(|r| self.label(r)).collect()
    }

    /// Rows at `indices`, in that order; names are carried over.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(indices),
            y: self.y.select_rows(indices),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Encodes the `COTD` container.
    ///
    /// ```text
    /// "COTD" | version u16 | examples u32 | o u32 | m u32 | X rows | Y rows
    /// ```
    /// All integers little-endian. Each row is packed LSB-first into
    /// `ceil(cols / 8)` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_inputs() as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_outputs() as u32).to_le_bytes());
        for m in [&self.x, &self.y] {
            let row_bytes = m.cols().div_ceil(8);
            for r in 0..m.rows() {
                let bytes = m.row_words(r).iter().flat_map(|w| w.to_le_bytes());
                out.extend(bytes.take(row_bytes));
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 4 + 2 + 3 * 4;
        if bytes.len() < HEADER {
            return Err(Error::format(
                bytes.len() as u64,
                format!("truncated dataset header: need {HEADER} bytes, got {}", bytes.len()),
            ));
        }
        if &bytes[..4] != DATASET_MAGIC {
            return Err(Error::format(0, "bad magic, expected COTD"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != DATASET_VERSION {
            return Err(Error::format(4, format!("unsupported dataset version {version}")));
        }
        let u32_at = |p: usize| u32::from_le_bytes(bytes[p..p + 4].try_into().unwrap()) as usize;
        let (rows, o, m) = (u32_at(6), u32_at(10), u32_at(14));
        let (xb, yb) = (o.div_ceil(8), m.div_ceil(8));
        let expected = HEADER as u64 + rows as u64 * (xb + yb) as u64;
        if bytes.len() as u64 != expected {
            return Err(Error::format(
                bytes.len().min(expected as usize) as u64,
                format!("dataset payload: expected {expected} bytes, got {}", bytes.len()),
            ));
        }
        let read = |offset: usize, cols: usize, width: usize| {
            let mut mat = BitMatrix::zeros(rows, cols);
            for r in 0..rows {
                let row = &bytes[offset + r * width..offset + (r + 1) * width];
                for c in 0..cols {
                    if (row[c / 8] >> (c % 8)) & 1 == 1 {
                        mat.set(r, c, true);
                    }
                }
            }
            mat
        };
        let x = read(HEADER, o, xb);
        let y = read(HEADER + rows * xb, m, yb);
        Self::new(x, y)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
