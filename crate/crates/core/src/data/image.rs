//! Adaptive Gaussian thresholding of grey-scale images.
//!
//! The local reference `G(p)` is the Gaussian-weighted mean over the
//! `window × window` neighbourhood of `p`, with
//! `σ = 0.3·((window − 1)·0.5 − 1) + 0.8` and replicated edges. A pixel maps
//! to 1 iff `pixel(p) > G(p) − threshold`.

use crate::bits::BitVector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::shape("image pixels", width * height, pixels.len()));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        f64::from(self.pixels[cy * self.width + cx])
    }
}

/// Normalised 1-D Gaussian taps for an odd `window`.
pub fn gaussian_kernel_1d(window: usize) -> Vec<f64> {
    let sigma = 0.3 * ((window as f64 - 1.0) * 0.5 - 1.0) + 0.8;
    let half = (window / 2) as f64;
    let taps: Vec<f64> = (0..window)
        .map(|i| {
            let d = i as f64 - half;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// One output bit per pixel, row-major.
pub fn binarize_adaptive_gaussian(image: &GrayImage, window: usize, threshold: f64) -> Result<BitVector> {
    if window % 2 == 0 || window == 0 {
        return Err(Error::Config(format!("window must be odd, got {window}")));
    }
    if image.pixels.is_empty() {
        return Err(Error::Config("image is empty".into()));
    }
    let kernel = gaussian_kernel_1d(window);
    let half = (window / 2) as isize;
    let (w, h) = (image.width, image.height);

    // Separable: blur rows, then columns of the row-blurred image.
    let mut rows = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            rows[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * image.at(x as isize + i as isize - half, y as isize))
                .sum();
        }
    }
    let mut out = BitVector::zeros(w * h);
    for y in 0..h {
        for x in 0..w {
            let mean: f64 = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    let yy = (y as isize + i as isize - half).clamp(0, h as isize - 1) as usize;
                    k * rows[yy * w + x]
                })
                .sum();
            if f64::from(image.pixels[y * w + x]) > mean - threshold {
                out.set(y * w + x, true);
            }
        }
    }
    Ok(out)
}
