//! 2D Noisy XOR: 4×4 binary images whose upper-right 2×2 patch decides the
//! class. A diagonal patch is class 1; a horizontal or vertical line is
//! class 0. Every other pixel is noise.

use rand::seq::index::sample;
use rand::Rng;

use crate::bits::{BitMatrix, BitVector};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Flattened positions of the patch, row-major over the 4×4 image:
/// `[[2, 3], [6, 7]]`.
pub const PATCH_BITS: [usize; 4] = [2, 3, 6, 7];

/// Patches as `[top-left, top-right, bottom-left, bottom-right]`.
pub const CLASS1_PATCHES: [[bool; 4]; 2] = [[true, false, false, true], [false, true, true, false]];
pub const CLASS0_PATCHES: [[bool; 4]; 4] = [
    [true, true, false, false],
    [false, false, true, true],
    [true, false, true, false],
    [false, true, false, true],
];

const SIDE: usize = 4;
const N_INPUTS: usize = SIDE * SIDE;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XorSplit {
    pub train: Dataset,
    pub test: Dataset,
    /// Noise-free classes of the training rows.
    pub train_clean_labels: Vec<usize>,
    /// Training rows whose label was inverted.
    pub flipped: Vec<usize>,
}

fn draw_images<R: Rng + ?Sized>(count: usize, rng: &mut R) -> (BitMatrix, Vec<usize>) {
    let mut x = BitMatrix::zeros(count, N_INPUTS);
    let mut labels = Vec::with_capacity(count);
    for r in 0..count {
        let mut img = BitVector::zeros(N_INPUTS);
        for k in 0..N_INPUTS {
            if rng.gen::<bool>() {
                img.set(k, true);
            }
        }
        let class = usize::from(rng.gen::<bool>());
        let patch = if class == 1 {
            CLASS1_PATCHES[rng.gen_range(0..CLASS1_PATCHES.len())]
        } else {
            CLASS0_PATCHES[rng.gen_range(0..CLASS0_PATCHES.len())]
        };
        for (&pos, &bit) in PATCH_BITS.iter().zip(&patch) {
            img.set(pos, bit);
        }
        x.set_row(r, &img).expect("row width is fixed");
        labels.push(class);
    }
    (x, labels)
}

/// Generates one-hot (m = 2) train/test splits. Exactly
/// `round(label_noise · n_train)` training labels are inverted; test labels
/// are clean.
pub fn generate_noisy_xor<R: Rng + ?Sized>(
    n_train: usize,
    n_test: usize,
    label_noise: f64,
    rng: &mut R,
) -> Result<XorSplit> {
    if n_train == 0 || n_test == 0 {
        return Err(Error::Config("train and test sizes must be positive".into()));
    }
    if !(0.0..=1.0).contains(&label_noise) {
        return Err(Error::Config(format!(
            "label noise must be in [0, 1], got {label_noise}"
        )));
    }
    let (train_x, clean) = draw_images(n_train, rng);
    let (test_x, test_labels) = draw_images(n_test, rng);

    let n_flip = (label_noise * n_train as f64).round() as usize;
    let mut flipped = sample(rng, n_train, n_flip).into_vec();
    flipped.sort_unstable();
    let mut noisy = clean.clone();
    for &r in &flipped {
        noisy[r] = 1 - noisy[r];
    }

    let mut train = Dataset::from_labels(train_x, &noisy, 2)?;
    let mut test = Dataset::from_labels(test_x, &test_labels, 2)?;
    let names: Vec<String> = (0..N_INPUTS)
        .map(|k| format!("p{}_{}", k / SIDE, k % SIDE))
        .collect();
    for ds in [&mut train, &mut test] {
        ds.feature_names = Some(names.clone());
        ds.class_names = Some(vec!["line".into(), "diagonal".into()]);
    }
    Ok(XorSplit {
        train,
        test,
        train_clean_labels: clean,
        flipped,
    })
}

/// Class implied by the patch of a 16-pixel image, if the patch is valid.
pub fn patch_class(x: &BitVector) -> Option<usize> {
    let patch: [bool; 4] = PATCH_BITS.map(|k| x.get(k));
    if CLASS1_PATCHES.contains(&patch) {
        Some(1)
    } else if CLASS0_PATCHES.contains(&patch) {
        Some(0)
    } else {
        None
    }
}
