//! Fixtures shared by the engine benchmarks.

use cotm::data::generate_noisy_xor;
use cotm::{BitMatrix, Config, Dataset, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The 2D noisy XOR training split with the desk-scale machine.
pub fn xor(n_clauses: usize) -> (Model, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let split = generate_noisy_xor(2500, 100, 0.4, &mut rng).unwrap();
    let config = Config::new(2, n_clauses, 16)
        .with_voting_margin(400)
        .with_specificity(5.0)
        .with_memory_depth(128)
        .one_hot();
    (Model::coalesced(config).unwrap(), split.train)
}

/// Random 784-bit images over ten classes, sized like binarized MNIST.
pub fn mnist_like(rows: usize, n_clauses: usize) -> (Model, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut x = BitMatrix::zeros(rows, 784);
    let mut labels = Vec::with_capacity(rows);
    for r in 0..rows {
        for k in 0..784 {
            x.set(r, k, rng.gen_bool(0.2));
        }
        labels.push(rng.gen_range(0..10));
    }
    let config = Config::new(10, n_clauses, 784)
        .with_voting_margin(625)
        .with_specificity(10.0)
        .with_memory_depth(128)
        .one_hot();
    (Model::coalesced(config).unwrap(), Dataset::from_labels(x, &labels, 10).unwrap())
}
