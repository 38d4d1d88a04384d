//! Class-imbalance protocols.

use rand::seq::index::sample;
use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Imbalance {
    /// Drop `round(fraction · count)` examples of `class`, chosen uniformly.
    RemoveFraction { class: usize, fraction: f64 },
    /// The class at rank `r` keeps `floor(0.5^r · count)` examples. Classes
    /// not listed are left alone.
    Geometric { ranking: Vec<usize> },
}

fn rows_of(dataset: &Dataset, class: usize) -> Vec<usize> {
    (0..dataset.len())
        .filter(|&r| dataset.label(r) == Some(class))
        .collect()
}

/// Returns the surviving rows in their original order.
pub fn subsample_imbalance<R: Rng + ?Sized>(
    dataset: &Dataset,
    mode: &Imbalance,
    rng: &mut R,
) -> Result<Dataset> {
    let n_classes = dataset.n_outputs();
    let check = |class: usize| {
        if class < n_classes {
            Ok(())
        } else {
            Err(Error::UnknownClass { class, n_classes })
        }
    };
    let mut drop = vec![false; dataset.len()];
    match mode {
        Imbalance::RemoveFraction { class, fraction } => {
            check(*class)?;
            if !(0.0..=1.0).contains(fraction) {
                return Err(Error::Config(format!("fraction must be in [0, 1], got {fraction}")));
            }
            let rows = rows_of(dataset, *class);
            let n_remove = (fraction * rows.len() as f64).round() as usize;
            for pick in sample(rng, rows.len(), n_remove) {
                drop[rows[pick]] = true;
            }
        }
        Imbalance::Geometric { ranking } => {
            let mut seen = vec![false; n_classes];
            for &class in ranking {
                check(class)?;
                if std::mem::replace(&mut seen[class], true) {
                    return Err(Error::Config(format!("class {class} ranked twice")));
                }
            }
            for (rank, &class) in ranking.iter().enumerate() {
                let rows = rows_of(dataset, class);
                let keep = (0.5f64.powi(rank as i32) * rows.len() as f64).floor() as usize;
                let mut kept = vec![false; rows.len()];
                for pick in sample(rng, rows.len(), keep) {
                    kept[pick] = true;
                }
                for (r, k) in rows.iter().zip(kept) {
                    drop[*r] = !k;
                }
            }
        }
    }
    let keep: Vec<usize> = (0..dataset.len()).filter(|&r| !drop[r]).collect();
    Ok(dataset.subset(&keep))
}
