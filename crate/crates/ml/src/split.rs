//! Stratified, seeded train/test partitioning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::schema::Dataset;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub warnings: Vec<String>,
}

/// Per class, shuffle that class's rows and put `round(train_fraction * n_c)`
/// of them in the training set. A class with a single row goes entirely to
/// training.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    let labels = ds.label_indices()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut warnings = Vec::new();
    for (c, name) in ds.classes.iter().enumerate() {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        let n_train = if idx.len() == 1 {
            warnings.push(format!("class {name:?} has a single row; kept in training set"));
            1
        } else {
            ((train_fraction * idx.len() as f64).round() as usize).min(idx.len())
        };
        train.extend(idx[..n_train].iter().map(|&i| ds.rows[i].clone()));
        test.extend(idx[n_train..].iter().map(|&i| ds.rows[i].clone()));
    }
    Ok(Split {
        train: Dataset {
            rows: train,
            classes: ds.classes.clone(),
        },
        test: Dataset {
            rows: test,
            classes: ds.classes.clone(),
        },
        warnings,
    })
}
