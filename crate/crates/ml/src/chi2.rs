//! Chi-square feature scoring over raw per-class feature sums.
//!
//! For feature `f`, `O[c]` is the sum of `f` over class-`c` rows and
//! `E[c] = n_c / n * sum(f)`. The score is the sum over classes of
//! `(O - E)^2 / E`, with `E = 0` terms contributing 0.

use serde::{Deserialize, Serialize};

use crate::schema::{Dataset, FEATURE_NAMES, NUM_FEATURES};
use crate::{MlError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelector {
    pub scores: Vec<f64>,
    /// Chosen feature indices, by descending score then ascending index.
    pub selected: Vec<usize>,
}

impl FeatureSelector {
    /// Use the given features without scoring.
    pub fn from_indices(selected: Vec<usize>) -> Self {
        FeatureSelector {
            scores: Vec::new(),
            selected,
        }
    }

    pub fn all() -> Self {
        Self::from_indices((0..NUM_FEATURES).collect())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.selected.iter().map(|&i| FEATURE_NAMES[i]).collect()
    }
}

/// One class term `(O - E)^2 / E` with `E = n_c * T / n`, evaluated as
/// `(n O - n_c T)^2 / (n * n_c * T)` in integers so that scaling every
/// count by two scales the result by exactly two.
fn term(o: u128, n_c: u128, t: u128, n: u128) -> f64 {
    if n_c == 0 || t == 0 {
        return 0.0;
    }
    let exact = (|| {
        let a = n.checked_mul(o)?;
        let b = n_c.checked_mul(t)?;
        let d = a.abs_diff(b);
        let num = d.checked_mul(d)?;
        let den = n.checked_mul(n_c)?.checked_mul(t)?;
        Some(num as f64 / den as f64)
    })();
    exact.unwrap_or_else(|| {
        let e = n_c as f64 * t as f64 / n as f64;
        let diff = o as f64 - e;
        diff * diff / e
    })
}

/// Scores for an arbitrary non-negative matrix; `labels` index classes
/// `0..n_classes`.
pub fn chi2_matrix(x: &[Vec<u64>], labels: &[usize], n_classes: usize) -> Vec<f64> {
    let d = x.first().map(Vec::len).unwrap_or(0);
    let n = x.len() as u128;
    let mut class_n = vec![0u128; n_classes];
    for &l in labels {
        class_n[l] += 1;
    }
    (0..d)
        .map(|f| {
            let mut observed = vec![0u128; n_classes];
            for (row, &l) in x.iter().zip(labels) {
                observed[l] += row[f] as u128;
            }
            let total: u128 = observed.iter().sum();
            (0..n_classes)
                .map(|c| term(observed[c], class_n[c], total, n))
                .sum()
        })
        .collect()
}

pub fn chi2_scores(ds: &Dataset) -> Result<Vec<f64>> {
    let labels = ds.label_indices()?;
    let x: Vec<Vec<u64>> = ds.rows.iter().map(|r| r.values().to_vec()).collect();
    Ok(chi2_matrix(&x, &labels, ds.classes.len()))
}

pub fn select_top_k(scores: &[f64], k: usize) -> Result<FeatureSelector> {
    if k == 0 || k > scores.len() {
        return Err(MlError::InvalidK {
            k,
            max: scores.len(),
        });
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(FeatureSelector {
        scores: scores.to_vec(),
        selected: idx,
    })
}
