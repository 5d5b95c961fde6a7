//! One-vs-rest logistic regression trained by full-batch gradient descent
//! on min-max normalized features.

use serde::{Deserialize, Serialize};

use crate::chi2::FeatureSelector;
use crate::model::{ModelKind, ModelParams, TrainedModel, SCHEMA_VERSION};
use crate::schema::Dataset;
use crate::{MlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub lr: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            lr: 0.1,
            iterations: 2000,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// One weight vector per class, over the selected features.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LogRegModel {
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { v - lo })
            .collect()
    }

    /// Per-class probability of membership for one selected-feature row.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let z = self.normalize(x);
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| sigmoid(w.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + b))
            .collect()
    }
}

pub(crate) fn fit_matrix(x: &[Vec<f64>], y: &[usize], n_classes: usize, p: &LogRegParams) -> LogRegModel {
    let d = x.first().map(Vec::len).unwrap_or(0);
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for row in x {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    let mut model = LogRegModel {
        weights: vec![vec![0.0; d]; n_classes],
        bias: vec![0.0; n_classes],
        min,
        max,
    };
    let z: Vec<Vec<f64>> = x.iter().map(|r| model.normalize(r)).collect();
    let n = z.len() as f64;
    for c in 0..n_classes {
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut grad = vec![0.0; d];
        for _ in 0..p.iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for (row, &label) in z.iter().zip(y) {
                let target = if label == c { 1.0 } else { 0.0 };
                let err = sigmoid(w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>() + b) - target;
                for (g, v) in grad.iter_mut().zip(row) {
                    *g += err * v;
                }
                gb += err;
            }
            for (wj, g) in w.iter_mut().zip(&grad) {
                *wj -= p.lr * (g / n + p.l2 * *wj);
            }
            b -= p.lr * gb / n;
        }
        model.weights[c] = w;
        model.bias[c] = b;
    }
    model
}

pub fn fit_logreg(train: &Dataset, selector: &FeatureSelector, params: &LogRegParams) -> Result<TrainedModel> {
    let y = train.label_indices()?;
    let present: std::collections::BTreeSet<usize> = y.iter().copied().collect();
    if present.len() < 2 {
        return Err(MlError::SingleClass);
    }
    let x = crate::model::select_rows(&train.rows, &selector.selected);
    let m = fit_matrix(&x, &y, train.classes.len(), params);
    Ok(TrainedModel {
        schema_version: SCHEMA_VERSION,
        kind: ModelKind::Logreg,
        classes: train.classes.clone(),
        feature_indices: selector.selected.clone(),
        seed: 0,
        params: ModelParams::Logreg(m),
    })
}
