//! Accuracy, per-class precision/recall/F1 and confusion matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{predict, TrainedModel};
use crate::schema::Dataset;
use crate::{MlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall_accuracy: f64,
    pub per_class: BTreeMap<String, ClassMetrics>,
    /// Row and column order of `confusion`.
    pub classes: Vec<String>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub notes: Vec<String>,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl MetricsReport {
    pub fn from_confusion(classes: Vec<String>, confusion: Vec<Vec<u64>>) -> Self {
        let k = classes.len();
        let total: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..k).map(|i| confusion[i][i]).sum();
        let mut per_class = BTreeMap::new();
        let mut notes = Vec::new();
        for (i, name) in classes.iter().enumerate() {
            let tp = confusion[i][i];
            let actual: u64 = confusion[i].iter().sum();
            let predicted: u64 = (0..k).map(|r| confusion[r][i]).sum();
            if actual == 0 {
                notes.push(format!("class {name:?} absent from test data; recall set to 0"));
            }
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            per_class.insert(
                name.clone(),
                ClassMetrics {
                    precision,
                    recall,
                    f1,
                    support: actual,
                },
            );
        }
        MetricsReport {
            overall_accuracy: ratio(trace, total),
            per_class,
            classes,
            confusion,
            notes,
        }
    }

    pub fn from_labels(classes: &[String], truth: &[String], predicted: &[String]) -> Self {
        let mut classes = classes.to_vec();
        for l in truth.iter().chain(predicted) {
            if !classes.contains(l) {
                classes.push(l.clone());
            }
        }
        let pos = |l: &String| classes.iter().position(|c| c == l).unwrap();
        let mut confusion = vec![vec![0u64; classes.len()]; classes.len()];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[pos(t)][pos(p)] += 1;
        }
        Self::from_confusion(classes, confusion)
    }
}

/// Predict every test row and score against its label.
pub fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<MetricsReport> {
    let truth: Vec<String> = test
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.label.clone().ok_or_else(|| MlError::Value {
                row: i,
                column: "label".into(),
                message: "missing label".into(),
            })
        })
        .collect::<Result<_>>()?;
    let predicted = predict(model, &test.rows);
    Ok(MetricsReport::from_labels(&model.classes, &truth, &predicted))
}
