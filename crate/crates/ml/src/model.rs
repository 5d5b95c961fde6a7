//! Trained model container, prediction and JSON persistence.

use serde::{Deserialize, Serialize};

use crate::forest::{self, Node, Tree};
use crate::logreg::LogRegModel;
use crate::schema::{FeatureVector, NUM_FEATURES};
use crate::{MlError, Result};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    Forest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    Logreg(LogRegModel),
    Forest { trees: Vec<Tree> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u64,
    pub kind: ModelKind,
    pub classes: Vec<String>,
    /// Schema feature indices the model consumes, in order.
    pub feature_indices: Vec<usize>,
    pub seed: u64,
    pub params: ModelParams,
}

pub(crate) fn select_rows(rows: &[FeatureVector], features: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let v = r.features_f64();
            features.iter().map(|&f| v[f]).collect()
        })
        .collect()
}

impl TrainedModel {
    /// Class index for one row.
    pub fn predict_index(&self, row: &FeatureVector) -> usize {
        let v = row.features_f64();
        let x: Vec<f64> = self.feature_indices.iter().map(|&f| v[f]).collect();
        match &self.params {
            ModelParams::Logreg(m) => forest::argmax_first(&m.scores(&x)),
            ModelParams::Forest { trees } => forest::vote(trees, &x, self.classes.len()),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MlError::MalformedModel(m.to_owned()));
        let k = self.classes.len();
        let d = self.feature_indices.len();
        if k == 0 {
            return bad("no classes");
        }
        if d == 0 || self.feature_indices.iter().any(|&f| f >= NUM_FEATURES) {
            return bad("feature indices out of range");
        }
        let kind_matches = matches!(
            (&self.kind, &self.params),
            (ModelKind::Logreg, ModelParams::Logreg(_)) | (ModelKind::Forest, ModelParams::Forest { .. })
        );
        if !kind_matches {
            return bad("kind does not match parameters");
        }
        match &self.params {
            ModelParams::Logreg(m) => {
                let dims_ok = m.weights.len() == k
                    && m.bias.len() == k
                    && m.weights.iter().all(|w| w.len() == d)
                    && m.min.len() == d
                    && m.max.len() == d;
                if !dims_ok {
                    return bad("logistic regression dimensions");
                }
            }
            ModelParams::Forest { trees } => {
                if trees.is_empty() {
                    return bad("empty forest");
                }
                for t in trees {
                    if t.nodes.is_empty() {
                        return bad("empty tree");
                    }
                    for (i, n) in t.nodes.iter().enumerate() {
                        match n {
                            Node::Split { feature, left, right, .. } => {
                                if *feature >= d || *left <= i || *right <= i || *left >= t.nodes.len() || *right >= t.nodes.len() {
                                    return bad("tree node references");
                                }
                            }
                            Node::Leaf { counts } => {
                                if counts.len() != k {
                                    return bad("leaf class counts");
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn predict(model: &TrainedModel, rows: &[FeatureVector]) -> Vec<String> {
    rows.iter()
        .map(|r| model.classes[model.predict_index(r)].clone())
        .collect()
}

pub fn save_model(model: &TrainedModel) -> String {
    serde_json::to_string(model).expect("model serializes")
}

pub fn load_model(text: &str) -> Result<TrainedModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| MlError::MalformedModel(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(MlError::UnsupportedModelVersion(v)),
        None => return Err(MlError::MalformedModel("missing schema_version".into())),
    }
    let model: TrainedModel =
        serde_json::from_value(value).map_err(|e| MlError::MalformedModel(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
